//! `ptolemaic`: command-line front end.
//!
//! Every subcommand prints a JSON run report on stdout. Exit status is 0 when
//! every check passes, 1 when a check fails and 2 on bad input.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use ptolemaic_core::io::{graph_to_json, metric_to_csv, metric_to_json};
use ptolemaic_core::search::{hunt, Pattern, WitnessStore};
use ptolemaic_core::spaces::{catalog_with, grid_strip_graph, random_metric, DEFAULT_RING, E2_DEFAULT_A};
use ptolemaic_core::{
    classify, embed, embed_at, read_metric, scan, strip_verify, write_metric, Condition, Family, RandomGenerator,
    StripSpec, TOL_CLASS,
};

const SCHEMA: u32 = 1;
/// Witnesses listed in a search report; the catalog file holds all of them.
const REPORTED_WITNESSES: usize = 20;

#[derive(Parser)]
#[command(name = "ptolemaic", version, about = "Four-point conditions and flat-strip diagnostics for finite metric spaces")]
struct Cli {
    /// Worker threads (default: available parallelism). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Leave `wall_time_ms` out of the report, for byte-stable output.
    #[arg(long, global = true)]
    no_timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a metric file and optionally re-serialize it.
    Validate {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify a metric file under the four-point conditions.
    Check {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "pt,qi,cosq")]
        conditions: Vec<Condition>,
    },
    /// Exhaustive quadruple scan with violation counts.
    Scan {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "pt,qi,cosq")]
        conditions: Vec<Condition>,
    },
    /// Euclidean embeddability test.
    Embed {
        file: PathBuf,
        #[arg(long)]
        basepoint: Option<usize>,
    },
    /// Generate a strip sample or a random metric space.
    Gen(GenArgs),
    /// Run the strip diagnostic battery.
    StripVerify(StripArgs),
    /// Randomized hunt for 4-point spaces with a given class signature.
    Search {
        #[arg(long, default_value_t = 10_000)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// e.g. `pt=1,qi=0,cosq=0`; omitted conditions match anything.
        #[arg(long, default_value = "")]
        signature: String,
        /// Witness catalog; an existing catalog is merged into.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the catalog spaces as metric files.
    Catalog {
        #[arg(long)]
        emit: PathBuf,
        #[arg(long = "e2-a", default_value_t = E2_DEFAULT_A)]
        e2_a: f64,
    },
}

#[derive(Args)]
struct StripArgs {
    #[arg(long, default_value = "euclidean")]
    family: Family,
    /// Strip width.
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Half length: t ranges over [-T, T].
    #[arg(long = "T", default_value_t = 5.0)]
    half_length: f64,
    #[arg(long, default_value_t = 21)]
    nt: usize,
    #[arg(long, default_value_t = 5)]
    ns: usize,
}

impl StripArgs {
    fn spec(&self) -> Result<StripSpec, String> {
        StripSpec::new(self.a, self.half_length, self.nt, self.ns, self.family).map_err(|e| e.to_string())
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    strip: StripArgs,
    /// Random generator instead of a strip: shifted-uniform, graph-metric, perturbed-euclidean.
    #[arg(long)]
    random: Option<RandomGenerator>,
    /// Point count for `--random`.
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Ring radius when writing a strip graph.
    #[arg(long, default_value_t = DEFAULT_RING)]
    k: usize,
    /// metric (JSON or CSV by extension) or graph.
    #[arg(long, default_value = "metric")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Check {
    name: String,
    pass: bool,
    #[serde(flatten)]
    data: Map<String, Value>,
}

fn check(name: impl Into<String>, pass: bool, data: Value) -> Check {
    let data = match data {
        Value::Object(m) => m,
        Value::Null => Map::new(),
        other => Map::from_iter([("value".to_string(), other)]),
    };
    Check { name: name.into(), pass, data }
}

#[derive(Serialize)]
struct RunReport {
    schema: u32,
    command: String,
    inputs_digest: String,
    checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_ms: Option<f64>,
}

/// Input failure: exit status 2.
struct InputError(String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

/// Digest over the command, its semantic flags and the bytes of every input file.
struct Digest256(Sha256);

impl Digest256 {
    fn new(command: &str) -> Self {
        let mut h = Sha256::new();
        h.update(command.as_bytes());
        Digest256(h)
    }

    fn flag(&mut self, key: &str, value: impl std::fmt::Display) {
        self.0.update(format!("\0{key}={value}").as_bytes());
    }

    fn file(&mut self, path: &Path) -> Result<(), InputError> {
        let bytes = fs::read(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
        self.0.update(b"\0file\0");
        self.0.update(&bytes);
        Ok(())
    }

    fn finish(self) -> String {
        self.0.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn conditions_label(cs: &[Condition]) -> String {
    cs.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_signature(s: &str) -> Result<Pattern, InputError> {
    let mut pattern: Pattern = [None; 3];
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| InputError(format!("signature entry `{part}` is not key=value")))?;
        let c: Condition = key.trim().parse()?;
        let v = match value.trim() {
            "1" | "true" => true,
            "0" | "false" => false,
            other => return Err(InputError(format!("signature value `{other}` is not 0 or 1"))),
        };
        pattern[Condition::ALL.iter().position(|&x| x == c).expect("known condition")] = Some(v);
    }
    Ok(pattern)
}

fn run(cli: &Cli) -> Result<(String, String, Vec<Check>), InputError> {
    Ok(match &cli.command {
        Command::Validate { file, out } => {
            let mut dg = Digest256::new("validate");
            dg.file(file)?;
            let space = read_metric(file)?;
            if let Some(out) = out {
                write_metric(out, &space)?;
            }
            let data = json!({ "points": space.len(), "max_distance": space.max_distance() });
            ("validate".into(), dg.finish(), vec![check("metric_axioms", true, data)])
        }
        Command::Check { file, conditions } | Command::Scan { file, conditions } => {
            let name = if matches!(cli.command, Command::Check { .. }) { "check" } else { "scan" };
            let mut dg = Digest256::new(name);
            dg.flag("conditions", conditions_label(conditions));
            dg.file(file)?;
            let space = read_metric(file)?;
            let reports = scan(&space, conditions)?;
            let checks = reports
                .iter()
                .map(|r| {
                    let pass = r.worst_margin >= -TOL_CLASS;
                    let mut data = json!({ "worst_margin": r.worst_margin, "witness": r.witness.indices });
                    if name == "scan" {
                        data["count_checked"] = json!(r.count_checked);
                        data["count_violations"] = json!(r.count_violations);
                    }
                    check(r.condition.to_string(), pass, data)
                })
                .collect();
            (name.into(), dg.finish(), checks)
        }
        Command::Embed { file, basepoint } => {
            let mut dg = Digest256::new("embed");
            if let Some(b) = basepoint {
                dg.flag("basepoint", b);
            }
            dg.file(file)?;
            let space = read_metric(file)?;
            let r = match basepoint {
                Some(b) => embed_at(&space, *b)?,
                None => embed(&space),
            };
            let data = json!({
                "dimension": r.dimension,
                "min_eigenvalue": r.min_eigenvalue,
                "eigenvalues": r.eigenvalues,
                "residual": r.residual,
                "basepoint": r.basepoint,
                "coordinates": r.coordinates,
            });
            ("embed".into(), dg.finish(), vec![check("embeddable", r.embeddable, data)])
        }
        Command::Gen(args) => gen(args)?,
        Command::StripVerify(args) => {
            let spec = args.spec().map_err(InputError)?;
            let mut dg = Digest256::new("strip-verify");
            dg.flag("spec", serde_json::to_string(&spec)?);
            let report = strip_verify(&spec)?;
            let checks = report
                .checks
                .iter()
                .map(|c| {
                    let mut data = json!({ "value": finite_or_null(c.value), "threshold": finite_or_null(c.threshold) });
                    if let Some(d) = &c.detail {
                        data["detail"] = json!(d);
                    }
                    check(&c.name, c.pass, data)
                })
                .collect();
            ("strip-verify".into(), dg.finish(), checks)
        }
        Command::Search { budget, seed, signature, out } => {
            if *budget == 0 {
                return Err(InputError("budget must be at least 1".into()));
            }
            let pattern = parse_signature(signature)?;
            let mut dg = Digest256::new("search");
            dg.flag("budget", budget);
            dg.flag("seed", seed);
            dg.flag("signature", format!("{pattern:?}"));
            let found = hunt(*budget, *seed, pattern);
            let count = found.len();
            let forbidden = found.iter().filter(|w| w.signature[2] && !w.signature[1]).count();
            let mut store = WitnessStore::new(found);
            if let Some(out) = out {
                if out.exists() {
                    dg.file(out)?;
                    let mut old = WitnessStore::load(out)?;
                    old.merge(store);
                    store = old;
                }
                store.persist(out)?;
            }
            let witnesses: Vec<Value> = store
                .witnesses
                .iter()
                .take(REPORTED_WITNESSES)
                .map(|w| json!({ "canonical": w.canonical, "margins": w.margins, "signature": w.signature, "provenance": w.provenance }))
                .collect();
            let checks = vec![
                check("found", true, json!({ "new": count, "catalog": store.witnesses.len(), "witnesses": witnesses })),
                check("cosq_inside_qi", forbidden == 0, json!({ "violations": forbidden })),
            ];
            ("search".into(), dg.finish(), checks)
        }
        Command::Catalog { emit, e2_a } => {
            let mut dg = Digest256::new("catalog");
            dg.flag("e2-a", e2_a);
            let spaces = catalog_with(*e2_a)?;
            fs::create_dir_all(emit).map_err(|e| InputError(format!("{}: {e}", emit.display())))?;
            let mut checks = Vec::new();
            for (name, space) in spaces {
                let file = match name.as_str() {
                    "E1" => "e1.json".to_string(),
                    n if n.starts_with("E2") => "e2.json".to_string(),
                    n => format!("{n}.json"),
                };
                let path = emit.join(&file);
                write_metric(&path, &space)?;
                let m = classify(&space)?;
                let (pt, qi, cosq) = m.signature();
                let data = json!({
                    "file": path.display().to_string(),
                    "signature": { "pt": pt, "qi": qi, "cosq": cosq },
                    "margins": { "pt": m.pt.worst_margin, "qi": m.qi.worst_margin, "cosq": m.cosq.worst_margin },
                });
                checks.push(check(name, true, data));
            }
            ("catalog".into(), dg.finish(), checks)
        }
    })
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn gen(args: &GenArgs) -> Result<(String, String, Vec<Check>), InputError> {
    let mut dg = Digest256::new("gen");
    let text = if let Some(g) = args.random {
        dg.flag("random", g);
        dg.flag("n", args.n);
        dg.flag("seed", args.seed);
        let space = random_metric(args.n, args.seed, g)?;
        render_metric(&space, args.out.as_deref())?
    } else {
        let spec = args.strip.spec().map_err(InputError)?;
        dg.flag("spec", serde_json::to_string(&spec)?);
        match args.format.as_str() {
            "metric" => render_metric(&ptolemaic_core::strip_sample(&spec)?.space, args.out.as_deref())?,
            "graph" => {
                dg.flag("k", args.k);
                graph_to_json(&grid_strip_graph(&spec, args.k)?)?
            }
            other => return Err(InputError(format!("unknown format `{other}` (metric or graph)"))),
        }
    };
    dg.flag("format", &args.format);
    match &args.out {
        Some(path) => fs::write(path, &text).map_err(|e| InputError(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    let data = json!({ "out": args.out.as_ref().map(|p| p.display().to_string()) });
    Ok(("gen".into(), dg.finish(), vec![check("generated", true, data)]))
}

fn render_metric(space: &ptolemaic_core::FiniteMetricSpace, out: Option<&Path>) -> Result<String, InputError> {
    let csv = out.is_some_and(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")));
    Ok(if csv { metric_to_csv(space) } else { metric_to_json(space)? })
}

/// Runs one command and returns the exit status with the rendered report.
fn execute(cli: &Cli) -> Result<(u8, String), InputError> {
    let start = Instant::now();
    let (command, inputs_digest, checks) = run(cli)?;
    let all_pass = checks.iter().all(|c| c.pass);
    let report = RunReport {
        schema: SCHEMA,
        command,
        inputs_digest,
        checks,
        wall_time_ms: (!cli.no_timing).then(|| start.elapsed().as_secs_f64() * 1e3),
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    Ok((if all_pass { 0 } else { 1 }, text))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().expect("thread pool is configured once");
    }
    let (code, text) = match execute(&cli) {
        Ok(r) => r,
        Err(InputError(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    // `gen` without --out already wrote the metric to stdout
    let quiet = matches!(&cli.command, Command::Gen(g) if g.out.is_none());
    // a closed pipe on the reader's side is not our failure
    let _ = if quiet { std::io::stderr().write_all(text.as_bytes()) } else { std::io::stdout().write_all(text.as_bytes()) };
    ExitCode::from(code)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exec(args: &[&str]) -> Result<(u8, Value), String> {
        let cli = Cli::try_parse_from(std::iter::once("ptolemaic").chain(args.iter().copied()).chain(["--no-timing"]))
            .map_err(|e| e.to_string())?;
        let (code, text) = execute(&cli).map_err(|InputError(m)| m)?;
        Ok((code, serde_json::from_str(&text).expect("report is JSON")))
    }

    fn check_named<'a>(report: &'a Value, name: &str) -> &'a Value {
        report["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap()
    }

    fn emit_catalog(dir: &Path, e2_a: &str) -> Value {
        let (code, report) = exec(&["catalog", "--emit", dir.to_str().unwrap(), "--e2-a", e2_a]).unwrap();
        assert_eq!(code, 0);
        report
    }

    #[test]
    fn check_exit_status_follows_the_margins() {
        let dir = tempfile::tempdir().unwrap();
        emit_catalog(dir.path(), "1.9");
        let e1 = dir.path().join("e1.json");
        let (code, report) = exec(&["check", e1.to_str().unwrap(), "--conditions", "pt,qi"]).unwrap();
        assert_eq!(code, 1);
        assert_eq!(check_named(&report, "pt")["pass"], true);
        assert_eq!(check_named(&report, "qi")["pass"], false);
        assert!((check_named(&report, "qi")["worst_margin"].as_f64().unwrap() + 0.25).abs() < 1e-12);

        let square = dir.path().join("square.json");
        let (code, _) = exec(&["check", square.to_str().unwrap()]).unwrap();
        assert_eq!(code, 0);
    }

    #[test]
    fn bad_input_is_an_input_error() {
        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("bad.csv");
        fs::write(&bad, "a,b\n0,1\n2,0\n").unwrap();
        assert!(exec(&["validate", bad.to_str().unwrap()]).is_err());
        assert!(exec(&["check", dir.path().join("missing.json").to_str().unwrap()]).is_err());
        assert!(exec(&["search", "--budget", "10", "--signature", "pt=2"]).is_err());
        assert!(exec(&["search", "--budget", "0"]).is_err());
        assert!(exec(&["check", bad.to_str().unwrap(), "--conditions", "nope"]).is_err());
    }

    #[test]
    fn validate_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        emit_catalog(dir.path(), "1.9");
        for name in ["e1.json", "e2.json", "square.json", "tetrahedron.json"] {
            let src = dir.path().join(name);
            let copy = dir.path().join(format!("copy-{name}"));
            let (code, _) = exec(&["validate", src.to_str().unwrap(), "--out", copy.to_str().unwrap()]).unwrap();
            assert_eq!(code, 0);
            assert_eq!(fs::read(&src).unwrap(), fs::read(&copy).unwrap(), "{name}");
        }
        let e1 = read_metric(&dir.path().join("e1.json")).unwrap();
        assert_eq!(classify(&e1).unwrap().signature(), (true, false, false));
    }

    #[test]
    fn catalog_e2_loses_cosq_below_the_threshold() {
        let dir = tempfile::tempdir().unwrap();
        emit_catalog(dir.path(), "1.5");
        let e2 = read_metric(&dir.path().join("e2.json")).unwrap();
        let m = classify(&e2).unwrap();
        assert!(!m.signature().2);
        // (1 + 1.5)^2 - 8 over D^2 = 4
        assert!((m.cosq.worst_margin + 1.75 / 4.0).abs() < 1e-12, "{}", m.cosq.worst_margin);
        emit_catalog(dir.path(), "1.9");
        let e2 = read_metric(&dir.path().join("e2.json")).unwrap();
        assert_eq!(classify(&e2).unwrap().signature(), (false, true, true));
    }

    #[test]
    fn strip_verify_separates_the_families() {
        let (code, flat) = exec(&["strip-verify", "--T", "2", "--nt", "9"]).unwrap();
        assert_eq!(code, 0, "{flat:#}");
        let (code, lp) = exec(&["strip-verify", "--family", "lp:4", "--T", "2", "--nt", "9"]).unwrap();
        assert_eq!(code, 1);
        assert_eq!(check_named(&lp, "scan_pt")["pass"], false);
        let (_, snow) = exec(&["strip-verify", "--family", "snowflake:1.0", "--T", "2", "--nt", "9"]).unwrap();
        assert_eq!(snow["checks"], flat["checks"]);
    }

    #[test]
    fn search_merges_into_an_existing_catalog() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("w.json");
        let args = |seed: &'static str| {
            ["search", "--budget", "2000", "--seed", seed, "--signature", "pt=1,qi=0", "--out"]
        };
        let mut first: Vec<&str> = args("1").to_vec();
        first.push(out.to_str().unwrap());
        let (code, r1) = exec(&first).unwrap();
        assert_eq!(code, 0);
        let n1 = check_named(&r1, "found")["catalog"].as_u64().unwrap();
        assert!(n1 > 0);
        // rerunning the same seed adds nothing
        let (_, again) = exec(&first).unwrap();
        assert_eq!(check_named(&again, "found")["catalog"].as_u64().unwrap(), n1);
        let mut second: Vec<&str> = args("2").to_vec();
        second.push(out.to_str().unwrap());
        let (_, r2) = exec(&second).unwrap();
        assert!(check_named(&r2, "found")["catalog"].as_u64().unwrap() >= n1);
        let store = WitnessStore::load(&out).unwrap();
        assert!(store.witnesses.iter().all(|w| w.signature[0] && !w.signature[1]));
    }

    #[test]
    fn digest_ignores_thread_count_but_not_flags() {
        let dir = tempfile::tempdir().unwrap();
        emit_catalog(dir.path(), "1.9");
        let f = dir.path().join("e1.json");
        let f = f.to_str().unwrap();
        let (_, a) = exec(&["check", f]).unwrap();
        let (_, b) = exec(&["check", f, "--threads", "3"]).unwrap();
        let (_, c) = exec(&["check", f, "--conditions", "pt"]).unwrap();
        assert_eq!(a["inputs_digest"], b["inputs_digest"]);
        assert_ne!(a["inputs_digest"], c["inputs_digest"]);
    }

    #[test]
    fn signature_parser() {
        assert_eq!(parse_signature("pt=1, cosq=0").ok(), Some([Some(true), None, Some(false)]));
        assert_eq!(parse_signature("").ok(), Some([None; 3]));
        assert!(parse_signature("qi").is_err());
    }
}
