//! Rejection-sampling hunt for 4-point spaces with a prescribed class
//! signature, and a deduplicated on-disk witness catalog.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::to_json_g17;
use crate::metric::{validate_metric, FiniteMetricSpace, Quadruple, QuadrupleReport, TOL_CLASS};
use crate::spaces::{e1, e2, metric_closure, random_metric_with, RandomGenerator};

/// Absolute tolerance on max-normalized canonical vectors.
pub const DEDUP_TOL: f64 = 1e-9;
/// Relative jitter applied to catalog spaces by the perturbed sources.
pub const CATALOG_JITTER: f64 = 0.02;
const STORE_SCHEMA: u32 = 1;

/// Where one sample comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    ShiftedUniform,
    GraphMetric,
    PerturbedEuclidean,
    /// E1 with every distance scaled by an independent factor `1 +- 2%`.
    PerturbedE1,
    /// E2(a) with `a` uniform in `[1.8, 2)`, then jittered like `PerturbedE1`.
    PerturbedE2,
}

impl Source {
    pub const ALL: [Source; 5] = [
        Source::ShiftedUniform,
        Source::GraphMetric,
        Source::PerturbedEuclidean,
        Source::PerturbedE1,
        Source::PerturbedE2,
    ];
}

/// Target class signature; `None` matches either outcome.
pub type Pattern = [Option<bool>; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: Source,
    pub seed: u64,
    pub sample: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub space: FiniteMetricSpace,
    /// Membership in (PT, QI, cosq).
    pub signature: [bool; 3],
    /// Margins for (PT, QI, cosq).
    pub margins: [f64; 3],
    pub canonical: [f64; 6],
    pub provenance: Provenance,
}

impl Witness {
    pub fn new(space: FiniteMetricSpace, provenance: Provenance) -> Self {
        assert_eq!(space.len(), 4, "witnesses are 4-point spaces");
        let r = QuadrupleReport::evaluate(Quadruple::from_space(&space, [0, 1, 2, 3]));
        let margins = [r.margin_pt, r.margin_qi, r.margin_cosq];
        Witness {
            signature: margins.map(|m| m >= -TOL_CLASS),
            margins,
            canonical: canonicalize(&space),
            space,
            provenance,
        }
    }

    pub fn matches(&self, pattern: &Pattern) -> bool {
        pattern.iter().zip(self.signature).all(|(p, s)| p.is_none_or(|p| p == s))
    }

    fn key(&self) -> [f64; 6] {
        let m = self.canonical.iter().copied().fold(0.0, f64::max);
        if m > 0.0 {
            self.canonical.map(|v| v / m)
        } else {
            self.canonical
        }
    }
}

/// Lexicographically smallest distance vector `(d12, d13, d14, d23, d24, d34)`
/// over the 24 relabelings of a 4-point space.
pub fn canonicalize(space: &FiniteMetricSpace) -> [f64; 6] {
    assert_eq!(space.len(), 4, "canonical form is defined for 4 points");
    let mut best: Option<[f64; 6]> = None;
    for p in permutations4() {
        let v = [
            space.d(p[0], p[1]),
            space.d(p[0], p[2]),
            space.d(p[0], p[3]),
            space.d(p[1], p[2]),
            space.d(p[1], p[3]),
            space.d(p[2], p[3]),
        ];
        if best.is_none_or(|b| lex_cmp(&v, &b).is_lt()) {
            best = Some(v);
        }
    }
    best.expect("24 permutations")
}

fn lex_cmp(a: &[f64; 6], b: &[f64; 6]) -> std::cmp::Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
}

/// All 24 permutations of `0..4` in lexicographic order.
pub fn permutations4() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    if (0..4).all(|k| p.contains(&k)) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

/// Independent per-sample stream: splitmix64 of `(seed, sample)`.
fn sample_rng(seed: u64, sample: u64) -> ChaCha8Rng {
    let mut z = seed ^ sample.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

fn jitter(space: &FiniteMetricSpace, rng: &mut impl Rng) -> FiniteMetricSpace {
    let mut m = space.matrix();
    for i in 0..4 {
        for j in (i + 1)..4 {
            let f = rng.random_range((1.0 - CATALOG_JITTER)..=(1.0 + CATALOG_JITTER));
            m[i][j] *= f;
            m[j][i] = m[i][j];
        }
    }
    validate_metric(&metric_closure(m), Some(space.labels().to_vec())).expect("closure is a metric")
}

/// Draws sample `index` of the stream `seed` from the given source.
pub fn sample_space(source: Source, seed: u64, index: u64) -> FiniteMetricSpace {
    let mut rng = sample_rng(seed, index);
    let random = |g, rng: &mut ChaCha8Rng| random_metric_with(4, rng, g).expect("four points");
    match source {
        Source::ShiftedUniform => random(RandomGenerator::ShiftedUniform, &mut rng),
        Source::GraphMetric => random(RandomGenerator::GraphMetric, &mut rng),
        Source::PerturbedEuclidean => random(RandomGenerator::PerturbedEuclidean, &mut rng),
        Source::PerturbedE1 => jitter(&e1(), &mut rng),
        Source::PerturbedE2 => {
            let a = rng.random_range(1.8..2.0);
            jitter(&e2(a).expect("a in (1, 2)"), &mut rng)
        }
    }
}

/// Mixed hunt: sample `i` uses source `ALL[i % 5]`.
pub fn hunt(budget: u64, seed: u64, pattern: Pattern) -> Vec<Witness> {
    hunt_from(&Source::ALL, budget, seed, pattern)
}

/// Hunt cycling over `sources`. Samples are evaluated in parallel on
/// independent streams, so the result does not depend on the worker count.
pub fn hunt_from(sources: &[Source], budget: u64, seed: u64, pattern: Pattern) -> Vec<Witness> {
    assert!(!sources.is_empty(), "at least one source");
    let found: Vec<Witness> = (0..budget)
        .into_par_iter()
        .filter_map(|i| {
            let source = sources[(i % sources.len() as u64) as usize];
            let w = Witness::new(sample_space(source, seed, i), Provenance { source, seed, sample: i });
            assert!(
                !(w.signature[2] && !w.signature[1]),
                "cosq member outside QI: {:?}",
                w.margins
            );
            w.matches(&pattern).then_some(w)
        })
        .collect();
    dedup(found)
}

/// Keeps the first witness of every isometry class (up to scale), in input
/// order.
pub fn dedup(witnesses: Vec<Witness>) -> Vec<Witness> {
    // kept keys sorted by first component, for a windowed lookup
    let mut kept: Vec<[f64; 6]> = Vec::new();
    let mut out = Vec::new();
    for w in witnesses {
        let key = w.key();
        let lo = kept.partition_point(|k| k[0] < key[0] - DEDUP_TOL);
        let dup = kept[lo..]
            .iter()
            .take_while(|k| k[0] <= key[0] + DEDUP_TOL)
            .any(|k| k.iter().zip(&key).all(|(a, b)| (a - b).abs() <= DEDUP_TOL));
        if !dup {
            let at = kept.partition_point(|k| k[0] < key[0]);
            kept.insert(at, key);
            out.push(w);
        }
    }
    out
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("corrupt witness catalog {path}: {message}")]
    CorruptCatalog { path: String, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WitnessStore {
    pub witnesses: Vec<Witness>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StoreFile {
    schema: u32,
    witnesses: Vec<Witness>,
}

impl WitnessStore {
    pub fn new(witnesses: Vec<Witness>) -> Self {
        WitnessStore { witnesses: dedup(witnesses) }
    }

    /// Adds `other`'s witnesses, dropping isometric duplicates.
    pub fn merge(&mut self, other: WitnessStore) {
        let mut all = std::mem::take(&mut self.witnesses);
        all.extend(other.witnesses);
        self.witnesses = dedup(all);
    }

    pub fn to_json(&self) -> String {
        let file = StoreFile { schema: STORE_SCHEMA, witnesses: self.witnesses.clone() };
        to_json_g17(&file).expect("witnesses serialize") + "\n"
    }

    pub fn from_json(text: &str, path: &str) -> Result<Self, CatalogError> {
        let corrupt = |message: String| CatalogError::CorruptCatalog { path: path.to_string(), message };
        let file: StoreFile = serde_json::from_str(text).map_err(|e| corrupt(e.to_string()))?;
        if file.schema != STORE_SCHEMA {
            return Err(corrupt(format!("unsupported schema {}", file.schema)));
        }
        for (k, w) in file.witnesses.iter().enumerate() {
            let fresh = Witness::new(w.space.clone(), w.provenance);
            if fresh.canonical != w.canonical || fresh.signature != w.signature {
                return Err(corrupt(format!("witness {k} does not match its space")));
            }
        }
        Ok(WitnessStore { witnesses: file.witnesses })
    }

    pub fn persist(&self, path: &Path) -> Result<(), CatalogError> {
        fs::write(path, self.to_json()).map_err(|source| CatalogError::Io { path: path.display().to_string(), source })
    }

    pub fn load(path: &Path) -> Result<Self, CatalogError> {
        let text = fs::read_to_string(path)
            .map_err(|source| CatalogError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text, &path.display().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutations_are_complete() {
        let p = permutations4();
        assert_eq!(p.len(), 24);
        assert_eq!(p[0], [0, 1, 2, 3]);
        assert_eq!(p[23], [3, 2, 1, 0]);
    }

    #[test]
    fn e1_canonical_form() {
        // the long edge must sit last: (1,1,1,1,1,2)
        assert_eq!(canonicalize(&e1()), [1.0, 1.0, 1.0, 1.0, 1.0, 2.0]);
        let c2 = canonicalize(&e2(1.9).unwrap());
        assert_eq!(c2, [1.0, 1.0, 2.0, 2.0, 1.9, 1.9]);
        assert_ne!(c2, canonicalize(&e1()));
    }

    #[test]
    fn canonical_form_ignores_relabeling() {
        let s = e2(1.9).unwrap();
        let want = canonicalize(&s);
        for p in permutations4() {
            let m: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| s.d(p[i], p[j])).collect()).collect();
            assert_eq!(canonicalize(&validate_metric(&m, None).unwrap()), want);
        }
    }

    #[test]
    fn witness_signatures() {
        let prov = Provenance { source: Source::PerturbedE1, seed: 0, sample: 0 };
        assert_eq!(Witness::new(e1(), prov).signature, [true, false, false]);
        assert_eq!(Witness::new(e2(1.9).unwrap(), prov).signature, [false, true, true]);
        let w = Witness::new(e1(), prov);
        assert!(w.matches(&[Some(true), Some(false), None]));
        assert!(!w.matches(&[Some(false), None, None]));
    }

    #[test]
    fn dedup_is_scale_invariant() {
        let prov = Provenance { source: Source::PerturbedE1, seed: 0, sample: 0 };
        let big = validate_metric(&e1().matrix().iter().map(|r| r.iter().map(|v| 3.0 * v).collect()).collect::<Vec<_>>(), None)
            .unwrap();
        let out = dedup(vec![Witness::new(e1(), prov), Witness::new(big, prov), Witness::new(e2(1.9).unwrap(), prov)]);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].space, e1());
    }

    #[test]
    fn hunt_is_deterministic_and_matches_pattern() {
        let pattern = [Some(false), Some(true), Some(true)];
        let a = hunt(2000, 7, pattern);
        assert!(!a.is_empty());
        assert!(a.iter().all(|w| w.matches(&pattern)));
        let b = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| hunt(2000, 7, pattern));
        assert_eq!(a, b);
    }

    #[test]
    fn truncated_store_is_corrupt() {
        let prov = Provenance { source: Source::PerturbedE1, seed: 0, sample: 0 };
        let text = WitnessStore::new(vec![Witness::new(e1(), prov)]).to_json();
        let cut = &text[..text.len() / 2];
        assert!(matches!(WitnessStore::from_json(cut, "x"), Err(CatalogError::CorruptCatalog { .. })));
        let back = WitnessStore::from_json(&text, "x").unwrap();
        assert_eq!(back.witnesses[0].canonical, canonicalize(&e1()));
    }
}
