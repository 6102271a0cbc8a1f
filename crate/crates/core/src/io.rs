//! Metric and graph file formats.
//!
//! * Metric JSON: `{"labels":[...],"matrix":[[...]]}`
//! * Metric CSV: headerless square matrix, one row per line
//! * Graph JSON: `{"vertices":[{"id":0,"x":..,"y":..}],"edges":[{"u":0,"v":1,"len":..}]}`
//!
//! Every float written by this module uses 17 significant digits, so values
//! survive a write/read cycle bit for bit.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, GraphSpace};
use crate::metric::{validate_metric, FiniteMetricSpace, MetricError};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("JSON error at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("CSV error at line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("invalid metric: {0}")]
    Metric(#[from] MetricError),
    #[error("invalid graph: {0}")]
    Graph(#[from] GraphError),
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        FormatError::Json { line: e.line(), column: e.column(), message: e.to_string() }
    }
}

/// Formats `x` like C's `%.17g`.
pub fn format_g17(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        let m = trim_zeros(mantissa.to_string());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    t.to_string()
}

/// serde_json formatter that writes floats with [`format_g17`].
pub struct G17Formatter;

impl serde_json::ser::Formatter for G17Formatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_g17(value).as_bytes())
    }
}

/// Serializes `value` as compact JSON with 17-significant-digit floats.
pub fn to_json_g17<T: Serialize>(value: &T) -> Result<String, FormatError> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, G17Formatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricFile {
    labels: Vec<String>,
    matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VertexRecord {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub u: usize,
    pub v: usize,
    pub len: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphFile {
    pub vertices: Vec<VertexRecord>,
    pub edges: Vec<EdgeRecord>,
}

pub fn metric_to_json(space: &FiniteMetricSpace) -> Result<String, FormatError> {
    let file = MetricFile { labels: space.labels().to_vec(), matrix: space.matrix() };
    Ok(to_json_g17(&file)? + "\n")
}

pub fn metric_to_csv(space: &FiniteMetricSpace) -> String {
    let mut out = String::new();
    for i in 0..space.len() {
        let row: Vec<String> = space.row(i).iter().map(|&v| format_g17(v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parses a metric JSON document. A graph document (with `vertices` and
/// `edges`) is accepted too and turned into its shortest-path metric.
pub fn metric_from_json(text: &str) -> Result<FiniteMetricSpace, FormatError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if value.get("vertices").is_some() && value.get("edges").is_some() {
        let graph = graph_from_json(text)?;
        return Ok(graph.metric()?);
    }
    let file: MetricFile = serde_json::from_str(text)?;
    Ok(validate_metric(&file.matrix, Some(file.labels))?)
}

pub fn metric_from_csv(text: &str) -> Result<FiniteMetricSpace, FormatError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut matrix = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| FormatError::Csv {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|e| FormatError::Csv {
                    line,
                    message: format!("`{field}`: {e}"),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        matrix.push(row);
    }
    Ok(validate_metric(&matrix, None)?)
}

pub fn graph_from_json(text: &str) -> Result<GraphSpace, FormatError> {
    let file: GraphFile = serde_json::from_str(text)?;
    Ok(GraphSpace::from_file(&file)?)
}

pub fn graph_to_json(graph: &GraphSpace) -> Result<String, FormatError> {
    Ok(to_json_g17(&graph.to_file())? + "\n")
}

fn read(path: &Path) -> Result<String, FormatError> {
    fs::read_to_string(path)
        .map_err(|source| FormatError::Io { path: path.display().to_string(), source })
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Reads a metric file; `.csv` selects CSV, anything else is JSON.
pub fn read_metric(path: &Path) -> Result<FiniteMetricSpace, FormatError> {
    let text = read(path)?;
    if is_csv(path) {
        metric_from_csv(&text)
    } else {
        metric_from_json(&text)
    }
}

pub fn write_metric(path: &Path, space: &FiniteMetricSpace) -> Result<(), FormatError> {
    let text = if is_csv(path) { metric_to_csv(space) } else { metric_to_json(space)? };
    fs::write(path, text).map_err(|source| FormatError::Io { path: path.display().to_string(), source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn g17_matches_printf() {
        assert_eq!(format_g17(1.0), "1");
        assert_eq!(format_g17(2.0), "2");
        assert_eq!(format_g17(0.1), "0.10000000000000001");
        assert_eq!(format_g17(1.9), "1.8999999999999999");
        assert_eq!(format_g17(-0.25), "-0.25");
        assert_eq!(format_g17(1e20), "1e+20");
        assert_eq!(format_g17(1.5e-7), "1.4999999999999999e-07");
        assert_eq!(format_g17(123456.0), "123456");
        assert_eq!(format_g17(0.0001), "0.0001");
    }

    proptest! {
        #[test]
        fn g17_round_trips(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL) {
            let s = format_g17(x);
            prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
            // and it is a valid JSON number
            let v: f64 = serde_json::from_str(&s).unwrap();
            prop_assert_eq!(v.to_bits(), x.to_bits());
        }
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        let m = vec![vec![0.0, 0.1, 1.9], vec![0.1, 0.0, 1.85], vec![1.9, 1.85, 0.0]];
        let s = validate_metric(&m, Some(vec!["a".into(), "b\"q".into(), "c".into()])).unwrap();
        let text = metric_to_json(&s).unwrap();
        let back = metric_from_json(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(metric_to_json(&back).unwrap(), text);
    }

    #[test]
    fn csv_round_trip() {
        let m = vec![vec![0.0, 1.0 / 3.0], vec![1.0 / 3.0, 0.0]];
        let s = validate_metric(&m, None).unwrap();
        let text = metric_to_csv(&s);
        assert_eq!(metric_from_csv(&text).unwrap(), s);
    }

    #[test]
    fn csv_errors_report_lines() {
        match metric_from_csv("0,1\n1,zz\n") {
            Err(FormatError::Csv { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match metric_from_csv("0,1\n1\n") {
            Err(FormatError::Csv { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            metric_from_csv("0,3\n2,0\n"),
            Err(FormatError::Metric(MetricError::AsymmetricMatrix { .. }))
        ));
    }

    #[test]
    fn json_errors_report_lines() {
        match metric_from_json("{\n\"labels\": [\"a\"],\n\"matrix\": [[0,]]\n}") {
            Err(FormatError::Json { line: 3, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn graph_document_reads_as_metric() {
        let text = r#"{"vertices":[{"id":0},{"id":1},{"id":2}],
                       "edges":[{"u":0,"v":1,"len":1},{"u":1,"v":2,"len":1.5}]}"#;
        let s = metric_from_json(text).unwrap();
        assert_eq!(s.d(0, 2), 2.5);
    }
}
