//! Finite metric spaces and the three four-point conditions.
//!
//! For four points `x, y, z, w` the Ptolemy inequality, the quadrilateral
//! inequality and the cosq condition are stated for one labelling. A space is
//! a member of a class when the inequality holds for *every* relabelling. The
//! 24 relabellings collapse onto a handful of distinct checks:
//!
//! * Ptolemy: each side is a product over one of the three diagonal pairings
//!   `{xy,zw}`, `{xz,yw}`, `{xw,yz}`. A relabelling only chooses which pairing
//!   sits on the left, so three checks suffice.
//! * Quadrilateral: the left side is the squared pairing, the right side the
//!   remaining four squares. Again three checks.
//! * cosq: the left pairing, then which of the two remaining pairings enters
//!   squared and which enters as the mixed product. Six ordered checks.
//!
//! The reductions are cross-checked against all 24 permutations in the tests.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Triangle-inequality slack, relative to the largest matrix entry.
pub const TOL_TRIANGLE: f64 = 1e-9;
/// A worst margin at or above `-TOL_CLASS` counts as membership.
pub const TOL_CLASS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("distance matrix is empty")]
    Empty,
    #[error("row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("{labels} labels supplied for {points} points")]
    LabelCount { labels: usize, points: usize },
    #[error("entry ({i}, {j}) is not finite")]
    NonFinite { i: usize, j: usize },
    #[error("matrix is not symmetric at ({i}, {j}): {a} vs {b}")]
    AsymmetricMatrix { i: usize, j: usize, a: f64, b: f64 },
    #[error("negative distance {value} at ({i}, {j})")]
    NegativeDistance { i: usize, j: usize, value: f64 },
    #[error("nonzero diagonal entry {value} at ({i}, {i})")]
    NonzeroDiagonal { i: usize, value: f64 },
    #[error("points {i} and {j} are at distance zero")]
    ZeroOffDiagonal { i: usize, j: usize },
    #[error("triangle inequality fails: d({i},{k}) > d({i},{j}) + d({j},{k})")]
    TriangleViolation { i: usize, j: usize, k: usize },
    #[error("at least 4 points are required, got {n}")]
    TooFewPoints { n: usize },
}

/// A validated finite metric space. Immutable once built.
///
/// Serializes as `{"labels": [...], "matrix": [[...]]}`; deserializing runs
/// the full validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MetricRecord", into = "MetricRecord")]
pub struct FiniteMetricSpace {
    labels: Vec<String>,
    n: usize,
    dist: Vec<f64>,
}

/// Plain serialized form of a [`FiniteMetricSpace`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricRecord {
    pub labels: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
}

impl From<FiniteMetricSpace> for MetricRecord {
    fn from(s: FiniteMetricSpace) -> Self {
        MetricRecord { matrix: s.matrix(), labels: s.labels }
    }
}

impl TryFrom<MetricRecord> for FiniteMetricSpace {
    type Error = MetricError;

    fn try_from(r: MetricRecord) -> Result<Self, MetricError> {
        validate_metric(&r.matrix, Some(r.labels))
    }
}

/// Checks every metric axiom and builds the space.
///
/// Missing labels default to the point indices.
pub fn validate_metric(
    matrix: &[Vec<f64>],
    labels: Option<Vec<String>>,
) -> Result<FiniteMetricSpace, MetricError> {
    let n = matrix.len();
    if n == 0 {
        return Err(MetricError::Empty);
    }
    for (row, r) in matrix.iter().enumerate() {
        if r.len() != n {
            return Err(MetricError::NotSquare { row, len: r.len(), expected: n });
        }
    }
    let labels = match labels {
        Some(l) if l.len() != n => {
            return Err(MetricError::LabelCount { labels: l.len(), points: n })
        }
        Some(l) => l,
        None => default_labels(n),
    };
    let dist: Vec<f64> = matrix.iter().flatten().copied().collect();
    let space = FiniteMetricSpace { labels, n, dist };
    space.check_pointwise()?;
    space.check_triangle()?;
    Ok(space)
}

pub(crate) fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

impl FiniteMetricSpace {
    /// Builds a space from a row-major matrix that is a metric by construction
    /// (shortest-path closures, closed-form norms). Pointwise axioms are still
    /// checked; the cubic triangle pass is skipped.
    pub(crate) fn from_trusted(labels: Vec<String>, dist: Vec<f64>) -> Result<Self, MetricError> {
        let n = labels.len();
        debug_assert_eq!(dist.len(), n * n);
        let space = FiniteMetricSpace { labels, n, dist };
        space.check_pointwise()?;
        Ok(space)
    }

    fn check_pointwise(&self) -> Result<(), MetricError> {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                if !self.d(i, j).is_finite() {
                    return Err(MetricError::NonFinite { i, j });
                }
            }
        }
        for i in 0..n {
            let v = self.d(i, i);
            if v != 0.0 {
                return Err(MetricError::NonzeroDiagonal { i, value: v });
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (self.d(i, j), self.d(j, i));
                if a != b {
                    return Err(MetricError::AsymmetricMatrix { i, j, a, b });
                }
                if a < 0.0 {
                    return Err(MetricError::NegativeDistance { i, j, value: a });
                }
                if a == 0.0 {
                    return Err(MetricError::ZeroOffDiagonal { i, j });
                }
            }
        }
        Ok(())
    }

    fn check_triangle(&self) -> Result<(), MetricError> {
        let n = self.n;
        let tol = TOL_TRIANGLE * self.max_distance();
        // find_map_first keeps the reported triple independent of scheduling.
        let bad = (0..n).into_par_iter().find_map_first(|i| {
            let row_i = self.row(i);
            for j in 0..n {
                let dij = row_i[j];
                let row_j = self.row(j);
                for k in 0..n {
                    if row_i[k] > dij + row_j[k] + tol {
                        return Some((i, j, k));
                    }
                }
            }
            None
        });
        match bad {
            Some((i, j, k)) => Err(MetricError::TriangleViolation { i, j, k }),
            None => Ok(()),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn max_distance(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// Sub-space on the given points, in the given order.
    pub fn subspace(&self, points: &[usize]) -> FiniteMetricSpace {
        let labels = points.iter().map(|&p| self.labels[p].clone()).collect();
        let dist = points
            .iter()
            .flat_map(|&a| points.iter().map(move |&b| (a, b)))
            .map(|(a, b)| self.d(a, b))
            .collect();
        FiniteMetricSpace { labels, n: points.len(), dist }
    }

    pub fn quadruple(&self, i: usize, j: usize, k: usize, l: usize) -> Quadruple {
        Quadruple::from_space(self, [i, j, k, l])
    }
}

/// Four points of a space with their six pairwise distances.
///
/// Distances are stored as `d01, d02, d03, d12, d13, d23`: writing the points
/// as `x, y, z, w` this is `|xy|, |xz|, |xw|, |yz|, |yw|, |zw|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadruple {
    pub indices: [usize; 4],
    pub d: [f64; 6],
}

/// Edge positions `(a, b)` of the three diagonal pairings in `Quadruple::d`:
/// `{xy, zw}`, `{xz, yw}`, `{xw, yz}`.
const PAIRINGS: [(usize, usize); 3] = [(0, 5), (1, 4), (2, 3)];

impl Quadruple {
    /// Reads the six distances of `points` from `space`, sorting the indices
    /// into canonical increasing order.
    pub fn from_space(space: &FiniteMetricSpace, mut points: [usize; 4]) -> Self {
        points.sort_unstable();
        let [a, b, c, e] = points;
        Quadruple {
            indices: points,
            d: [
                space.d(a, b),
                space.d(a, c),
                space.d(a, e),
                space.d(b, c),
                space.d(b, e),
                space.d(c, e),
            ],
        }
    }

    /// A free-standing quadruple (indices `0..4`) from its six distances.
    pub fn from_distances(d: [f64; 6]) -> Self {
        Quadruple { indices: [0, 1, 2, 3], d }
    }

    fn max_distance(&self) -> f64 {
        self.d.iter().copied().fold(0.0, f64::max)
    }
}

/// The diagonal-pairing products `(|xy||zw|, |xz||yw|, |xw||yz|)`.
pub fn pairing_products(q: &Quadruple) -> (f64, f64, f64) {
    let p = PAIRINGS.map(|(a, b)| q.d[a] * q.d[b]);
    (p[0], p[1], p[2])
}

/// Normalized Ptolemy margin: `min_k (p_i + p_j - p_k) / max p`.
pub fn check_pt(q: &Quadruple) -> f64 {
    let (p1, p2, p3) = pairing_products(q);
    let norm = p1.max(p2).max(p3);
    if norm == 0.0 {
        return 0.0;
    }
    let m = (p2 + p3 - p1).min(p1 + p3 - p2).min(p1 + p2 - p3);
    m / norm
}

/// Unnormalized quadrilateral slack per left-hand pairing.
#[inline]
fn qi_slacks(q: &Quadruple) -> [f64; 3] {
    let s = PAIRINGS.map(|(a, b)| q.d[a] * q.d[a] + q.d[b] * q.d[b]);
    [s[1] + s[2] - s[0], s[0] + s[2] - s[1], s[0] + s[1] - s[2]]
}

/// Normalized quadrilateral-inequality margin, by the squared diameter.
pub fn check_qi(q: &Quadruple) -> f64 {
    let dmax = q.max_distance();
    if dmax == 0.0 {
        return 0.0;
    }
    let s = qi_slacks(q);
    s[0].min(s[1]).min(s[2]) / (dmax * dmax)
}

#[inline]
fn cosq_min_slack(q: &Quadruple, qi: &[f64; 3]) -> f64 {
    // With the left pairing k fixed, putting pairing l = (a, b) into the mixed
    // product turns a^2 + b^2 into 2ab, i.e. subtracts (a - b)^2 from the
    // quadrilateral slack. Subtracting a nonnegative number keeps cosq <= QI
    // exactly in floating point as well.
    let gap = PAIRINGS.map(|(a, b)| {
        let t = q.d[a] - q.d[b];
        t * t
    });
    let mut m = f64::INFINITY;
    for (k, &slack) in qi.iter().enumerate() {
        for (l, &g) in gap.iter().enumerate() {
            if l != k {
                m = m.min(slack - g);
            }
        }
    }
    m
}

/// Normalized cosq margin over the six ordered assignments.
pub fn check_cosq(q: &Quadruple) -> f64 {
    let dmax = q.max_distance();
    if dmax == 0.0 {
        return 0.0;
    }
    let qi = qi_slacks(q);
    cosq_min_slack(q, &qi) / (dmax * dmax)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Pt,
    Qi,
    Cosq,
}

impl Condition {
    pub const ALL: [Condition; 3] = [Condition::Pt, Condition::Qi, Condition::Cosq];

    pub fn margin(self, q: &Quadruple) -> f64 {
        match self {
            Condition::Pt => check_pt(q),
            Condition::Qi => check_qi(q),
            Condition::Cosq => check_cosq(q),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Condition::Pt => "pt",
            Condition::Qi => "qi",
            Condition::Cosq => "cosq",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pt" => Ok(Condition::Pt),
            "qi" => Ok(Condition::Qi),
            "cosq" => Ok(Condition::Cosq),
            other => Err(format!("unknown condition `{other}` (expected pt, qi or cosq)")),
        }
    }
}

/// All three margins of one quadruple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadrupleReport {
    pub quadruple: Quadruple,
    pub margin_pt: f64,
    pub margin_qi: f64,
    pub margin_cosq: f64,
}

impl QuadrupleReport {
    pub fn evaluate(q: Quadruple) -> Self {
        let qi = qi_slacks(&q);
        let dmax = q.max_distance();
        let (margin_qi, margin_cosq) = if dmax == 0.0 {
            (0.0, 0.0)
        } else {
            let d2 = dmax * dmax;
            (qi[0].min(qi[1]).min(qi[2]) / d2, cosq_min_slack(&q, &qi) / d2)
        };
        QuadrupleReport { quadruple: q, margin_pt: check_pt(&q), margin_qi, margin_cosq }
    }

    pub fn margin(&self, c: Condition) -> f64 {
        match c {
            Condition::Pt => self.margin_pt,
            Condition::Qi => self.margin_qi,
            Condition::Cosq => self.margin_cosq,
        }
    }
}

/// Space-level outcome of scanning one condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: Condition,
    pub worst_margin: f64,
    pub witness: Quadruple,
    pub count_checked: u64,
    pub count_violations: u64,
}

#[derive(Clone, Copy)]
struct Worst {
    margin: f64,
    indices: [usize; 4],
    violations: u64,
}

impl Worst {
    const NONE: Worst = Worst { margin: f64::INFINITY, indices: [usize::MAX; 4], violations: 0 };

    fn observe(&mut self, margin: f64, indices: [usize; 4]) {
        if margin < 0.0 {
            self.violations += 1;
        }
        if worse(margin, indices, self.margin, self.indices) {
            self.margin = margin;
            self.indices = indices;
        }
    }

    fn merge(self, other: Worst) -> Worst {
        let violations = self.violations + other.violations;
        let pick = if worse(other.margin, other.indices, self.margin, self.indices) {
            other
        } else {
            self
        };
        Worst { violations, ..pick }
    }
}

/// Total order used for the worst witness: smaller margin first, then the
/// lexicographically smaller quadruple.
#[inline]
fn worse(m: f64, idx: [usize; 4], than_m: f64, than_idx: [usize; 4]) -> bool {
    match m.total_cmp(&than_m) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => idx < than_idx,
    }
}

/// Checks every 4-subset of `space` against `conditions`.
///
/// Work is split over the current rayon pool. The reduction is a minimum under
/// a total order plus integer sums, so reports are identical for any number of
/// workers.
pub fn scan(
    space: &FiniteMetricSpace,
    conditions: &[Condition],
) -> Result<Vec<ConditionReport>, MetricError> {
    let n = space.len();
    if n < 4 {
        return Err(MetricError::TooFewPoints { n });
    }
    let mut conds: Vec<Condition> = conditions.to_vec();
    conds.sort_unstable();
    conds.dedup();
    let want = [
        conds.contains(&Condition::Pt),
        conds.contains(&Condition::Qi),
        conds.contains(&Condition::Cosq),
    ];

    let worst = (0..n - 3)
        .into_par_iter()
        .flat_map_iter(|i| ((i + 1)..n - 2).map(move |j| (i, j)))
        .fold(
            || [Worst::NONE; 3],
            |mut acc, (i, j)| {
                scan_pair(space, i, j, want, &mut acc);
                acc
            },
        )
        .reduce(
            || [Worst::NONE; 3],
            |a, b| [a[0].merge(b[0]), a[1].merge(b[1]), a[2].merge(b[2])],
        );

    let total = binomial4(n);
    Ok(conds
        .iter()
        .map(|&c| {
            let w = worst[c as usize];
            let [a, b, cc, d] = w.indices;
            ConditionReport {
                condition: c,
                worst_margin: w.margin,
                witness: space.quadruple(a, b, cc, d),
                count_checked: total,
                count_violations: w.violations,
            }
        })
        .collect())
}

fn scan_pair(space: &FiniteMetricSpace, i: usize, j: usize, want: [bool; 3], acc: &mut [Worst; 3]) {
    let n = space.len();
    let ri = space.row(i);
    let rj = space.row(j);
    let dij = ri[j];
    for k in (j + 1)..n - 1 {
        let rk = space.row(k);
        let (dik, djk) = (ri[k], rj[k]);
        for l in (k + 1)..n {
            let q = Quadruple { indices: [i, j, k, l], d: [dij, dik, ri[l], djk, rj[l], rk[l]] };
            if want[0] {
                acc[0].observe(check_pt(&q), q.indices);
            }
            if want[1] || want[2] {
                let dmax = q.max_distance();
                let d2 = dmax * dmax;
                let qi = qi_slacks(&q);
                if want[1] {
                    acc[1].observe(qi[0].min(qi[1]).min(qi[2]) / d2, q.indices);
                }
                if want[2] {
                    acc[2].observe(cosq_min_slack(&q, &qi) / d2, q.indices);
                }
            }
        }
    }
}

fn binomial4(n: usize) -> u64 {
    let n = n as u64;
    if n < 4 {
        return 0;
    }
    n * (n - 1) * (n - 2) * (n - 3) / 24
}

/// Membership of one class, with the worst quadruple attached on failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassVerdict {
    pub member: bool,
    pub worst_margin: f64,
    pub witness: Option<Quadruple>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub pt: ClassVerdict,
    pub qi: ClassVerdict,
    pub cosq: ClassVerdict,
}

impl Membership {
    pub fn signature(&self) -> (bool, bool, bool) {
        (self.pt.member, self.qi.member, self.cosq.member)
    }

    pub fn verdict(&self, c: Condition) -> &ClassVerdict {
        match c {
            Condition::Pt => &self.pt,
            Condition::Qi => &self.qi,
            Condition::Cosq => &self.cosq,
        }
    }
}

pub fn classify(space: &FiniteMetricSpace) -> Result<Membership, MetricError> {
    let reports = scan(space, &Condition::ALL)?;
    let verdict = |r: &ConditionReport| {
        let member = r.worst_margin >= -TOL_CLASS;
        ClassVerdict {
            member,
            worst_margin: r.worst_margin,
            witness: (!member).then_some(r.witness),
        }
    };
    Ok(Membership { pt: verdict(&reports[0]), qi: verdict(&reports[1]), cosq: verdict(&reports[2]) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e1() -> FiniteMetricSpace {
        validate_metric(
            &[
                vec![0.0, 2.0, 1.0, 1.0],
                vec![2.0, 0.0, 1.0, 1.0],
                vec![1.0, 1.0, 0.0, 1.0],
                vec![1.0, 1.0, 1.0, 0.0],
            ],
            None,
        )
        .unwrap()
    }

    #[test]
    fn single_point_is_valid() {
        let s = validate_metric(&[vec![0.0]], None).unwrap();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn validation_errors_name_the_offender() {
        assert_eq!(
            validate_metric(&[vec![0.0, 3.0], vec![2.0, 0.0]], None),
            Err(MetricError::AsymmetricMatrix { i: 0, j: 1, a: 3.0, b: 2.0 })
        );
        assert!(matches!(
            validate_metric(&[vec![0.0, -1.0], vec![-1.0, 0.0]], None),
            Err(MetricError::NegativeDistance { i: 0, j: 1, .. })
        ));
        assert!(matches!(
            validate_metric(&[vec![0.0, 1.0], vec![1.0, 0.5]], None),
            Err(MetricError::NonzeroDiagonal { i: 1, .. })
        ));
        assert_eq!(
            validate_metric(&[vec![0.0, 0.0], vec![0.0, 0.0]], None),
            Err(MetricError::ZeroOffDiagonal { i: 0, j: 1 })
        );
        assert_eq!(
            validate_metric(
                &[vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]],
                None
            ),
            Err(MetricError::TriangleViolation { i: 0, j: 1, k: 2 })
        );
        assert!(matches!(
            validate_metric(&[vec![0.0, f64::NAN], vec![f64::NAN, 0.0]], None),
            Err(MetricError::NonFinite { i: 0, j: 1 })
        ));
        assert!(matches!(
            validate_metric(&[vec![0.0, 1.0], vec![1.0]], None),
            Err(MetricError::NotSquare { row: 1, .. })
        ));
    }

    #[test]
    fn triangle_tolerance_is_relative() {
        // 2 + 1e-12 exceeds 1 + 1 only by roundoff-sized slack.
        let m = vec![
            vec![0.0, 1.0, 2.0 + 1e-12],
            vec![1.0, 0.0, 1.0],
            vec![2.0 + 1e-12, 1.0, 0.0],
        ];
        assert!(validate_metric(&m, None).is_ok());
    }

    #[test]
    fn pairing_products_e1() {
        let q = e1().quadruple(0, 1, 2, 3);
        assert_eq!(pairing_products(&q), (2.0, 1.0, 1.0));
    }

    #[test]
    fn pairing_products_equidistant() {
        let c = 1.7;
        let q = Quadruple::from_distances([c; 6]);
        assert_eq!(pairing_products(&q), (c * c, c * c, c * c));
    }

    #[test]
    fn e1_margins() {
        let r = QuadrupleReport::evaluate(e1().quadruple(0, 1, 2, 3));
        assert_eq!(r.margin_pt, 0.0);
        assert_eq!(r.margin_qi, -0.25);
        assert_eq!(r.margin_cosq, -0.25);
    }

    #[test]
    fn regular_tetrahedron_margins() {
        let q = Quadruple::from_distances([1.0; 6]);
        assert_eq!(check_qi(&q), 2.0);
        assert_eq!(check_cosq(&q), 2.0);
        assert_eq!(check_pt(&q), 1.0);
    }

    #[test]
    fn zero_normalizer_gives_zero_margin() {
        let q = Quadruple::from_distances([0.0; 6]);
        assert_eq!(check_pt(&q), 0.0);
        assert_eq!(check_qi(&q), 0.0);
        assert_eq!(check_cosq(&q), 0.0);
    }

    #[test]
    fn scan_rejects_small_spaces() {
        let s = validate_metric(
            &[vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]],
            None,
        )
        .unwrap();
        assert_eq!(scan(&s, &Condition::ALL), Err(MetricError::TooFewPoints { n: 3 }));
    }

    #[test]
    fn scan_e1() {
        let r = scan(&e1(), &[Condition::Cosq, Condition::Pt, Condition::Qi]).unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(r[0].condition, Condition::Pt);
        assert_eq!(r[0].worst_margin, 0.0);
        assert_eq!(r[0].count_violations, 0);
        assert_eq!(r[1].worst_margin, -0.25);
        assert_eq!(r[1].count_violations, 1);
        assert_eq!(r[2].worst_margin, -0.25);
        assert_eq!(r[2].witness.indices, [0, 1, 2, 3]);
        assert!(r.iter().all(|c| c.count_checked == 1));
    }

    #[test]
    fn classify_e1() {
        let m = classify(&e1()).unwrap();
        assert_eq!(m.signature(), (true, false, false));
        assert!(m.pt.witness.is_none());
        assert_eq!(m.qi.witness.unwrap().indices, [0, 1, 2, 3]);
    }

    #[test]
    fn witness_tie_break_is_lexicographic() {
        // Five equidistant points: every quadruple ties, so the witness must
        // be the first one.
        let m: Vec<Vec<f64>> =
            (0..5).map(|i| (0..5).map(|j| if i == j { 0.0 } else { 1.0 }).collect()).collect();
        let s = validate_metric(&m, None).unwrap();
        for r in scan(&s, &Condition::ALL).unwrap() {
            assert_eq!(r.witness.indices, [0, 1, 2, 3]);
            assert_eq!(r.count_checked, 5);
        }
    }

    #[test]
    fn condition_parsing() {
        assert_eq!("PT".parse::<Condition>(), Ok(Condition::Pt));
        assert_eq!(" cosq".parse::<Condition>(), Ok(Condition::Cosq));
        assert!("xx".parse::<Condition>().is_err());
    }
}
