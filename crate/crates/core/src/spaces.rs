//! Generators: strip samples, the named four-point catalog, random metrics.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{grid_graph, GraphError, GraphSpace};
use crate::metric::{validate_metric, FiniteMetricSpace, MetricError};

/// Default ring radius for graph-approximated families.
pub const DEFAULT_RING: usize = 3;
/// Default E2 parameter; the cosq window is `(2*sqrt(2) - 1, 2)`.
pub const E2_DEFAULT_A: f64 = 1.9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpaceError {
    #[error("bad strip spec: {0}")]
    BadSpec(String),
    #[error("E2 needs 1 < a < 2, got {0}")]
    E2OutOfRange(f64),
    #[error("random metrics need at least 4 points, got {0}")]
    TooFewPoints(usize),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Family {
    Euclidean,
    Lp { p: f64 },
    Snowflake { epsilon: f64 },
    /// Euclidean length element scaled by `1 + height * bump(r / radius)`,
    /// bump centred on the strip's midline at `t = 0`.
    Conformal { height: f64, radius: f64 },
}

impl Family {
    pub const CONFORMAL_DEFAULT: Family = Family::Conformal { height: 1.0, radius: 0.3 };

    /// Closed-form distance between strip coordinates, when one exists.
    pub fn closed_form(&self, a: (f64, f64), b: (f64, f64)) -> Option<f64> {
        let (dt, ds) = ((a.0 - b.0).abs(), (a.1 - b.1).abs());
        match *self {
            Family::Euclidean => Some(dt.hypot(ds)),
            Family::Lp { p } => Some(lp_norm(dt, ds, p)),
            Family::Snowflake { epsilon } => Some(dt.hypot(ds).powf(epsilon)),
            Family::Conformal { .. } => None,
        }
    }

    pub fn has_closed_form(&self) -> bool {
        !matches!(self, Family::Conformal { .. })
    }
}

fn lp_norm(x: f64, y: f64, p: f64) -> f64 {
    if p == 1.0 {
        x + y
    } else if p == 2.0 {
        x.hypot(y)
    } else if p.is_infinite() {
        x.max(y)
    } else {
        (x.powf(p) + y.powf(p)).powf(p.recip())
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Euclidean => write!(f, "euclidean"),
            Family::Lp { p } => write!(f, "lp:{p}"),
            Family::Snowflake { epsilon } => write!(f, "snowflake:{epsilon}"),
            Family::Conformal { height, radius } => write!(f, "conformal:{height}:{radius}"),
        }
    }
}

impl FromStr for Family {
    type Err = SpaceError;

    /// `euclidean`, `lp:P`, `snowflake:EPS`, `conformal` or `conformal:H:R`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SpaceError::BadSpec(format!("unknown family `{s}`"));
        let num = |v: &str| v.parse::<f64>().map_err(|_| bad());
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["euclidean"] => Ok(Family::Euclidean),
            ["lp", p] => Ok(Family::Lp { p: num(p)? }),
            ["snowflake", e] => Ok(Family::Snowflake { epsilon: num(e)? }),
            ["conformal"] => Ok(Family::CONFORMAL_DEFAULT),
            ["conformal", h, r] => Ok(Family::Conformal { height: num(h)?, radius: num(r)? }),
            _ => Err(bad()),
        }
    }
}

/// Sampling parameters for a strip `[-T, T] x [0, a]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripSpec {
    pub a: f64,
    pub half_length: f64,
    pub nt: usize,
    pub ns: usize,
    pub family: Family,
}

impl StripSpec {
    pub fn new(a: f64, half_length: f64, nt: usize, ns: usize, family: Family) -> Result<Self, SpaceError> {
        let spec = StripSpec { a, half_length, nt, ns, family };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SpaceError> {
        let bad = |m: String| Err(SpaceError::BadSpec(m));
        if !(self.a > 0.0 && self.a.is_finite()) {
            return bad(format!("width a must be positive, got {}", self.a));
        }
        if !(self.half_length > 0.0 && self.half_length.is_finite()) {
            return bad(format!("half-length T must be positive, got {}", self.half_length));
        }
        if self.nt < 2 || self.ns < 2 {
            return bad(format!("need nt >= 2 and ns >= 2, got {} x {}", self.nt, self.ns));
        }
        match self.family {
            Family::Lp { p } if !(p >= 1.0) => bad(format!("lp needs p >= 1, got {p}")),
            Family::Snowflake { epsilon } if !(epsilon > 0.0 && epsilon <= 1.0) => {
                bad(format!("snowflake needs 0 < eps <= 1, got {epsilon}"))
            }
            Family::Conformal { height, radius } if !(height >= 0.0 && radius > 0.0) => {
                bad(format!("conformal needs height >= 0 and radius > 0, got {height}, {radius}"))
            }
            _ => Ok(()),
        }
    }

    pub fn dt(&self) -> f64 {
        2.0 * self.half_length / (self.nt - 1) as f64
    }

    pub fn ds(&self) -> f64 {
        self.a / (self.ns - 1) as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        -self.half_length + 2.0 * self.half_length * i as f64 / (self.nt - 1) as f64
    }

    pub fn s(&self, j: usize) -> f64 {
        self.a * j as f64 / (self.ns - 1) as f64
    }

    /// Point id of grid node `(i, j)`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.ns + j
    }

    pub fn grid_of(&self, id: usize) -> (usize, usize) {
        (id / self.ns, id % self.ns)
    }

    /// Conformal length factor at `(t, s)`; identically 1 for other families.
    pub fn conformal_factor(&self, p: (f64, f64)) -> f64 {
        match self.family {
            Family::Conformal { height, radius } => {
                let r = (p.0).hypot(p.1 - 0.5 * self.a) / radius;
                if r >= 1.0 {
                    1.0
                } else {
                    1.0 + height * (1.0 - 1.0 / (1.0 - r * r)).exp()
                }
            }
            _ => 1.0,
        }
    }
}

/// A strip sample: grid coordinates and the metric on them.
#[derive(Debug, Clone)]
pub struct StripChart {
    pub spec: StripSpec,
    pub coords: Vec<(f64, f64)>,
    pub space: FiniteMetricSpace,
    pub graph: Option<GraphSpace>,
}

impl StripChart {
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.space.d(i, j)
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Distance between arbitrary strip coordinates, for closed-form families.
    pub fn coord_distance(&self, a: (f64, f64), b: (f64, f64)) -> Option<f64> {
        self.spec.family.closed_form(a, b)
    }

    /// Column index of the sampled `t` equal to `t` up to roundoff.
    pub fn column_at(&self, t: f64) -> Option<usize> {
        let tol = 1e-9 * self.spec.half_length.max(1.0);
        (0..self.spec.nt).find(|&i| (self.spec.t(i) - t).abs() <= tol)
    }

    pub fn row_at(&self, s: f64) -> Option<usize> {
        let tol = 1e-9 * self.spec.a.max(1.0);
        (0..self.spec.ns).find(|&j| (self.spec.s(j) - s).abs() <= tol)
    }

    /// Point ids of the sampled line `s = s_j`, in increasing `t`.
    pub fn line(&self, j: usize) -> Vec<usize> {
        (0..self.spec.nt).map(|i| self.spec.index(i, j)).collect()
    }

    /// Point ids of the fibre `t = t_i`, in increasing `s`.
    pub fn fibre(&self, i: usize) -> Vec<usize> {
        (0..self.spec.ns).map(|j| self.spec.index(i, j)).collect()
    }
}

/// Euclidean edge length scaled by the conformal factor (Simpson's rule).
pub(crate) fn conformal_edge(spec: &StripSpec, a: (f64, f64), b: (f64, f64)) -> f64 {
    let mid = (0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1));
    let f = (spec.conformal_factor(a) + 4.0 * spec.conformal_factor(mid) + spec.conformal_factor(b)) / 6.0;
    (a.0 - b.0).hypot(a.1 - b.1) * f
}

/// Grid graph over a strip sample: `k` rings, conformally scaled edge lengths.
pub fn grid_strip_graph(spec: &StripSpec, k: usize) -> Result<GraphSpace, SpaceError> {
    spec.validate()?;
    if k == 0 {
        return Err(SpaceError::BadSpec("ring radius k must be >= 1".into()));
    }
    Ok(grid_graph(spec.nt, spec.ns, -spec.half_length, spec.dt(), spec.ds(), k, |a, b| {
        conformal_edge(spec, a, b)
    })?)
}

pub fn strip_sample(spec: &StripSpec) -> Result<StripChart, SpaceError> {
    spec.validate()?;
    let coords: Vec<(f64, f64)> =
        (0..spec.nt).flat_map(|i| (0..spec.ns).map(move |j| (spec.t(i), spec.s(j)))).collect();
    let labels: Vec<String> = (0..spec.nt)
        .flat_map(|i| (0..spec.ns).map(move |j| format!("t{i}s{j}")))
        .collect();
    let n = coords.len();
    match spec.family {
        Family::Conformal { .. } => {
            let graph = grid_strip_graph(spec, DEFAULT_RING)?;
            let metric = graph.metric()?;
            let space = FiniteMetricSpace::from_trusted(labels, metric.matrix().concat())?;
            Ok(StripChart { spec: *spec, coords, space, graph: Some(graph) })
        }
        family => {
            let mut dist = vec![0.0; n * n];
            for u in 0..n {
                for v in (u + 1)..n {
                    let d = family.closed_form(coords[u], coords[v]).expect("closed form");
                    dist[u * n + v] = d;
                    dist[v * n + u] = d;
                }
            }
            let space = FiniteMetricSpace::from_trusted(labels, dist)?;
            Ok(StripChart { spec: *spec, coords, space, graph: None })
        }
    }
}

fn four_point(d: [f64; 6], labels: [&str; 4]) -> FiniteMetricSpace {
    let [xy, xz, xw, yz, yw, zw] = d;
    let m = vec![
        vec![0.0, xy, xz, xw],
        vec![xy, 0.0, yz, yw],
        vec![xz, yz, 0.0, zw],
        vec![xw, yw, zw, 0.0],
    ];
    validate_metric(&m, Some(labels.map(String::from).to_vec())).expect("catalog space is a metric")
}

/// `|xy| = 2`, every other distance 1.
pub fn e1() -> FiniteMetricSpace {
    four_point([2.0, 1.0, 1.0, 1.0, 1.0, 1.0], ["x", "y", "z", "w"])
}

/// `|xy| = |zw| = 2`, `|xz| = |xw| = 1`, `|yz| = |yw| = a`, `1 < a < 2`.
pub fn e2(a: f64) -> Result<FiniteMetricSpace, SpaceError> {
    if !(a > 1.0 && a < 2.0) {
        return Err(SpaceError::E2OutOfRange(a));
    }
    Ok(four_point([2.0, 1.0, 1.0, a, a, 2.0], ["x", "y", "z", "w"]))
}

/// Unit square, points in cyclic order.
pub fn unit_square() -> FiniteMetricSpace {
    let r2 = 2f64.sqrt();
    four_point([1.0, r2, 1.0, 1.0, r2, 1.0], ["a", "b", "c", "d"])
}

pub fn regular_tetrahedron() -> FiniteMetricSpace {
    four_point([1.0; 6], ["a", "b", "c", "d"])
}

/// `E1`, `E2(a)`, `square`, `tetrahedron`.
pub fn catalog_with(e2_a: f64) -> Result<Vec<(String, FiniteMetricSpace)>, SpaceError> {
    Ok(vec![
        ("E1".to_string(), e1()),
        (format!("E2({e2_a})"), e2(e2_a)?),
        ("square".to_string(), unit_square()),
        ("tetrahedron".to_string(), regular_tetrahedron()),
    ])
}

pub fn catalog() -> Vec<(String, FiniteMetricSpace)> {
    catalog_with(E2_DEFAULT_A).expect("default E2 parameter is in range")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RandomGenerator {
    /// i.i.d. distances in `[1, 2]`.
    ShiftedUniform,
    /// Shortest-path metric of a connected random weighted graph.
    GraphMetric,
    /// Euclidean cloud in `[0,1]^3`, distances jittered by `1 +- 0.2`, then
    /// closed under shortest paths.
    PerturbedEuclidean,
}

impl RandomGenerator {
    pub const ALL: [RandomGenerator; 3] =
        [RandomGenerator::ShiftedUniform, RandomGenerator::GraphMetric, RandomGenerator::PerturbedEuclidean];
}

impl fmt::Display for RandomGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RandomGenerator::ShiftedUniform => "shifted-uniform",
            RandomGenerator::GraphMetric => "graph-metric",
            RandomGenerator::PerturbedEuclidean => "perturbed-euclidean",
        })
    }
}

impl FromStr for RandomGenerator {
    type Err = SpaceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RandomGenerator::ALL
            .into_iter()
            .find(|g| g.to_string() == s)
            .ok_or_else(|| SpaceError::BadSpec(format!("unknown generator `{s}`")))
    }
}

const JITTER: f64 = 0.2;

pub fn random_metric(n: usize, seed: u64, generator: RandomGenerator) -> Result<FiniteMetricSpace, SpaceError> {
    if n < 4 {
        return Err(SpaceError::TooFewPoints(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_metric_with(n, &mut rng, generator)
}

pub(crate) fn random_metric_with(
    n: usize,
    rng: &mut impl Rng,
    generator: RandomGenerator,
) -> Result<FiniteMetricSpace, SpaceError> {
    let mut m = vec![vec![0.0; n]; n];
    match generator {
        RandomGenerator::ShiftedUniform => {
            for i in 0..n {
                for j in (i + 1)..n {
                    let d = rng.random_range(1.0..=2.0);
                    m[i][j] = d;
                    m[j][i] = d;
                }
            }
        }
        RandomGenerator::GraphMetric => {
            let mut w = vec![vec![f64::INFINITY; n]; n];
            // random spanning tree, then extra edges with probability 1/2
            for v in 1..n {
                let u = rng.random_range(0..v);
                let len = rng.random_range(0.5..=2.0);
                w[u][v] = len;
                w[v][u] = len;
            }
            for u in 0..n {
                for v in (u + 1)..n {
                    if w[u][v].is_infinite() && rng.random_bool(0.5) {
                        let len = rng.random_range(0.5..=2.0);
                        w[u][v] = len;
                        w[v][u] = len;
                    }
                }
            }
            for (i, row) in w.iter_mut().enumerate() {
                row[i] = 0.0;
            }
            m = metric_closure(w);
        }
        RandomGenerator::PerturbedEuclidean => {
            let pts: Vec<[f64; 3]> =
                (0..n).map(|_| [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()]).collect();
            for i in 0..n {
                for j in (i + 1)..n {
                    let e: f64 = (0..3).map(|k| (pts[i][k] - pts[j][k]).powi(2)).sum::<f64>().sqrt();
                    let d = e * rng.random_range((1.0 - JITTER)..=(1.0 + JITTER));
                    m[i][j] = d;
                    m[j][i] = d;
                }
            }
            m = metric_closure(m);
        }
    }
    Ok(validate_metric(&m, None)?)
}

/// Floyd-Warshall closure of a symmetric weight matrix.
pub(crate) fn metric_closure(mut m: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = m.len();
    for k in 0..n {
        for i in 0..n {
            let dik = m[i][k];
            if dik.is_infinite() {
                continue;
            }
            for j in 0..n {
                let via = dik + m[k][j];
                if via < m[i][j] {
                    m[i][j] = via;
                }
            }
        }
    }
    // keep exact symmetry after roundoff
    for i in 0..n {
        for j in (i + 1)..n {
            let d = m[i][j].min(m[j][i]);
            m[i][j] = d;
            m[j][i] = d;
        }
    }
    m
}
