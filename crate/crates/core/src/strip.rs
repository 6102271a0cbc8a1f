//! Numerical diagnostics on strip samples.
//!
//! Every quantity here is a finite stand-in for a limit: Busemann functions
//! are truncated at a sampled time `T` (with the value at `T/2` kept as an
//! error bar), blow-ups use a finite list of scales, and the Pythagorean
//! limit is extrapolated from a few radii.
//!
//! Strip coordinates: point `(t, s)` sits on the line `c_s` at time `t` and on
//! the fibre `H_t`. Along a line, `b+(c_s(t)) = -t`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::GraphSpace;
use crate::metric::{scan, Condition, MetricError, TOL_CLASS};
use crate::spaces::{strip_sample, SpaceError, StripChart, StripSpec};

/// Default tolerance for exact-on-the-flat-strip checks.
pub const TOL_STRIP: f64 = 1e-9;
/// Pairs closer than this are skipped by [`flat_conclusion`].
pub const MIN_PAIR_DISTANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StripError {
    #[error("line s-index {0} is not sampled")]
    LineNotSampled(usize),
    #[error("no sampled line at s = {0}")]
    NoLineAt(f64),
    #[error("truncation time {0} is not a sampled t within the chart")]
    TruncationNotSampled(f64),
    #[error("basepoint {0} lies on the strip boundary")]
    BoundaryBasepoint(usize),
    #[error("rescaling window of radius {radius} leaves the sampled region")]
    WindowOutOfRange { radius: f64 },
    #[error("rescaling window holds fewer than two points")]
    WindowTooSmall,
    #[error("probe ray leaves the strip at radius {0}")]
    RayExitsStrip(f64),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Plus,
    Minus,
}

/// Truncated Busemann function of one sampled line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusemannField {
    pub line: usize,
    pub direction: Direction,
    pub truncation: f64,
    /// `d(x, c(+-T)) - T` per chart point.
    pub values: Vec<f64>,
    /// Same at truncation `T/2`.
    pub half_values: Vec<f64>,
    /// `max |values - half_values|` over points with `|t| <= T/2`.
    pub error_bar: f64,
}

fn endpoint(chart: &StripChart, line: usize, direction: Direction, t: f64) -> Result<usize, StripError> {
    let target = match direction {
        Direction::Plus => t,
        Direction::Minus => -t,
    };
    let col = chart.column_at(target).ok_or(StripError::TruncationNotSampled(t))?;
    Ok(chart.spec.index(col, line))
}

/// Point of the same line at the sampled time closest to half of `far`'s,
/// rounding toward the centre.
fn half_endpoint(chart: &StripChart, far: usize) -> usize {
    let spec = &chart.spec;
    let (i, j) = spec.grid_of(far);
    let centre = (spec.nt - 1) as f64 / 2.0;
    let offset = ((i as f64 - centre) / 2.0).trunc();
    spec.index((centre + offset).round() as usize, j)
}

pub fn busemann(
    chart: &StripChart,
    line: usize,
    direction: Direction,
    truncation: f64,
) -> Result<BusemannField, StripError> {
    if line >= chart.spec.ns {
        return Err(StripError::LineNotSampled(line));
    }
    if !(truncation > 0.0) {
        return Err(StripError::TruncationNotSampled(truncation));
    }
    let far = endpoint(chart, line, direction, truncation)?;
    let half = half_endpoint(chart, far);
    let (t_far, t_half) = (chart.coords[far].0.abs(), chart.coords[half].0.abs());
    let values: Vec<f64> = (0..chart.len()).map(|x| chart.d(x, far) - t_far).collect();
    let half_values: Vec<f64> = (0..chart.len()).map(|x| chart.d(x, half) - t_half).collect();
    let error_bar = (0..chart.len())
        .filter(|&x| chart.coords[x].0.abs() <= t_half)
        .map(|x| (values[x] - half_values[x]).abs())
        .fold(0.0, f64::max);
    Ok(BusemannField { line, direction, truncation: t_far, values, half_values, error_bar })
}

/// Largest `|b(x) - b(y)| - d(x, y)`; nonpositive for a 1-Lipschitz field.
pub fn lipschitz_excess(chart: &StripChart, values: &[f64]) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for x in 0..chart.len() {
        for y in (x + 1)..chart.len() {
            worst = worst.max((values[x] - values[y]).abs() - chart.d(x, y));
        }
    }
    worst
}

/// Sum `b+ + b-` of one line, with its extremes off and on the line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusemannSum {
    pub values: Vec<f64>,
    /// Minimum over points with `|t| <= T/2`.
    pub min: f64,
    /// Largest `|b+ + b-|` on the defining line, `|t| <= T/2`.
    pub on_line: f64,
}

pub fn busemann_sum(chart: &StripChart, line: usize, truncation: f64) -> Result<BusemannSum, StripError> {
    let plus = busemann(chart, line, Direction::Plus, truncation)?;
    let minus = busemann(chart, line, Direction::Minus, truncation)?;
    let values: Vec<f64> = plus.values.iter().zip(&minus.values).map(|(a, b)| a + b).collect();
    let limit = 0.5 * plus.truncation;
    let inside = |x: &usize| chart.coords[*x].0.abs() <= limit;
    let min = (0..chart.len()).filter(inside).map(|x| values[x]).fold(f64::INFINITY, f64::min);
    let on_line = chart
        .line(line)
        .into_iter()
        .filter(inside)
        .map(|x| values[x].abs())
        .fold(0.0, f64::max);
    Ok(BusemannSum { values, min, on_line })
}

/// How far `b_1 - b_2` is from constant for two lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelCheck {
    /// `max |(b1 - b2)(x) - mean|` over the window.
    pub deviation: f64,
    pub mean: f64,
    /// Larger of the two fields' truncation error bars.
    pub error_bar: f64,
    /// `max |(b1+ + b1-) - (b2+ + b2-)|` over the window.
    pub sum_identity: f64,
    pub window: Vec<usize>,
}

/// Compares the Busemann functions of lines `line1` and `line2` on the
/// compact window `|t| <= window`.
pub fn busemann_difference(
    chart: &StripChart,
    line1: usize,
    line2: usize,
    direction: Direction,
    truncation: f64,
    window: f64,
) -> Result<ParallelCheck, StripError> {
    let b1 = busemann(chart, line1, direction, truncation)?;
    let b2 = busemann(chart, line2, direction, truncation)?;
    let s1 = busemann_sum(chart, line1, truncation)?;
    let s2 = busemann_sum(chart, line2, truncation)?;
    let pts: Vec<usize> = (0..chart.len()).filter(|&x| chart.coords[x].0.abs() <= window + 1e-12).collect();
    let diff: Vec<f64> = pts.iter().map(|&x| b1.values[x] - b2.values[x]).collect();
    let mean = diff.iter().sum::<f64>() / diff.len().max(1) as f64;
    let deviation = diff.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    let sum_identity = pts.iter().map(|&x| (s1.values[x] - s2.values[x]).abs()).fold(0.0, f64::max);
    Ok(ParallelCheck {
        deviation,
        mean,
        error_bar: b1.error_bar.max(b2.error_bar),
        sum_identity,
        window: pts,
    })
}

/// Largest normalized second difference `|f_{i+1} - 2 f_i + f_{i-1}| / h^2`
/// of values sampled at equal steps `h` along a geodesic.
pub fn affinity_check(values: &[f64], step: f64) -> f64 {
    values
        .windows(3)
        .map(|w| (w[2] - 2.0 * w[1] + w[0]).abs() / (step * step))
        .fold(0.0, f64::max)
}

/// Fibre coordinates `F(x) = (B(x), A(x))` about an interior basepoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FibreCoords {
    pub basepoint: usize,
    /// `B(x) = t(x) - t0`.
    pub b: Vec<f64>,
    /// `A(x) = +-d(x, c_{s0}(t(x)))`, signed by `s(x) - s0`.
    pub a: Vec<f64>,
    pub lipschitz_b: f64,
    pub lipschitz_a: f64,
    /// `min |F(x) - F(y)| / d(x, y)` over pairs.
    pub bilip_lower: f64,
    /// `max |F(x) - F(y)| / d(x, y)` over pairs.
    pub bilip_upper: f64,
    /// Worst `min_{x' in H_t'} | d(x, x') - |t - t'| |` over `x` and `t'`.
    pub property_a_defect: f64,
}

impl FibreCoords {
    pub fn lipschitz_ok(&self, tol: f64) -> bool {
        self.lipschitz_b <= 1.0 + tol && self.lipschitz_a <= 2.0 + tol
    }

    pub fn bilipschitz_ok(&self, tol: f64) -> bool {
        self.bilip_lower >= 0.25 - tol && self.bilip_upper <= 2.0 + tol
    }
}

pub fn fibre_map(chart: &StripChart, basepoint: usize) -> Result<FibreCoords, StripError> {
    let spec = &chart.spec;
    let (i0, j0) = spec.grid_of(basepoint);
    if j0 == 0 || j0 + 1 == spec.ns {
        return Err(StripError::BoundaryBasepoint(basepoint));
    }
    let (t0, s0) = chart.coords[basepoint];
    let _ = i0;
    let n = chart.len();
    let b: Vec<f64> = chart.coords.iter().map(|&(t, _)| t - t0).collect();
    let a: Vec<f64> = (0..n)
        .map(|x| {
            let (i, _) = spec.grid_of(x);
            let foot = spec.index(i, j0);
            let sign = (chart.coords[x].1 - s0).signum();
            if x == foot {
                0.0
            } else {
                sign * chart.d(x, foot)
            }
        })
        .collect();

    let (mut lb, mut la) = (0.0f64, 0.0f64);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for x in 0..n {
        for y in (x + 1)..n {
            let d = chart.d(x, y);
            let (db, da) = (b[x] - b[y], a[x] - a[y]);
            lb = lb.max(db.abs() / d);
            la = la.max(da.abs() / d);
            let r = db.hypot(da) / d;
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }

    let mut property_a_defect = 0.0f64;
    for x in 0..n {
        let t = chart.coords[x].0;
        for i in 0..spec.nt {
            let dt = (spec.t(i) - t).abs();
            let best = chart.fibre(i).into_iter().map(|y| (chart.d(x, y) - dt).abs()).fold(f64::INFINITY, f64::min);
            property_a_defect = property_a_defect.max(best);
        }
    }

    Ok(FibreCoords {
        basepoint,
        b,
        a,
        lipschitz_b: lb,
        lipschitz_a: la,
        bilip_lower: lo,
        bilip_upper: hi,
        property_a_defect,
    })
}

/// The rescaled metric `d_l = l * d` pulled back to `l * F(X)`, on a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaledMetric {
    pub lambda: f64,
    pub radius: f64,
    pub window: Vec<usize>,
    /// `(x, y, d_l, d_eu)` for every window pair.
    pub pairs: Vec<(usize, usize, f64, f64)>,
    /// `sup |d_l - d_eu|` over the window.
    pub sup_deviation: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

impl RescaledMetric {
    /// `d_eu / 2 <= d_l <= 4 d_eu` on every window pair.
    pub fn bounds_hold(&self, tol: f64) -> bool {
        self.min_ratio >= 0.5 - tol && self.max_ratio <= 4.0 + tol
    }
}

/// Window: chart points `x` with `|l F(x)| <= radius`.
pub fn rescale(
    chart: &StripChart,
    fibre: &FibreCoords,
    lambda: f64,
    radius: f64,
) -> Result<RescaledMetric, StripError> {
    let spec = &chart.spec;
    let (t0, s0) = chart.coords[fibre.basepoint];
    let r = radius / lambda;
    let slack = 1e-12 * spec.half_length.max(spec.a);
    if t0 - r < -spec.half_length - slack
        || t0 + r > spec.half_length + slack
        || s0 - r < -slack
        || s0 + r > spec.a + slack
    {
        return Err(StripError::WindowOutOfRange { radius });
    }
    let window: Vec<usize> = (0..chart.len())
        .filter(|&x| lambda * fibre.b[x].hypot(fibre.a[x]) <= radius + slack)
        .collect();
    if window.len() < 2 {
        return Err(StripError::WindowTooSmall);
    }
    let mut pairs = Vec::new();
    let (mut sup, mut lo, mut hi) = (0.0f64, f64::INFINITY, 0.0f64);
    for (k, &x) in window.iter().enumerate() {
        for &y in &window[k + 1..] {
            let dl = lambda * chart.d(x, y);
            let de = lambda * (fibre.b[x] - fibre.b[y]).hypot(fibre.a[x] - fibre.a[y]);
            sup = sup.max((dl - de).abs());
            if de > 0.0 {
                lo = lo.min(dl / de);
                hi = hi.max(dl / de);
            } else {
                lo = 0.0;
                hi = f64::INFINITY;
            }
            pairs.push((x, y, dl, de));
        }
    }
    Ok(RescaledMetric { lambda, radius, window, pairs, sup_deviation: sup, min_ratio: lo, max_ratio: hi })
}

/// Ratios `A^2(g(r)) / r^2` along a ray from the basepoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PythProbe {
    pub theta: f64,
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
    /// `B(g(r)) / r` at the smallest radius.
    pub alpha: f64,
    /// Linear extrapolation of the ratios to `r = 0`.
    pub limit: f64,
    /// `1 - alpha^2`.
    pub expected: f64,
}

impl PythProbe {
    pub fn defect(&self) -> f64 {
        (self.limit - self.expected).abs()
    }
}

/// Closed-form families evaluate exact points `x0 + r (cos th, sin th)`;
/// graph families snap to the nearest grid vertex.
pub fn pyth_probe(
    chart: &StripChart,
    fibre: &FibreCoords,
    theta: f64,
    radii: &[f64],
) -> Result<PythProbe, StripError> {
    let spec = &chart.spec;
    let (t0, s0) = chart.coords[fibre.basepoint];
    let (dir_t, dir_s) = (theta.cos(), theta.sin());
    let slack = 1e-12 * spec.half_length.max(spec.a);
    let mut samples = Vec::new();
    for &r in radii {
        let g = (t0 + r * dir_t, s0 + r * dir_s);
        if g.0 < -spec.half_length - slack || g.0 > spec.half_length + slack || g.1 < -slack || g.1 > spec.a + slack {
            return Err(StripError::RayExitsStrip(r));
        }
        let sample = if spec.family.has_closed_form() {
            let a = (g.1 - s0).signum() * chart.coord_distance(g, (g.0, s0)).expect("closed form");
            let a = if g.1 == s0 { 0.0 } else { a };
            Some((r, g.0 - t0, a))
        } else {
            let v = nearest_vertex(chart, g);
            let (vt, vs) = chart.coords[v];
            let rv = (vt - t0).hypot(vs - s0);
            (rv > 0.0).then_some((rv, fibre.b[v], fibre.a[v]))
        };
        if let Some(s) = sample {
            samples.push(s);
        }
    }
    samples.sort_by(|x, y| x.0.total_cmp(&y.0));
    let radii: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let ratios: Vec<f64> = samples.iter().map(|&(r, _, a)| a * a / (r * r)).collect();
    let (r1, b1, _) = *samples.first().ok_or(StripError::RayExitsStrip(0.0))?;
    let alpha = b1 / r1;
    let limit = if ratios.len() >= 2 && radii[1] > radii[0] {
        ratios[0] - radii[0] * (ratios[1] - ratios[0]) / (radii[1] - radii[0])
    } else {
        ratios[0]
    };
    Ok(PythProbe { theta, radii, ratios, alpha, limit, expected: 1.0 - alpha * alpha })
}

fn nearest_vertex(chart: &StripChart, p: (f64, f64)) -> usize {
    (0..chart.len())
        .min_by(|&x, &y| {
            let dx = (chart.coords[x].0 - p.0).hypot(chart.coords[x].1 - p.1);
            let dy = (chart.coords[y].0 - p.0).hypot(chart.coords[y].1 - p.1);
            dx.total_cmp(&dy).then(x.cmp(&y))
        })
        .expect("nonempty chart")
}

/// Distance between two lines along the shared fibres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equidistance {
    /// `mu(t_i) = d(c_{s1}(t_i), c_{s2}(t_i))`.
    pub mu: Vec<f64>,
    /// Worst `max(mu, mu')^2 - mu mu' - (t - t')^2`, clamped at 0.
    pub ptolemy_defect: f64,
    /// Worst `|mu - mu'| - m (t - t')^2` with `m = 1 / min mu`, clamped at 0.
    pub quadratic_defect: f64,
    /// `max mu - min mu`.
    pub variation: f64,
}

pub fn equidistance_trace(chart: &StripChart, s1: f64, s2: f64) -> Result<Equidistance, StripError> {
    let r1 = chart.row_at(s1).ok_or(StripError::NoLineAt(s1))?;
    let r2 = chart.row_at(s2).ok_or(StripError::NoLineAt(s2))?;
    let spec = &chart.spec;
    let mu: Vec<f64> = (0..spec.nt).map(|i| chart.d(spec.index(i, r1), spec.index(i, r2))).collect();
    let min = mu.iter().copied().fold(f64::INFINITY, f64::min);
    let max = mu.iter().copied().fold(0.0, f64::max);
    let m = if min > 0.0 { 1.0 / min } else { f64::INFINITY };
    let (mut pd, mut qd) = (0.0f64, 0.0f64);
    for i in 0..spec.nt {
        for k in (i + 1)..spec.nt {
            let dt = spec.t(k) - spec.t(i);
            let (a, b) = (mu[i], mu[k]);
            pd = pd.max(a.max(b).powi(2) - a * b - dt * dt);
            qd = qd.max((a - b).abs() - m * dt * dt);
        }
    }
    Ok(Equidistance { mu, ptolemy_defect: pd, quadratic_defect: qd, variation: max - min })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatDefect {
    /// `max |d^2 - (dt^2 + ds^2)| / d^2` over pairs.
    pub worst: f64,
    pub pair: (usize, usize),
}

pub fn flat_conclusion(chart: &StripChart) -> FlatDefect {
    let mut out = FlatDefect { worst: 0.0, pair: (0, 0) };
    for x in 0..chart.len() {
        for y in (x + 1)..chart.len() {
            let d = chart.d(x, y);
            if d < MIN_PAIR_DISTANCE {
                continue;
            }
            let v = pair_flat_defect(chart, x, y);
            if v > out.worst {
                out = FlatDefect { worst: v, pair: (x, y) };
            }
        }
    }
    out
}

/// `|d^2 - (dt^2 + ds^2)| / d^2` for one pair.
pub fn pair_flat_defect(chart: &StripChart, x: usize, y: usize) -> f64 {
    let d = chart.d(x, y);
    let (p, q) = (chart.coords[x], chart.coords[y]);
    let e2 = (p.0 - q.0).powi(2) + (p.1 - q.1).powi(2);
    (d * d - e2).abs() / (d * d)
}

/// Largest `|t(pi(x)) - t(x)|` when every chart point is projected to the
/// nearest point of line `row` (chart metric).
pub fn projection_fibre_defect(chart: &StripChart, row: usize) -> Result<f64, StripError> {
    if row >= chart.spec.ns {
        return Err(StripError::LineNotSampled(row));
    }
    let line = chart.line(row);
    let mut worst = 0.0f64;
    for x in 0..chart.len() {
        let p = line
            .iter()
            .copied()
            .min_by(|&u, &v| chart.d(x, u).total_cmp(&chart.d(x, v)).then(u.cmp(&v)))
            .expect("line is nonempty");
        worst = worst.max((chart.coords[p].0 - chart.coords[x].0).abs());
    }
    Ok(worst)
}

/// Same as [`projection_fibre_defect`] but projecting in a strip graph.
pub fn graph_projection_fibre_defect(graph: &GraphSpace, spec: &StripSpec, row: usize) -> Result<f64, StripError> {
    if row >= spec.ns {
        return Err(StripError::LineNotSampled(row));
    }
    let line: Vec<usize> = (0..spec.nt).map(|i| spec.index(i, row)).collect();
    let mut worst = 0.0f64;
    for x in 0..graph.len() {
        let p = graph.project(&line, x).expect("line is nonempty").vertex;
        worst = worst.max((spec.t(spec.grid_of(p).0) - spec.t(spec.grid_of(x).0)).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripCheck {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripReport {
    pub spec: StripSpec,
    pub points: usize,
    pub checks: Vec<StripCheck>,
    pub all_pass: bool,
}

impl StripReport {
    pub fn check(&self, name: &str) -> Option<&StripCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn check(name: &str, value: f64, threshold: f64, pass: bool) -> StripCheck {
    StripCheck { name: name.to_string(), pass, value, threshold, detail: None }
}

fn failed(name: &str, err: &StripError) -> StripCheck {
    StripCheck { name: name.into(), pass: false, value: f64::NAN, threshold: f64::NAN, detail: Some(err.to_string()) }
}

/// Runs the full battery on a strip sample.
pub fn strip_verify(spec: &StripSpec) -> Result<StripReport, StripError> {
    let chart = strip_sample(spec)?;
    Ok(verify_chart(&chart))
}

pub fn verify_chart(chart: &StripChart) -> StripReport {
    let spec = chart.spec;
    let mut checks = Vec::new();

    if chart.len() >= 4 {
        for r in scan(&chart.space, &Condition::ALL).expect("at least four points") {
            let mut c = check(&format!("scan_{}", r.condition), r.worst_margin, -TOL_CLASS, r.worst_margin >= -TOL_CLASS);
            c.detail = Some(format!(
                "witness {:?}, {} of {} quadruples violate",
                r.witness.indices, r.count_violations, r.count_checked
            ));
            checks.push(c);
        }
    }

    let big_t = spec.half_length;
    match busemann_sum(chart, 0, big_t) {
        Ok(sum) => {
            checks.push(check("busemann_sum_nonnegative", sum.min, -TOL_STRIP, sum.min >= -TOL_STRIP));
            checks.push(check("busemann_sum_on_line", sum.on_line, TOL_STRIP, sum.on_line <= TOL_STRIP));
        }
        Err(e) => checks.push(failed("busemann_sum", &e)),
    }
    match busemann(chart, 0, Direction::Plus, big_t) {
        Ok(b) => {
            let ex = lipschitz_excess(chart, &b.values);
            checks.push(check("busemann_lipschitz", ex, TOL_STRIP, ex <= TOL_STRIP));
        }
        Err(e) => checks.push(failed("busemann_lipschitz", &e)),
    }
    let window = 0.25 * big_t;
    let at = |t| busemann_difference(chart, 0, spec.ns - 1, Direction::Plus, t, window);
    match (at(big_t), at(0.5 * big_t)) {
        (Ok(full), Ok(half)) => {
            let mut c = check(
                "busemann_parallel",
                full.deviation,
                half.deviation,
                full.deviation <= half.deviation + TOL_STRIP,
            );
            c.detail = Some(format!(
                "deviation {:.3e} at T, {:.3e} at T/2; sum identity {:.3e}",
                full.deviation, half.deviation, full.sum_identity
            ));
            checks.push(c);
        }
        (Err(e), _) | (_, Err(e)) => checks.push(failed("busemann_parallel", &e)),
    }

    let x0 = spec.index((spec.nt - 1) / 2, (spec.ns - 1) / 2);
    match fibre_map(chart, x0) {
        Ok(f) => {
            checks.push(check("fibre_lipschitz_b", f.lipschitz_b, 1.0, f.lipschitz_b <= 1.0 + TOL_STRIP));
            checks.push(check("fibre_lipschitz_a", f.lipschitz_a, 2.0, f.lipschitz_a <= 2.0 + TOL_STRIP));
            checks.push(check("fibre_bilipschitz_lower", f.bilip_lower, 0.25, f.bilip_lower >= 0.25 - TOL_STRIP));
            checks.push(check("fibre_bilipschitz_upper", f.bilip_upper, 2.0, f.bilip_upper <= 2.0 + TOL_STRIP));
            let grid_tol = spec.ds() + TOL_STRIP;
            checks.push(check("property_a", f.property_a_defect, grid_tol, f.property_a_defect <= grid_tol));

            let (t0, s0) = chart.coords[x0];
            let radius = s0.min(spec.a - s0).min(spec.half_length - t0.abs());
            let mut bounds = true;
            let mut sups = Vec::new();
            for lambda in [1.0, 2.0, 4.0, 8.0] {
                match rescale(chart, &f, lambda, radius) {
                    Ok(r) => {
                        bounds &= r.bounds_hold(TOL_STRIP);
                        sups.push(format!("{lambda}: {:.3e}", r.sup_deviation));
                    }
                    Err(StripError::WindowTooSmall) => sups.push(format!("{lambda}: window too small")),
                    Err(e) => {
                        bounds = false;
                        sups.push(format!("{lambda}: {e}"));
                    }
                }
            }
            let mut c = check("rescale_bounds", if bounds { 1.0 } else { 0.0 }, 1.0, bounds);
            c.detail = Some(format!("sup |d_l - d_eu| by scale: {}", sups.join(", ")));
            checks.push(c);

            let radii = if spec.family.has_closed_form() {
                vec![radius / 4.0, radius / 2.0, radius]
            } else {
                vec![radius / 2.0, radius]
            };
            for (label, theta) in [("0", 0.0), ("pi/3", std::f64::consts::FRAC_PI_3), ("pi/2", std::f64::consts::FRAC_PI_2)] {
                let name = format!("pyth_theta_{label}");
                match pyth_probe(chart, &f, theta, &radii) {
                    Ok(p) => {
                        let mut c = check(&name, p.defect(), TOL_STRIP, p.defect() <= TOL_STRIP);
                        c.detail = Some(format!("limit {:.12} vs 1 - alpha^2 = {:.12}", p.limit, p.expected));
                        checks.push(c);
                    }
                    Err(e) => checks.push(failed(&name, &e)),
                }
            }
        }
        Err(e) => checks.push(failed("fibre_map", &e)),
    }

    match equidistance_trace(chart, 0.0, spec.a) {
        Ok(eq) => {
            let worst = eq.ptolemy_defect.max(eq.quadratic_defect);
            checks.push(check("equidistance", worst, TOL_STRIP, worst <= TOL_STRIP));
        }
        Err(e) => checks.push(failed("equidistance", &e)),
    }

    match projection_fibre_defect(chart, 0) {
        Ok(v) => checks.push(check("projection_in_fibre", v, spec.dt(), v <= spec.dt() + TOL_STRIP)),
        Err(e) => checks.push(failed("projection_in_fibre", &e)),
    }

    let flat = flat_conclusion(chart);
    let mut c = check("flat_conclusion", flat.worst, TOL_STRIP, flat.worst <= TOL_STRIP);
    c.detail = Some(format!("worst pair {:?}", flat.pair));
    checks.push(c);

    let all_pass = checks.iter().all(|c| c.pass);
    StripReport { spec, points: chart.len(), checks, all_pass }
}
