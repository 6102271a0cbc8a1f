//! Euclidean embeddability of finite metric spaces.
//!
//! A finite metric space embeds isometrically in some Euclidean space iff the
//! Gram matrix `G_ij = (d(x0,xi)^2 + d(x0,xj)^2 - d(xi,xj)^2) / 2` taken at any
//! basepoint `x0` is positive semidefinite. Coordinates come from the
//! nonnegative part of its spectrum.
//!
//! This is the classical finite criterion. It is strictly stronger than the
//! Ptolemy inequality on four points: `E1` is Ptolemaic but does not embed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::FiniteMetricSpace;

/// Eigenvalue threshold, relative to the Gram trace.
pub const TOL_EIG: f64 = 1e-9;
/// Bound on the relative distance error of an embedding.
pub const TOL_RES: f64 = 1e-8;

const SYMMETRY_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmbeddingError {
    #[error("basepoint {basepoint} out of range for {n} points")]
    BadBasepoint { basepoint: usize, n: usize },
    #[error("Gram matrix needs at least 2 points")]
    TooFewPoints,
    #[error("matrix is not symmetric at ({i}, {j})")]
    NotSymmetric { i: usize, j: usize },
    #[error("matrix is not square")]
    NotSquare,
}

/// Dense symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SymMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, EmbeddingError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(EmbeddingError::NotSquare);
        }
        Ok(SymMatrix { n, data: rows.concat() })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).take(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Basepoint Gram matrix over the other `n - 1` points (in index order).
pub fn gram(space: &FiniteMetricSpace, basepoint: usize) -> Result<SymMatrix, EmbeddingError> {
    let n = space.len();
    if basepoint >= n {
        return Err(EmbeddingError::BadBasepoint { basepoint, n });
    }
    if n < 2 {
        return Err(EmbeddingError::TooFewPoints);
    }
    let others: Vec<usize> = (0..n).filter(|&i| i != basepoint).collect();
    let m = others.len();
    let mut g = SymMatrix { n: m, data: vec![0.0; m * m] };
    for (a, &i) in others.iter().enumerate() {
        let di = space.d(basepoint, i);
        for (b, &j) in others.iter().enumerate().skip(a) {
            let dj = space.d(basepoint, j);
            let dij = space.d(i, j);
            let v = 0.5 * (di * di + dj * dj - dij * dij);
            g.set(a, b, v);
            g.set(b, a, v);
        }
    }
    Ok(g)
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigen {
    /// Sorted descending.
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit eigenvector for `values[k]`.
    pub vectors: Vec<Vec<f64>>,
}

/// Cyclic Jacobi rotations.
pub fn symmetric_eigen(m: &SymMatrix) -> Result<Eigen, EmbeddingError> {
    let n = m.n;
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in (i + 1)..n {
            if (m.get(i, j) - m.get(j, i)).abs() > SYMMETRY_TOL * scale {
                return Err(EmbeddingError::NotSymmetric { i, j });
            }
        }
    }
    let mut a = m.clone();
    // symmetrize exactly
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a.get(i, j) + a.get(j, i));
            a.set(i, j, v);
            a.set(j, i, v);
        }
    }
    // v is stored column-major: column k is data[k*n .. (k+1)*n]
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a.get(i, j).powi(2))
            .sum();
        if off <= (n as f64 * f64::EPSILON * scale).powi(2) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
                for k in 0..n {
                    let vkp = v[p * n + k];
                    let vkq = v[q * n + k];
                    v[p * n + k] = c * vkp - s * vkq;
                    v[q * n + k] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a.get(y, y).total_cmp(&a.get(x, x)));
    Ok(Eigen {
        values: order.iter().map(|&k| a.get(k, k)).collect(),
        vectors: order.iter().map(|&k| v[k * n..(k + 1) * n].to_vec()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingResult {
    pub embeddable: bool,
    pub min_eigenvalue: f64,
    pub dimension: usize,
    pub basepoint: usize,
    pub eigenvalues: Vec<f64>,
    /// One row per point; the basepoint sits at the origin.
    pub coordinates: Vec<Vec<f64>>,
    /// Largest `|d_embedded - d| / d` over all pairs.
    pub residual: f64,
}

pub fn embed(space: &FiniteMetricSpace) -> EmbeddingResult {
    embed_at(space, 0).expect("basepoint 0 exists")
}

pub fn embed_at(space: &FiniteMetricSpace, basepoint: usize) -> Result<EmbeddingResult, EmbeddingError> {
    let n = space.len();
    if basepoint >= n {
        return Err(EmbeddingError::BadBasepoint { basepoint, n });
    }
    if n == 1 {
        return Ok(EmbeddingResult {
            embeddable: true,
            min_eigenvalue: 0.0,
            dimension: 0,
            basepoint,
            eigenvalues: vec![],
            coordinates: vec![vec![]],
            residual: 0.0,
        });
    }
    let g = gram(space, basepoint)?;
    let eig = symmetric_eigen(&g)?;
    let trace = g.trace();
    let min_eigenvalue = *eig.values.last().expect("n >= 2");
    let threshold = TOL_EIG * trace;
    let embeddable = min_eigenvalue >= -threshold;
    let kept: Vec<usize> = (0..eig.values.len()).filter(|&k| eig.values[k] > threshold).collect();
    let dimension = kept.len();

    let others: Vec<usize> = (0..n).filter(|&i| i != basepoint).collect();
    let mut coordinates = vec![vec![0.0; dimension]; n];
    for (row, &point) in others.iter().enumerate() {
        for (c, &k) in kept.iter().enumerate() {
            coordinates[point][c] = eig.vectors[k][row] * eig.values[k].sqrt();
        }
    }

    let mut residual: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let e: f64 = coordinates[i]
                .iter()
                .zip(&coordinates[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let d = space.d(i, j);
            residual = residual.max((e - d).abs() / d);
        }
    }

    Ok(EmbeddingResult {
        embeddable,
        min_eigenvalue,
        dimension,
        basepoint,
        eigenvalues: eig.values,
        coordinates,
        residual,
    })
}
