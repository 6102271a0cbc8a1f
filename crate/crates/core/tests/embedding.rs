//! Embedding tests against nalgebra's symmetric eigensolver and against
//! point clouds with known coordinates.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ptolemaic_core::embedding::{symmetric_eigen, SymMatrix};
use ptolemaic_core::spaces::{e1, unit_square};
use ptolemaic_core::{embed, embed_at, gram, validate_metric, FiniteMetricSpace, TOL_RES};

fn cloud(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> (Vec<Vec<f64>>, FiniteMetricSpace) {
    let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let d = |a: &Vec<f64>, b: &Vec<f64>| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let m: Vec<Vec<f64>> = pts.iter().map(|a| pts.iter().map(|b| d(a, b)).collect()).collect();
    let s = validate_metric(&m, None).unwrap();
    (pts, s)
}

#[test]
fn square_embeds_in_the_plane() {
    let r = embed(&unit_square());
    assert!(r.embeddable);
    assert_eq!(r.dimension, 2);
    assert!(r.residual < 1e-9);
}

#[test]
fn e1_gram_determinant_is_minus_one() {
    let g = gram(&e1(), 0).unwrap();
    let m = DMatrix::from_fn(3, 3, |i, j| g.get(i, j));
    assert!((m.determinant() + 1.0).abs() < 1e-9);
    let e = symmetric_eigen(&g).unwrap();
    let product: f64 = e.values.iter().product();
    assert!((product + 1.0).abs() < 1e-9);
    assert!(!embed(&e1()).embeddable);
}

#[test]
fn eigenvalues_match_nalgebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [1, 2, 3, 5, 8, 13, 29] {
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let v = rng.random_range(-3.0..3.0);
                rows[i][j] = v;
                rows[j][i] = v;
            }
        }
        let ours = symmetric_eigen(&SymMatrix::from_rows(&rows).unwrap()).unwrap();
        let reference = DMatrix::from_fn(n, n, |i, j| rows[i][j]).symmetric_eigen();
        let mut theirs: Vec<f64> = reference.eigenvalues.iter().copied().collect();
        theirs.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in ours.values.iter().zip(&theirs) {
            assert!((a - b).abs() < 1e-10, "n={n}: {a} vs {b}");
        }
    }
}

#[test]
fn random_clouds_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let n = rng.random_range(2..=30);
        let dim = rng.random_range(1..=6);
        let (_, s) = cloud(&mut rng, n, dim);
        let r = embed(&s);
        assert!(r.embeddable);
        assert!(r.dimension <= dim.min(n - 1));
        assert!(r.residual < TOL_RES, "residual {}", r.residual);
    }
}

#[test]
fn verdict_does_not_depend_on_basepoint() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (_, s) = cloud(&mut rng, 12, 3);
    for b in 0..s.len() {
        let r = embed_at(&s, b).unwrap();
        assert!(r.embeddable && r.dimension == 3 && r.residual < TOL_RES);
        assert_eq!(r.coordinates[b], vec![0.0; 3]);
    }
    for b in 0..4 {
        assert!(!embed_at(&e1(), b).unwrap().embeddable);
    }
}
