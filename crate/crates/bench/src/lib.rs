//! Shared fixtures for the criterion benches.

use ptolemaic_core::spaces::random_metric;
use ptolemaic_core::{strip_sample, Family, FiniteMetricSpace, RandomGenerator, StripChart, StripSpec};

/// The 21 x 5 flat strip used throughout the benches.
pub fn euclidean_strip() -> StripChart {
    strip_sample(&StripSpec::new(1.0, 5.0, 21, 5, Family::Euclidean).expect("valid spec")).expect("sample")
}

/// A random metric space on `n` points.
pub fn random_space(n: usize, seed: u64) -> FiniteMetricSpace {
    random_metric(n, seed, RandomGenerator::PerturbedEuclidean).expect("n >= 4")
}
