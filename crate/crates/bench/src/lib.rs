//! Shared inputs for the operator benchmarks.

use fastadj::{randn, synthetic_chart, Image};

/// Bar chart of the given side, the usual deblurring test image.
pub fn chart(side: usize) -> Image {
    synthetic_chart(side, side, 4).expect("side is at least 8")
}

/// Deterministic Gaussian signal.
pub fn signal(n: usize, seed: u64) -> Vec<f64> {
    randn(n, seed)
}
