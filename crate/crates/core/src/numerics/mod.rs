//! Dense matrix kernels, the exponential integral, and seeded random streams.

mod matrix;
mod rng;
mod special;

pub use matrix::{
    gram, invert_regularized, logdet_hpd, regularize, smallest_singular_value, Cholesky,
    ComplexMatrix,
};
pub use rng::RngStream;
pub use special::exp_integral_e1;

use num_complex::Complex64;

/// Draws one `N(0, 1)` sample from the stream.
pub fn sample_standard_normal(rng: &mut RngStream) -> f64 {
    rng.standard_normal()
}

/// Draws one `CN(0, 1)` sample from the stream.
pub fn sample_complex_normal(rng: &mut RngStream) -> Complex64 {
    rng.complex_normal()
}

/// Sums with pairwise splitting so the rounding pattern depends only on length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if xs.len() <= LEAF {
        xs.iter().sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}
