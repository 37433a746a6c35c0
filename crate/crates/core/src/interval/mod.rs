//! Verified numerics: interval scalars and matrices with outward rounding,
//! plus enclosures for norms, the matrix exponential and Cholesky factors.

mod enclosures;
mod matrix;
mod scalar;

pub use enclosures::{
    cholesky_enclosure, exp_enclosure, float_spectral_norm, frobenius_norm_bound, spectral_norm_enclosure,
    triangular_inverse_enclosure, EXP_TAYLOR_ORDER, RUMP_ALPHA_LIMIT,
};
pub use matrix::{IntervalMatrix, IntervalVector};
pub use scalar::Interval;
