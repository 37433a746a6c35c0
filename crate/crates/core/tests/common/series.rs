//! Deviation terms evaluated from their constant factors by a direct power
//! series, free of the cancellation in `expm(X) − I`.

use jitterbound::decomp::{Decomposition, DeviationKind};
use nalgebra::DMatrix;

/// `e^{X} − I`.
pub fn expm1(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = DMatrix::zeros(n, n);
    for k in 1..200 {
        term = &term * x / k as f64;
        sum += &term;
        if term.amax() <= 1e-18 * sum.amax() {
            break;
        }
    }
    sum
}

/// Term value at `tau` from its constant factors.
pub fn term(dec: &Decomposition, kind: DeviationKind, tau: f64) -> DMatrix<f64> {
    let g = dec.generator(kind);
    if kind.one_sided() && tau <= 0.0 {
        return DMatrix::zeros(g.m1.nrows(), g.m2.ncols());
    }
    &g.m1 * expm1(&(&dec.lis.a_cont * (g.sign * tau))) * &g.m2
}
