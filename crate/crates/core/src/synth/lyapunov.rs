use nalgebra::DMatrix;

use super::{SynthesisResult, SynthesisStatus};
use crate::linalg;

const MAX_DOUBLINGS: usize = 64;

/// Solves `(A/ρ̄)ᵀ P (A/ρ̄) − P = −I` by Smith doubling and returns the
/// Cholesky factor of `P`. In exact arithmetic `‖A‖_P ≤ ρ̄`.
pub fn lyapunov_p(a: &DMatrix<f64>, rho_bar: f64) -> SynthesisResult {
    let n = a.nrows();
    if !(rho_bar > 0.0) || linalg::spectral_radius(a) >= rho_bar {
        return SynthesisResult::failed(SynthesisStatus::Infeasible);
    }
    match stein_solution(&(a / rho_bar)) {
        Some(p) => match linalg::cholesky_lower(&p) {
            Some(k) => {
                let gamma = linalg::min_eigenvalue(&p) / linalg::max_eigenvalue(&p);
                SynthesisResult { status: SynthesisStatus::Ok, k: Some(k), gamma }
            }
            None => SynthesisResult::failed(SynthesisStatus::NumericalFailure),
        },
        None if n == 0 => SynthesisResult { status: SynthesisStatus::Ok, k: Some(DMatrix::zeros(0, 0)), gamma: 1.0 },
        None => SynthesisResult::failed(SynthesisStatus::NumericalFailure),
    }
}

/// `P = Σ_k (Aᵀ)^k A^k`, summed by repeated squaring.
fn stein_solution(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    if n == 0 {
        return None;
    }
    let mut p = DMatrix::<f64>::identity(n, n);
    let mut ak = a.clone();
    for _ in 0..MAX_DOUBLINGS {
        let add = ak.transpose() * &p * &ak;
        p += &add;
        if !p.iter().all(|x| x.is_finite()) {
            return None;
        }
        if add.amax() <= 1e-17 * p.amax() {
            return Some(linalg::sym(&p));
        }
        ak = &ak * &ak;
    }
    None
}
