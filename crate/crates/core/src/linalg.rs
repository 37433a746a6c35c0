//! Floating-point helpers shared by synthesis, sampling and the oracles.

use nalgebra::{DMatrix, DVector};

/// `e^M` by scaling and squaring with a Padé kernel.
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.is_empty() {
        return m.clone();
    }
    m.clone().exp()
}

/// Spectral radius from the real Schur form.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest singular value.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().max()
}

/// Symmetric part `(A + Aᵀ)/2`.
pub fn sym(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Lower Cholesky factor of a symmetric matrix, or `None` if it is not
/// numerically positive definite.
pub fn cholesky_lower(p: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let l = nalgebra::Cholesky::new(sym(p))?.l();
    if l.iter().all(|x| x.is_finite()) && l.diagonal().iter().all(|&d| d > 0.0) {
        Some(l)
    } else {
        None
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(p: &DMatrix<f64>) -> f64 {
    sym(p).symmetric_eigenvalues().min()
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_eigenvalue(p: &DMatrix<f64>) -> f64 {
    sym(p).symmetric_eigenvalues().max()
}

pub fn is_lower_triangular(k: &DMatrix<f64>) -> bool {
    k.is_square() && (0..k.nrows()).all(|i| ((i + 1)..k.ncols()).all(|j| k[(i, j)] == 0.0))
}

/// `K⁻ᵀ` for a lower-triangular `K` with nonzero diagonal.
pub fn lower_inverse_transpose(k: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = k.nrows();
    let inv = k.solve_lower_triangular(&DMatrix::identity(n, n))?;
    Some(inv.transpose())
}

/// Floating-point `‖A‖_P = ‖Kᵀ A K⁻ᵀ‖_σ` for `P = K Kᵀ`, `K` lower triangular.
pub fn pnorm_float(k: &DMatrix<f64>, a: &DMatrix<f64>) -> f64 {
    let kit = lower_inverse_transpose(k).expect("singular Cholesky factor");
    spectral_norm(&(k.transpose() * a * kit))
}

/// Same as [`pnorm_float`] with `K⁻ᵀ` supplied.
pub fn pnorm_float_with(k_t: &DMatrix<f64>, k_inv_t: &DMatrix<f64>, a: &DMatrix<f64>) -> f64 {
    spectral_norm(&(k_t * a * k_inv_t))
}

/// Block-diagonal matrix with the given blocks.
pub fn block_diag(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let r: usize = blocks.iter().map(|b| b.nrows()).sum();
    let c: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(r, c);
    let (mut i, mut j) = (0, 0);
    for b in blocks {
        out.view_mut((i, j), b.shape()).copy_from(b);
        i += b.nrows();
        j += b.ncols();
    }
    out
}

/// Concatenation of vectors.
pub fn vcat(parts: &[&DVector<f64>]) -> DVector<f64> {
    DVector::from_iterator(parts.iter().map(|v| v.len()).sum(), parts.iter().flat_map(|v| v.iter().copied()))
}

/// Max-abs relative difference `‖a − b‖_max / max(1, ‖b‖_max)`.
pub fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax().max(1.0)
}
