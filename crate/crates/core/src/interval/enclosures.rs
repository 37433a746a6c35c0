//! Verified enclosures built on [`IntervalMatrix`].

use nalgebra::DMatrix;

use super::{Interval, IntervalMatrix};
use crate::error::{Error, Result};

/// Taylor order used by [`exp_enclosure`] after scaling.
pub const EXP_TAYLOR_ORDER: usize = 20;

/// Rump's tight path is abandoned once `‖I − ṼᵀṼ‖` may exceed this.
pub const RUMP_ALPHA_LIMIT: f64 = 0.5;

/// Frobenius bound on the spectral norm: the upper endpoint bounds
/// `‖M‖_σ` for every member `M`.
pub fn frobenius_norm_bound(a: &IntervalMatrix) -> Interval {
    a.frobenius()
}

/// Two-sided enclosure of the largest singular value of every member of `a`.
///
/// Uses Rump's bound: with an approximate right singular basis `Ṽ` of the
/// midpoint, split `ṼᵀAᵀAṼ = D + E` (diagonal plus remainder) and bound
/// `‖I − ṼᵀṼ‖ ≤ α`, `‖E‖ ≤ ε`; then
/// `(max dᵢ − ε)/(1 + α) ≤ σ_max² ≤ (max dᵢ + ε)/(1 − α)`.
/// Falls back to `[0, frobenius]` when `α` is not comfortably below one.
pub fn spectral_norm_enclosure(a: &IntervalMatrix) -> Interval {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Interval::ZERO;
    }
    // The two-sided bound needs a square Ṽ, i.e. at least as many rows as
    // columns.
    if m < n {
        return spectral_norm_enclosure(&a.transpose());
    }
    let frob = frobenius_norm_bound(a);
    if frob.hi() == 0.0 {
        return Interval::ZERO;
    }
    let fallback = Interval::new(0.0, frob.hi());

    let mid = a.mid();
    let Some(svd) = mid.try_svd(false, true, f64::EPSILON, 0) else {
        return fallback;
    };
    let Some(v_t) = svd.v_t else {
        return fallback;
    };
    if v_t.nrows() != n || v_t.iter().any(|x| !x.is_finite()) {
        return fallback;
    }
    let v = IntervalMatrix::from_point(&v_t.transpose());

    let vtv = &v.transpose() * &v;
    let defect = &IntervalMatrix::identity(n) - &vtv;
    let alpha = frobenius_norm_bound(&defect).hi();
    if !(alpha < RUMP_ALPHA_LIMIT) {
        return fallback;
    }

    let w = a * &v;
    let g = &w.transpose() * &w;
    let mut dmax_lo = f64::NEG_INFINITY;
    let mut dmax_hi = f64::NEG_INFINITY;
    let mut off = Interval::ZERO;
    for i in 0..n {
        for j in 0..n {
            let gij = g[(i, j)];
            if i == j {
                dmax_lo = dmax_lo.max(gij.lo());
                dmax_hi = dmax_hi.max(gij.hi());
            } else {
                off += gij.sqr();
            }
        }
    }
    let eps = off.sqrt().hi();
    let alpha_iv = Interval::point(alpha);
    let upper = ((Interval::point(dmax_hi.max(0.0)) + Interval::point(eps)) / (Interval::ONE - alpha_iv))
        .sqrt()
        .hi();
    let lower_sq = (Interval::point(dmax_lo) - Interval::point(eps)) / (Interval::ONE + alpha_iv);
    let lower = if lower_sq.lo() > 0.0 { lower_sq.sqrt().lo() } else { 0.0 };
    let upper = upper.min(frob.hi());
    Interval::new(lower.min(upper), upper)
}

/// Enclosure of `e^M` for every member `M` of the square matrix `a`.
///
/// Scales by `2^-s` until the Frobenius bound `Θ` is at most one half, sums
/// the Taylor series to order [`EXP_TAYLOR_ORDER`] in interval arithmetic,
/// adds the truncation ball `Θ^{r+1}/((r+1)!(1 − Θ/(r+2)))` to each entry and
/// squares `s` times.
pub fn exp_enclosure(a: &IntervalMatrix) -> IntervalMatrix {
    assert!(a.is_square(), "matrix exponential of a non-square matrix");
    let n = a.nrows();
    if n == 0 {
        return IntervalMatrix::zeros(0, 0);
    }
    let norm = frobenius_norm_bound(a).hi();
    let mut s: i32 = 0;
    let mut theta = norm;
    while theta > 0.5 {
        s += 1;
        theta = norm * (-(s as f64)).exp2();
    }
    // Scaling by a power of two is exact away from the subnormal range.
    let scale = Interval::point((-(s as f64)).exp2());
    let x = a.scale(scale);
    let theta = frobenius_norm_bound(&x).hi();

    let r = EXP_TAYLOR_ORDER;
    let id = IntervalMatrix::identity(n);
    // Horner: I + X(I + X/2(I + X/3(...))).
    let mut acc = id.clone();
    for k in (1..=r).rev() {
        let term = (&x * &acc).scale(Interval::ONE / Interval::point(k as f64));
        acc = &id + &term;
    }

    let theta_iv = Interval::point(theta);
    let mut fact = Interval::ONE;
    for k in 1..=(r + 1) {
        fact = fact * Interval::point(k as f64);
    }
    let tail = theta_iv.powi(r as u32 + 1) / fact / (Interval::ONE - theta_iv / Interval::point((r + 2) as f64));
    let ball = Interval::ball(tail.hi());
    let mut e = IntervalMatrix::from_fn(n, n, |i, j| acc[(i, j)] + ball);

    for _ in 0..s {
        e = &e * &e;
    }
    e
}

/// Interval Cholesky factor `L` (lower triangular) enclosing the exact
/// factor of every symmetric positive-definite member. Success with all
/// pivots strictly positive certifies that every symmetric member is
/// positive definite.
pub fn cholesky_enclosure(p: &IntervalMatrix) -> Result<IntervalMatrix> {
    if !p.is_square() {
        return Err(Error::Dimension(format!("cholesky of {}x{} matrix", p.nrows(), p.ncols())));
    }
    let n = p.nrows();
    let mid = p.mid();
    let scale = mid.amax().max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..i {
            if (mid[(i, j)] - mid[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::Precondition(format!("midpoint not symmetric at ({i}, {j})")));
            }
        }
    }
    let mut l = IntervalMatrix::zeros(n, n);
    for j in 0..n {
        let mut s = p[(j, j)];
        for k in 0..j {
            s = s - l[(j, k)].sqr();
        }
        if !(s.lo() > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let d = s.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut t = p[(i, j)];
            for k in 0..j {
                t = t - l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = t / d;
        }
    }
    Ok(l)
}

/// Enclosure of `L⁻¹` for every member of the lower-triangular `l`, by
/// forward substitution on the identity.
pub fn triangular_inverse_enclosure(l: &IntervalMatrix) -> Result<IntervalMatrix> {
    if !l.is_square() {
        return Err(Error::Dimension(format!("triangular inverse of {}x{} matrix", l.nrows(), l.ncols())));
    }
    let n = l.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if l[(i, j)] != Interval::ZERO {
                return Err(Error::Precondition(format!("matrix not lower triangular at ({i}, {j})")));
            }
        }
        if l[(i, i)].contains_zero() {
            return Err(Error::Singular { index: i });
        }
    }
    let mut x = IntervalMatrix::zeros(n, n);
    for j in 0..n {
        x[(j, j)] = Interval::ONE / l[(j, j)];
        for i in (j + 1)..n {
            let mut s = Interval::ZERO;
            for k in j..i {
                s += l[(i, k)] * x[(k, j)];
            }
            x[(i, j)] = -s / l[(i, i)];
        }
    }
    Ok(x)
}

/// Floating-point largest singular value, used for cross-checks and the
/// unverified fast mode.
pub fn float_spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}
