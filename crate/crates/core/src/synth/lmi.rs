//! Small dense LMI solver: log-barrier interior point over a symmetric
//! matrix variable `P` (stored as its upper triangle) and one scalar `v`,
//! maximizing `v` subject to blocks
//!
//! ```text
//! G_k(P, v) = C_k + Σ_t w_t M_tᵀ P M_t + c_k·v·I ≻ 0.
//! ```
//!
//! Newton systems are assembled from `Z = M_t G⁻¹ M_t'ᵀ` with constant work
//! per Hessian entry.

use nalgebra::{DMatrix, DVector};

/// One constraint block.
#[derive(Clone, Debug)]
pub struct LmiBlock {
    pub constant: Option<DMatrix<f64>>,
    /// `(w_t, M_t)` pairs contributing `w_t M_tᵀ P M_t`.
    pub terms: Vec<(f64, DMatrix<f64>)>,
    pub v_coef: f64,
}

impl LmiBlock {
    fn eval(&self, p: &DMatrix<f64>, v: f64) -> DMatrix<f64> {
        let n = p.nrows();
        let mut g = self.constant.clone().unwrap_or_else(|| DMatrix::zeros(n, n));
        for (w, m) in &self.terms {
            g += (m.transpose() * p * m) * *w;
        }
        if self.v_coef != 0.0 {
            for i in 0..n {
                g[(i, i)] += self.v_coef * v;
            }
        }
        g
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BarrierOptions {
    /// Stop once the barrier gap bound `Σ dim / t` is below this.
    pub gap_tol: f64,
    pub t0: f64,
    pub mu: f64,
    pub max_newton: usize,
    /// Stop as soon as a centered point has `v > 0`.
    pub stop_when_positive: bool,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        Self { gap_tol: 1e-9, t0: 1.0, mu: 8.0, max_newton: 80, stop_when_positive: false }
    }
}

#[derive(Clone, Debug)]
pub struct BarrierOutcome {
    pub p: DMatrix<f64>,
    pub v: f64,
    /// Upper bound on the optimal `v` from the last centered point, if any.
    pub v_upper: Option<f64>,
    /// Whether the schedule completed without Newton breakdown.
    pub converged: bool,
}

/// Index pairs `(i, j)`, `i ≤ j`, of the upper triangle.
fn svec_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            out.push((i, j));
        }
    }
    out
}

fn unpack(pairs: &[(usize, usize)], n: usize, x: &DVector<f64>) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(n, n);
    for (a, &(i, j)) in pairs.iter().enumerate() {
        p[(i, j)] = x[a];
        p[(j, i)] = x[a];
    }
    p
}

/// `Σ log det G_k` if every block is positive definite.
fn log_det_all(blocks: &[LmiBlock], p: &DMatrix<f64>, v: f64) -> Option<f64> {
    let mut total = 0.0;
    for b in blocks {
        let g = b.eval(p, v);
        let ch = nalgebra::Cholesky::new(crate::linalg::sym(&g))?;
        let l = ch.l_dirty();
        for i in 0..g.nrows() {
            let d = l[(i, i)];
            if !(d > 0.0 && d.is_finite()) {
                return None;
            }
            total += 2.0 * d.ln();
        }
    }
    Some(total)
}

/// Gradient and Hessian of `−Σ log det G_k` with respect to `(svec P, v)`.
fn barrier_derivatives(
    blocks: &[LmiBlock],
    pairs: &[(usize, usize)],
    p: &DMatrix<f64>,
    v: f64,
) -> Option<(DVector<f64>, DMatrix<f64>)> {
    let nv = pairs.len();
    let dim = nv + 1;
    let mut grad = DVector::zeros(dim);
    let mut hess = DMatrix::zeros(dim, dim);
    // c_a: 1/2 on the diagonal so that X_a = c_a(E_ij + E_ji) has unit entries.
    let ca: Vec<f64> = pairs.iter().map(|&(i, j)| if i == j { 0.5 } else { 1.0 }).collect();

    for b in blocks {
        let g = crate::linalg::sym(&b.eval(p, v));
        let s = nalgebra::Cholesky::new(g)?.inverse();
        let ms: Vec<DMatrix<f64>> = b.terms.iter().map(|(_, m)| m.clone()).collect();
        let ws: Vec<f64> = b.terms.iter().map(|(w, _)| *w).collect();
        let ys: Vec<DMatrix<f64>> = ms.iter().map(|m| m * &s).collect();

        for t in 0..ms.len() {
            for u in 0..ms.len() {
                let z = &ys[t] * ms[u].transpose();
                let wt = ws[t] * ws[u];
                if t == u {
                    for (a, &(i, j)) in pairs.iter().enumerate() {
                        grad[a] -= ws[t] * 2.0 * ca[a] * z[(i, j)];
                    }
                }
                for (a, &(i, j)) in pairs.iter().enumerate() {
                    let f = wt * ca[a] * 2.0;
                    for (bb, &(k, l)) in pairs.iter().enumerate().skip(a) {
                        hess[(a, bb)] += f * ca[bb] * (z[(j, k)] * z[(i, l)] + z[(j, l)] * z[(i, k)]);
                    }
                }
            }
        }
        if b.v_coef != 0.0 {
            let c = b.v_coef;
            grad[nv] -= c * s.trace();
            hess[(nv, nv)] += c * c * s.norm_squared();
            let s2 = &s * &s;
            for t in 0..ms.len() {
                let q = &ms[t] * &s2 * ms[t].transpose();
                for (a, &(i, j)) in pairs.iter().enumerate() {
                    hess[(a, nv)] += c * ws[t] * 2.0 * ca[a] * q[(i, j)];
                }
            }
        }
    }
    for a in 0..dim {
        for bb in 0..a {
            hess[(a, bb)] = hess[(bb, a)];
        }
    }
    Some((grad, hess))
}

fn newton_direction(hess: &DMatrix<f64>, grad: &DVector<f64>) -> Option<DVector<f64>> {
    let rhs = -grad;
    if let Some(ch) = nalgebra::Cholesky::new(hess.clone()) {
        let d = ch.solve(&rhs);
        if d.iter().all(|x| x.is_finite()) {
            return Some(d);
        }
    }
    let d = hess.clone().lu().solve(&rhs)?;
    d.iter().all(|x| x.is_finite()).then_some(d)
}

/// Maximizes `v` from a strictly feasible `(p0, v0)`.
pub fn maximize(blocks: &[LmiBlock], p0: &DMatrix<f64>, v0: f64, opts: &BarrierOptions) -> BarrierOutcome {
    let n = p0.nrows();
    let pairs = svec_pairs(n);
    let nv = pairs.len();
    let mut x = DVector::from_iterator(nv + 1, pairs.iter().map(|&(i, j)| p0[(i, j)]).chain(std::iter::once(v0)));
    let total_dim: f64 = (blocks.len() * n) as f64;
    let mut t = opts.t0;
    let mut v_upper = None;

    let objective = |x: &DVector<f64>, t: f64| -> Option<f64> {
        let p = unpack(&pairs, n, x);
        log_det_all(blocks, &p, x[nv]).map(|ld| -t * x[nv] - ld)
    };

    let mut f = match objective(&x, t) {
        Some(f) => f,
        None => return BarrierOutcome { p: p0.clone(), v: v0, v_upper: None, converged: false },
    };
    loop {
        let mut centered = false;
        for _ in 0..opts.max_newton {
            let p = unpack(&pairs, n, &x);
            let Some((mut grad, hess)) = barrier_derivatives(blocks, &pairs, &p, x[nv]) else {
                break;
            };
            grad[nv] -= t;
            let Some(dx) = newton_direction(&hess, &grad) else {
                break;
            };
            let dec = -grad.dot(&dx);
            if !(dec >= 0.0) {
                break;
            }
            if dec / 2.0 < 1e-10 {
                centered = true;
                break;
            }
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let cand = &x + &dx * step;
                if let Some(fc) = objective(&cand, t) {
                    if fc <= f - 0.25 * step * dec {
                        x = cand;
                        f = fc;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                // No further progress at machine precision; treat as centered.
                centered = dec < 1e-6;
                break;
            }
        }
        let p = unpack(&pairs, n, &x);
        if !centered {
            return BarrierOutcome { p, v: x[nv], v_upper, converged: false };
        }
        let gap = total_dim / t;
        v_upper = Some(x[nv] + gap);
        if opts.stop_when_positive && x[nv] > 0.0 {
            return BarrierOutcome { p, v: x[nv], v_upper, converged: true };
        }
        if opts.stop_when_positive && x[nv] + gap <= 0.0 {
            return BarrierOutcome { p, v: x[nv], v_upper, converged: true };
        }
        if gap < opts.gap_tol {
            return BarrierOutcome { p, v: x[nv], v_upper, converged: true };
        }
        t *= opts.mu;
        f = objective(&x, t).expect("feasibility is independent of t");
    }
}
