//! Synthesis of the Lyapunov matrix `P = K Kᵀ`: discrete Lyapunov baseline,
//! robust LMI with preconditioning, and the outer `β` heuristic.
//!
//! Any `P` is acceptable to the certificate; synthesis quality only affects
//! how tight the resulting bound is.

mod lmi;
mod lyapunov;

use nalgebra::DMatrix;

use crate::decomp::Decomposition;
use crate::error::Result;
use crate::exec::Exec;
use crate::linalg;
use crate::model::ClosedLoopSystem;
use crate::pnorm::DEFAULT_ORDER;
use crate::verify::{Certificate, VerifyOptions, Verifier};

pub use lmi::{maximize, BarrierOptions, BarrierOutcome, LmiBlock};
pub use lyapunov::lyapunov_p;

/// Default gap tolerance of the LMI solver.
pub const DEFAULT_LMI_TOLERANCE: f64 = 1e-9;
/// Robustness margin below which the heuristic shrinks its step factor.
pub const GAMMA_SMALL: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynthesisStatus {
    Ok,
    Infeasible,
    NumericalFailure,
}

#[derive(Clone, Debug)]
pub struct SynthesisResult {
    pub status: SynthesisStatus,
    /// Lower-triangular factor with `P = K Kᵀ`.
    pub k: Option<DMatrix<f64>>,
    /// Achieved margin `γ` in `γI ≺ P ≺ I`.
    pub gamma: f64,
}

impl SynthesisResult {
    pub fn failed(status: SynthesisStatus) -> Self {
        Self { status, k: None, gamma: f64::NAN }
    }

    pub fn is_ok(&self) -> bool {
        self.status == SynthesisStatus::Ok
    }
}

/// `max γ` s.t. `AᵀPA ≺ ρ̄²P`, `ΔᵀPΔ ≺ β²P` for `Δ ∈ 𝒟`, `γI ≺ P ≺ I`.
#[derive(Clone, Debug)]
pub struct SynthesisProblem {
    pub a_nom: DMatrix<f64>,
    pub deviation_set: Vec<DMatrix<f64>>,
    pub rho_bar: f64,
    pub beta: f64,
}

impl SynthesisProblem {
    fn blocks(&self, margin: bool) -> Vec<LmiBlock> {
        let n = self.a_nom.nrows();
        let id = DMatrix::<f64>::identity(n, n);
        let v_main = if margin { -1.0 } else { 0.0 };
        let mut blocks = vec![LmiBlock {
            constant: None,
            terms: vec![(self.rho_bar * self.rho_bar, id.clone()), (-1.0, self.a_nom.clone())],
            v_coef: v_main,
        }];
        for d in self.deviation_set.iter().filter(|d| d.amax() > 0.0) {
            blocks.push(LmiBlock {
                constant: None,
                terms: vec![(self.beta * self.beta, id.clone()), (-1.0, d.clone())],
                v_coef: v_main,
            });
        }
        blocks.push(LmiBlock { constant: None, terms: vec![(1.0, id.clone())], v_coef: -1.0 });
        blocks.push(LmiBlock { constant: Some(id.clone()), terms: vec![(-1.0, id)], v_coef: 0.0 });
        blocks
    }
}

/// Solves the robust LMI in two phases: first a strictly feasible `P`, then
/// the margin `γ` is maximized. `status` is `Infeasible` if no `P` with
/// `γ > gamma_floor` exists (within the solver tolerance).
pub fn lmi_p(prob: &SynthesisProblem, gamma_floor: f64, tolerance: f64) -> SynthesisResult {
    let n = prob.a_nom.nrows();
    if n == 0 {
        return SynthesisResult { status: SynthesisStatus::Ok, k: Some(DMatrix::zeros(0, 0)), gamma: 1.0 };
    }
    let p0 = DMatrix::<f64>::identity(n, n) * 0.5;

    let phase1 = prob.blocks(true);
    let start_margin = phase1
        .iter()
        .filter(|b| b.v_coef != 0.0)
        .map(|b| {
            let mut g = b.constant.clone().unwrap_or_else(|| DMatrix::zeros(n, n));
            for (w, m) in &b.terms {
                g += (m.transpose() * &p0 * m) * *w;
            }
            linalg::min_eigenvalue(&g)
        })
        .fold(f64::INFINITY, f64::min);
    let v0 = start_margin.min(0.0) - 1.0;
    let opts1 = BarrierOptions { stop_when_positive: true, gap_tol: tolerance, ..BarrierOptions::default() };
    let found = maximize(&phase1, &p0, v0, &opts1);
    if !(found.v > 0.0) {
        // Full gap tolerance without a positive margin: any feasible P would
        // have condition number beyond 1/tolerance.
        return if found.converged || found.v_upper.is_some_and(|u| u <= 0.0) {
            SynthesisResult::failed(SynthesisStatus::Infeasible)
        } else {
            SynthesisResult::failed(SynthesisStatus::NumericalFailure)
        };
    }

    let phase2 = prob.blocks(false);
    let p1 = linalg::sym(&found.p);
    let lmin = linalg::min_eigenvalue(&p1);
    if !(lmin > 0.0) {
        return SynthesisResult::failed(SynthesisStatus::NumericalFailure);
    }
    let opts2 = BarrierOptions { gap_tol: tolerance, ..BarrierOptions::default() };
    let best = maximize(&phase2, &p1, 0.5 * lmin, &opts2);
    let p = linalg::sym(&best.p);
    match linalg::cholesky_lower(&p) {
        Some(k) => {
            let status = if best.v > gamma_floor { SynthesisStatus::Ok } else { SynthesisStatus::Infeasible };
            SynthesisResult { status, k: Some(k), gamma: best.v }
        }
        None => SynthesisResult::failed(SynthesisStatus::NumericalFailure),
    }
}

/// Coordinates in which the nominal matrix is a strict contraction.
#[derive(Clone, Debug)]
pub struct Preconditioned {
    /// Lower Cholesky factor of the nominal `P`.
    pub k_nom: DMatrix<f64>,
    /// `R⁻¹ = K_nomᵀ` (upper triangular).
    pub r_inv: DMatrix<f64>,
    pub a_tilde: DMatrix<f64>,
    pub devs_tilde: Vec<DMatrix<f64>>,
}

/// Nominal LMI (`ρ̄ = 1`, no deviations), then `Ã = R⁻¹AR`, `Δ̃ = R⁻¹ΔR`.
pub fn precondition(
    a: &DMatrix<f64>,
    devs: &[DMatrix<f64>],
    tolerance: f64,
) -> std::result::Result<Preconditioned, SynthesisStatus> {
    let prob = SynthesisProblem { a_nom: a.clone(), deviation_set: vec![], rho_bar: 1.0, beta: 0.0 };
    let res = lmi_p(&prob, 0.0, tolerance);
    let k_nom = match (res.status, res.k) {
        (SynthesisStatus::Ok, Some(k)) => k,
        (status, _) => return Err(if status == SynthesisStatus::Ok { SynthesisStatus::NumericalFailure } else { status }),
    };
    let r = linalg::lower_inverse_transpose(&k_nom).ok_or(SynthesisStatus::NumericalFailure)?;
    let r_inv = k_nom.transpose();
    let a_tilde = &r_inv * a * &r;
    let devs_tilde = devs.iter().map(|d| &r_inv * d * &r).collect();
    Ok(Preconditioned { k_nom, r_inv, a_tilde, devs_tilde })
}

/// `(P^{1/2})ᵀ = (P̃^{1/2})ᵀ R⁻¹`; the transpose of the result is the lower
/// Cholesky factor of `P = R⁻ᵀ P̃ R⁻¹`.
pub fn inverse_transform_cholesky(k_tilde: &DMatrix<f64>, r_inv: &DMatrix<f64>) -> DMatrix<f64> {
    k_tilde.transpose() * r_inv
}

/// `ρ̄ = 0.8 + 0.2ρ(A)` and `β₀ = (1 − ρ̄) / (4(m + p + mp))`.
pub fn heuristic_parameters(rho_a: f64, m: usize, p: usize) -> (f64, f64) {
    let rho_bar = 0.8 + 0.2 * rho_a;
    let beta0 = 0.25 * (1.0 - rho_bar) / (m + p + m * p) as f64;
    (rho_bar, beta0)
}

/// Deviation samples `A(Δt) − A(0)` at the extreme uniform timings:
/// every side takes `lo`, `0` or `hi` on all of its channels, minus the
/// all-zero combination. Zero and repeated matrices are dropped.
pub fn deviation_set(dec: &Decomposition, sys: &ClosedLoopSystem) -> Vec<DMatrix<f64>> {
    let m = sys.num_inputs();
    let p = sys.num_outputs();
    let u_opts = [sys.dt_u_lo.as_slice().to_vec(), vec![0.0; m], sys.dt_u_hi.as_slice().to_vec()];
    let y_opts = [sys.dt_y_lo.as_slice().to_vec(), vec![0.0; p], sys.dt_y_hi.as_slice().to_vec()];
    let mut out: Vec<DMatrix<f64>> = Vec::new();
    for (a, du) in u_opts.iter().enumerate() {
        for (b, dy) in y_opts.iter().enumerate() {
            if a == 1 && b == 1 {
                continue;
            }
            let d = dec.sum(du, dy) - &dec.a_nominal;
            if d.amax() > 0.0 && !out.contains(&d) {
                out.push(d);
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug)]
pub struct SynthesisOptions {
    pub lmi_tolerance: f64,
    pub heuristic_iterations: usize,
    pub taylor_order: usize,
    pub exec: Exec,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self {
            lmi_tolerance: DEFAULT_LMI_TOLERANCE,
            heuristic_iterations: 3,
            taylor_order: DEFAULT_ORDER,
            exec: Exec::default(),
        }
    }
}

/// One pass of the heuristic.
#[derive(Clone, Debug)]
pub struct BetaIteration {
    pub beta: f64,
    pub status: SynthesisStatus,
    pub gamma: f64,
    pub rho_n: Option<f64>,
    pub rho_tilde: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct BetaSearchOutcome {
    pub rho_a: f64,
    pub rho_bar: f64,
    pub result: SynthesisResult,
    pub certificate: Certificate,
    pub iterations: Vec<BetaIteration>,
    /// Whether the Lyapunov (or identity) fallback produced the result.
    pub fallback: bool,
}

/// Searches `β`, keeping the factor with the smallest verified `ρ̃`.
pub fn beta_search(sys: &ClosedLoopSystem, dec: &Decomposition, opts: &SynthesisOptions) -> Result<BetaSearchOutcome> {
    let verifier = Verifier::new(sys, VerifyOptions { taylor_order: opts.taylor_order, exec: opts.exec })?;
    let a = &dec.a_nominal;
    let n = a.nrows();
    let rho_a = linalg::spectral_radius(a);
    let (rho_bar, mut beta) = heuristic_parameters(rho_a, sys.num_inputs(), sys.num_outputs());
    let mut iterations = Vec::new();
    let mut best: Option<(SynthesisResult, Certificate)> = None;

    let pre = if rho_a < 1.0 {
        precondition(a, &deviation_set(dec, sys), opts.lmi_tolerance).ok()
    } else {
        None
    };
    if let Some(pre) = &pre {
        let mut delta_h = 2.0;
        for _ in 0..opts.heuristic_iterations {
            let prob = SynthesisProblem {
                a_nom: pre.a_tilde.clone(),
                deviation_set: pre.devs_tilde.clone(),
                rho_bar,
                beta,
            };
            let res = lmi_p(&prob, 0.0, opts.lmi_tolerance);
            let k = match (&res.status, &res.k) {
                (SynthesisStatus::Ok, Some(kt)) => inverse_transform_cholesky(kt, &pre.r_inv).transpose(),
                _ => {
                    iterations.push(BetaIteration { beta, status: res.status, gamma: res.gamma, rho_n: None, rho_tilde: None });
                    // A larger β relaxes the deviation constraints.
                    beta *= 4.0;
                    continue;
                }
            };
            let cert = verifier.certify(&k);
            let rho_n = cert.rho_n.hi();
            // ρ(A) ≤ ‖A‖_P for every P; a smaller value signals broken numerics.
            if rho_n < rho_a - 1e-6 {
                iterations.push(BetaIteration {
                    beta,
                    status: SynthesisStatus::NumericalFailure,
                    gamma: res.gamma,
                    rho_n: Some(rho_n),
                    rho_tilde: None,
                });
                beta *= 4.0;
                continue;
            }
            iterations.push(BetaIteration {
                beta,
                status: res.status,
                gamma: res.gamma,
                rho_n: Some(rho_n),
                rho_tilde: Some(cert.rho_tilde.hi()),
            });
            let better = best.as_ref().is_none_or(|(_, c)| cert.rho_tilde.hi() < c.rho_tilde.hi());
            let gamma = res.gamma;
            if better {
                best = Some((SynthesisResult { status: SynthesisStatus::Ok, k: Some(k), gamma }, cert));
            }
            if rho_n > 1.0 {
                beta /= 4.0;
                continue;
            }
            if gamma < GAMMA_SMALL {
                delta_h *= 0.45;
            }
            let denom = (rho_bar - rho_n).max(1e-3 * (1.0 - rho_bar));
            beta = delta_h * beta * (1.0 - rho_n) / denom;
        }
    }

    if let Some((result, certificate)) = best {
        return Ok(BetaSearchOutcome { rho_a, rho_bar, result, certificate, iterations, fallback: false });
    }
    let lyap = lyapunov_p(a, rho_bar);
    let k = lyap.k.clone().unwrap_or_else(|| DMatrix::identity(n, n));
    let certificate = verifier.certify(&k);
    let result = if lyap.is_ok() { lyap } else { SynthesisResult { status: lyap.status, k: Some(k), gamma: f64::NAN } };
    Ok(BetaSearchOutcome { rho_a, rho_bar, result, certificate, iterations, fallback: true })
}
