//! Certificate assembly: `ρ̃ = ‖A(0)‖_P + Σ h_k(δ_k)`; the loop is stable
//! when the upper endpoint of `ρ̃` is below one.

use std::cmp::Ordering;

use nalgebra::DMatrix;

use crate::decomp::{decompose, verified_factors, DeviationKind, VerifiedFactors};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::interval::{cholesky_enclosure, spectral_norm_enclosure, Interval, IntervalMatrix};
use crate::linalg;
use crate::model::{build_lis, ClosedLoopSystem, LisSpec};
use crate::pnorm::{generator_norms, pnorm, DeviationBound, EllipsoidNorm, GeneratorNorms, DEFAULT_ORDER};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Unknown,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::Unknown => "unknown",
        }
    }
}

/// Continuous-time decay `|x(t)| ≤ D e^{λ(t−t₀)} |x(t₀)|` and its ingredients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cges {
    pub lambda: f64,
    pub d: f64,
    /// `‖K‖_σ‖K⁻¹‖_σ`.
    pub c: f64,
    pub c_ev: f64,
    pub c_bar: f64,
    pub lambda_bar: f64,
}

/// Inputs of the decay constant that do not depend on `P`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgesInputs {
    /// `ln(ρ)/T`, rounded up.
    pub lambda: f64,
    /// Largest spectral norm over all event matrices.
    pub c_ev: f64,
    /// `C_ev^{m+p}`.
    pub c_bar: f64,
    /// `‖A_cont‖_σ`, rounded up.
    pub lambda_bar: f64,
}

impl CgesInputs {
    /// `D = C · C̄ · e^{λ̄T} / ρ`.
    ///
    /// The sample preceding `t` is `k = ⌊(t − t₀)/T⌋` periods old, so
    /// `ρ^k ≤ e^{λ(t − t₀)}/ρ`; the division by `ρ` accounts for the
    /// partial period.
    pub fn with_dges_constant(self, c: f64, rho: f64, period: f64) -> Cges {
        let d = Interval::point(c)
            * Interval::point(self.c_bar)
            * (Interval::point(self.lambda_bar) * Interval::point(period)).exp()
            / Interval::point(rho.max(f64::MIN_POSITIVE));
        Cges {
            lambda: self.lambda,
            d: d.hi().max(1.0),
            c,
            c_ev: self.c_ev,
            c_bar: self.c_bar,
            lambda_bar: self.lambda_bar,
        }
    }
}

/// `λ`, `C_ev`, `C̄` and `λ̄` for a verified contraction bound `rho_tilde_upper < 1`.
pub fn cges_constants(sys: &ClosedLoopSystem, rho_tilde_upper: f64) -> Result<CgesInputs> {
    let lis = build_lis(sys)?;
    let (c_ev, lambda_bar) = event_growth(&lis);
    cges_from_parts(&lis, rho_tilde_upper, c_ev, lambda_bar)
}

fn event_growth(lis: &LisSpec) -> (f64, f64) {
    let c_ev = lis
        .event_kinds()
        .map(|k| spectral_norm_enclosure(&IntervalMatrix::from_point(lis.event(k))).hi())
        .fold(1.0, f64::max);
    let lambda_bar = spectral_norm_enclosure(&IntervalMatrix::from_point(&lis.a_cont)).hi();
    (c_ev, lambda_bar)
}

fn cges_from_parts(lis: &LisSpec, rho: f64, c_ev: f64, lambda_bar: f64) -> Result<CgesInputs> {
    if !(rho < 1.0) {
        return Err(Error::Precondition(format!("contraction bound {rho} is not below 1")));
    }
    let lambda = (Interval::point(rho.max(f64::MIN_POSITIVE)).ln() / Interval::point(lis.period)).hi();
    let events = (lis.state.m + lis.state.p) as u32;
    let c_bar = Interval::point(c_ev).powi(events).hi();
    Ok(CgesInputs { lambda, c_ev, c_bar, lambda_bar })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensitivityEntry {
    pub kind: DeviationKind,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityReport {
    pub entries: Vec<SensitivityEntry>,
    /// Set when every bound is zero.
    pub note: Option<&'static str>,
}

pub const NO_SENSITIVITY: &str = "no timing sensitivity at given bounds";

#[derive(Clone, Debug)]
pub struct Certificate {
    /// Interval lower-triangular factor of `P`.
    pub factor: IntervalMatrix,
    /// `‖A(0)‖_P`.
    pub rho_n: Interval,
    pub bounds: Vec<DeviationBound>,
    pub rho_tilde: Interval,
    pub verdict: Verdict,
    pub reason: Option<String>,
    /// Enclosure of `√cond(P) = ‖K‖_σ‖K⁻¹‖_σ`.
    pub condition: Option<Interval>,
    pub cges: Option<Cges>,
    pub taylor_order: usize,
}

impl Certificate {
    pub fn is_stable(&self) -> bool {
        self.verdict == Verdict::Stable
    }

    pub fn bound(&self, kind: DeviationKind) -> Option<&DeviationBound> {
        self.bounds.iter().find(|b| b.kind == kind)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub taylor_order: usize,
    pub exec: Exec,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { taylor_order: DEFAULT_ORDER, exec: Exec::default() }
    }
}

/// Caches everything about a system that does not depend on `P`.
#[derive(Clone, Debug)]
pub struct Verifier {
    sys: ClosedLoopSystem,
    lis: LisSpec,
    factors: VerifiedFactors,
    c_ev: f64,
    lambda_bar: f64,
    opts: VerifyOptions,
}

/// `P`-dependent data of a certificate that can be re-evaluated for other
/// timing windows.
#[derive(Clone, Debug)]
pub struct NormData {
    pub norm: EllipsoidNorm,
    pub rho_n: Interval,
    pub generators: Vec<GeneratorNorms>,
}

impl Verifier {
    pub fn new(sys: &ClosedLoopSystem, opts: VerifyOptions) -> Result<Self> {
        let lis = build_lis(sys)?;
        let factors = verified_factors(&lis);
        let (c_ev, lambda_bar) = event_growth(&lis);
        Ok(Self { sys: sys.clone(), lis, factors, c_ev, lambda_bar, opts })
    }

    pub fn system(&self) -> &ClosedLoopSystem {
        &self.sys
    }

    pub fn lis(&self) -> &LisSpec {
        &self.lis
    }

    /// Turns `p_factor` into a verified ellipsoid norm. A lower-triangular
    /// factor with positive diagonal is used as is; any other `F` is read as
    /// `P = F Fᵀ` and refactored with a verified Cholesky decomposition.
    pub fn ellipsoid(&self, p_factor: &DMatrix<f64>) -> std::result::Result<EllipsoidNorm, String> {
        let n = self.lis.n();
        if p_factor.shape() != (n, n) {
            return Err(format!("factor is {}x{}, expected {n}x{n}", p_factor.nrows(), p_factor.ncols()));
        }
        if p_factor.iter().any(|x| !x.is_finite()) {
            return Err("P not verifiably positive definite (non-finite factor)".into());
        }
        let k = if linalg::is_lower_triangular(p_factor) {
            // Column signs do not change K Kᵀ.
            let mut k = p_factor.clone();
            for j in 0..n {
                if k[(j, j)] < 0.0 {
                    k.column_mut(j).neg_mut();
                }
            }
            IntervalMatrix::from_point(&k)
        } else {
            let f = IntervalMatrix::from_point(p_factor);
            let p = &f * &f.transpose();
            let p = IntervalMatrix::from_fn(n, n, |i, j| if i >= j { p[(i, j)] } else { p[(j, i)] });
            cholesky_enclosure(&p).map_err(|e| format!("P not verifiably positive definite ({e})"))?
        };
        EllipsoidNorm::from_interval_factor(k).map_err(|e| format!("P not verifiably positive definite ({e})"))
    }

    pub fn norm_data(&self, norm: EllipsoidNorm) -> NormData {
        let rho_n = pnorm(&norm, &self.factors.nominal);
        let generators = generator_norms(&norm, &self.factors, self.opts.taylor_order, self.opts.exec);
        NormData { norm, rho_n, generators }
    }

    /// Certificate of `data` for the timing windows of `sys` (which must
    /// share plant and controller with this verifier's system).
    pub fn assemble(&self, data: &NormData, sys: &ClosedLoopSystem) -> Certificate {
        let bounds: Vec<DeviationBound> = data.generators.iter().map(|g| g.bound(g.kind.delta_max(sys))).collect();
        let rho_tilde = bounds.iter().fold(data.rho_n, |acc, b| acc + b.value);
        let condition = data.norm.condition_bound();
        let (verdict, reason, cges) = if rho_tilde.hi() < 1.0 {
            let cges = cges_from_parts(&self.lis, rho_tilde.hi(), self.c_ev, self.lambda_bar)
                .ok()
                .map(|inp| inp.with_dges_constant(condition.hi(), rho_tilde.hi(), self.lis.period));
            (Verdict::Stable, None, cges)
        } else {
            (Verdict::Unknown, Some(format!("rho_tilde upper bound {} >= 1", rho_tilde.hi())), None)
        };
        Certificate {
            factor: data.norm.factor().clone(),
            rho_n: data.rho_n,
            bounds,
            rho_tilde,
            verdict,
            reason,
            condition: Some(condition),
            cges,
            taylor_order: self.opts.taylor_order,
        }
    }

    pub fn certify(&self, p_factor: &DMatrix<f64>) -> Certificate {
        match self.ellipsoid(p_factor) {
            Ok(norm) => self.assemble(&self.norm_data(norm), &self.sys),
            Err(reason) => Certificate {
                factor: IntervalMatrix::from_point(p_factor),
                rho_n: Interval::new(0.0, f64::INFINITY),
                bounds: vec![],
                rho_tilde: Interval::new(0.0, f64::INFINITY),
                verdict: Verdict::Unknown,
                reason: Some(reason),
                condition: None,
                cges: None,
                taylor_order: self.opts.taylor_order,
            },
        }
    }
}

/// Verified certificate of `sys` in the norm given by `p_factor`.
pub fn certify(sys: &ClosedLoopSystem, p_factor: &DMatrix<f64>) -> Result<Certificate> {
    certify_with(sys, p_factor, VerifyOptions::default())
}

pub fn certify_with(sys: &ClosedLoopSystem, p_factor: &DMatrix<f64>, opts: VerifyOptions) -> Result<Certificate> {
    Ok(Verifier::new(sys, opts)?.certify(p_factor))
}

/// Channels ranked by bound, largest first; ties by kind, then index.
pub fn sensitivity_report(cert: &Certificate) -> SensitivityReport {
    let mut entries: Vec<SensitivityEntry> =
        cert.bounds.iter().map(|b| SensitivityEntry { kind: b.kind, bound: b.value.hi().max(0.0) }).collect();
    entries.sort_by(|a, b| match b.bound.partial_cmp(&a.bound).unwrap_or(Ordering::Equal) {
        Ordering::Equal => a.kind.cmp(&b.kind),
        o => o,
    });
    let note = entries.iter().all(|e| e.bound == 0.0).then_some(NO_SENSITIVITY);
    SensitivityReport { entries, note }
}

/// Unverified estimate with every bound replaced by a sampled maximum.
#[derive(Clone, Debug)]
pub struct ApproxCertificate {
    pub rho_n: f64,
    pub bounds: Vec<(DeviationKind, f64)>,
    pub rho_tilde: f64,
    pub samples: usize,
}

/// Sample points of a term: evenly spaced over `[−δ, δ]`, or over `(0, δ]`
/// for the one-sided actuator-to-sensor terms.
pub fn sample_points(kind: DeviationKind, delta: f64, samples: usize) -> Vec<f64> {
    if delta == 0.0 || samples == 0 {
        return vec![0.0];
    }
    if kind.one_sided() {
        (1..=samples).map(|k| delta * k as f64 / samples as f64).collect()
    } else if samples == 1 {
        vec![delta]
    } else {
        (0..samples).map(|k| -delta + 2.0 * delta * k as f64 / (samples - 1) as f64).collect()
    }
}

/// Floating-point estimate of `ρ̃` with each deviation bound replaced by the
/// maximum of `‖ΔA(τ)‖_P` over `samples` points.
pub fn approx_certify(sys: &ClosedLoopSystem, p_factor: &DMatrix<f64>, samples: usize, exec: Exec) -> Result<ApproxCertificate> {
    let dec = decompose(sys)?;
    let n = dec.lis.n();
    if p_factor.shape() != (n, n) {
        return Err(Error::Dimension(format!("factor is {}x{}, expected {n}x{n}", p_factor.nrows(), p_factor.ncols())));
    }
    let k = if linalg::is_lower_triangular(p_factor) {
        p_factor.clone()
    } else {
        linalg::cholesky_lower(&(p_factor * p_factor.transpose()))
            .ok_or_else(|| Error::Precondition("P is not numerically positive definite".into()))?
    };
    let k_t = k.transpose();
    let k_inv_t =
        linalg::lower_inverse_transpose(&k).ok_or_else(|| Error::Precondition("singular Cholesky factor".into()))?;
    let rho_n = linalg::pnorm_float_with(&k_t, &k_inv_t, &dec.a_nominal);
    let kinds: Vec<DeviationKind> = dec.kinds().collect();
    let jobs: Vec<(usize, f64)> = kinds
        .iter()
        .enumerate()
        .flat_map(|(g, kind)| sample_points(*kind, kind.delta_max(sys), samples).into_iter().map(move |t| (g, t)))
        .collect();
    let values = exec.map(&jobs, |&(g, tau)| linalg::pnorm_float_with(&k_t, &k_inv_t, &dec.eval(kinds[g], tau)));
    let mut maxima = vec![0.0f64; kinds.len()];
    for (&(g, _), v) in jobs.iter().zip(values) {
        maxima[g] = maxima[g].max(v);
    }
    let rho_tilde = rho_n + maxima.iter().sum::<f64>();
    Ok(ApproxCertificate { rho_n, bounds: kinds.into_iter().zip(maxima).collect(), rho_tilde, samples })
}

/// Largest certified uniform scale of the timing windows.
#[derive(Clone, Debug)]
pub struct ScaleSearch {
    /// Largest scale found with a stable verdict (0 if none).
    pub scale: f64,
    /// Certificate at that scale.
    pub certificate: Certificate,
}

/// Bisection over a factor `s ∈ [0, s_max]` applied to all timing windows,
/// for a fixed `P`. `s_max` keeps every window inside the half period.
pub fn timing_scale_bisection(
    sys: &ClosedLoopSystem,
    p_factor: &DMatrix<f64>,
    opts: VerifyOptions,
    steps: usize,
) -> Result<ScaleSearch> {
    let verifier = Verifier::new(sys, opts)?;
    let norm = verifier.ellipsoid(p_factor).map_err(Error::Precondition)?;
    let data = verifier.norm_data(norm);
    let widest = sys
        .dt_u_lo
        .iter()
        .chain(sys.dt_u_hi.iter())
        .chain(sys.dt_y_lo.iter())
        .chain(sys.dt_y_hi.iter())
        .fold(0.0f64, |a, x| a.max(x.abs()));
    let base = verifier.assemble(&data, &sys.with_timing_scale(0.0));
    if widest == 0.0 || !base.is_stable() {
        let scale = if base.is_stable() { 1.0 } else { 0.0 };
        return Ok(ScaleSearch { scale, certificate: base });
    }
    let s_max = 0.5 * sys.period / widest * (1.0 - 1e-9);
    let top = verifier.assemble(&data, &sys.with_timing_scale(s_max));
    if top.is_stable() {
        return Ok(ScaleSearch { scale: s_max, certificate: top });
    }
    let (mut lo, mut hi) = (0.0, s_max);
    let mut best = base;
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        let cert = verifier.assemble(&data, &sys.with_timing_scale(mid));
        if cert.is_stable() {
            lo = mid;
            best = cert;
        } else {
            hi = mid;
        }
    }
    Ok(ScaleSearch { scale: lo, certificate: best })
}
