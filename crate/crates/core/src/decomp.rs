//! Splits the one-period transition matrix into a nominal part and deviation
//! terms that each depend on a single timing quantity:
//!
//! ```text
//! A(Δt) = A_nom + Σ_i ΔA_u,i(Δt_u,i) + Σ_j ΔA_y,j(Δt_y,j) + Σ_ij ΔA_uy,ij(Δt_y,j − Δt_u,i)
//! ```
//!
//! Every term has the form `M₁ (e^{s·A_cont·τ} − I) M₂` with constant `M₁`,
//! `M₂` and a sign `s`.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::Result;
use crate::interval::{Interval, IntervalMatrix, IntervalVector};
use crate::model::{build_lis, ClosedLoopSystem, LisSpec};
use crate::pnorm::{FactorForm, FactorMatrix};

/// Deviation term label; indices are zero-based (actuator `i`, sensor `j`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DeviationKind {
    U(usize),
    Y(usize),
    UY(usize, usize),
}

impl fmt::Display for DeviationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeviationKind::U(i) => write!(f, "u[{i}]"),
            DeviationKind::Y(j) => write!(f, "y[{j}]"),
            DeviationKind::UY(i, j) => write!(f, "uy[{i},{j}]"),
        }
    }
}

impl DeviationKind {
    /// Scalar argument of this term for a given timing.
    pub fn argument(self, dt_u: &[f64], dt_y: &[f64]) -> f64 {
        match self {
            DeviationKind::U(i) => dt_u[i],
            DeviationKind::Y(j) => dt_y[j],
            DeviationKind::UY(i, j) => dt_y[j] - dt_u[i],
        }
    }

    /// Largest `|τ|` the term can see under the timing windows of `sys`.
    /// Actuator-to-sensor terms vanish for `τ ≤ 0`, so only the positive part
    /// of `hi_y − lo_u` counts.
    pub fn delta_max(self, sys: &ClosedLoopSystem) -> f64 {
        match self {
            DeviationKind::U(i) => sys.dt_u_lo[i].abs().max(sys.dt_u_hi[i].abs()),
            DeviationKind::Y(j) => sys.dt_y_lo[j].abs().max(sys.dt_y_hi[j].abs()),
            DeviationKind::UY(i, j) => {
                // Rounded up so the window is never underestimated.
                let d = Interval::point(sys.dt_y_hi[j]) - Interval::point(sys.dt_u_lo[i]);
                d.hi().max(0.0)
            }
        }
    }

    /// Whether the term is only defined on `τ > 0`.
    pub fn one_sided(self) -> bool {
        matches!(self, DeviationKind::UY(..))
    }
}

/// All kinds of a system with `m` inputs and `p` outputs, in canonical order.
pub fn deviation_kinds(m: usize, p: usize) -> Vec<DeviationKind> {
    let mut out: Vec<DeviationKind> = (0..m).map(DeviationKind::U).collect();
    out.extend((0..p).map(DeviationKind::Y));
    for i in 0..m {
        for j in 0..p {
            out.push(DeviationKind::UY(i, j));
        }
    }
    out
}

/// Constant factors of one deviation term.
#[derive(Clone, Debug)]
pub struct Generator {
    pub kind: DeviationKind,
    pub m1: DMatrix<f64>,
    pub m2: DMatrix<f64>,
    pub sign: f64,
}

/// Floating-point factor triple `(M₁, A, M₂, sign)` of one term.
#[derive(Clone, Debug)]
pub struct FloatFactorForm {
    pub m1: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub m2: DMatrix<f64>,
    pub sign: f64,
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    pub lis: LisSpec,
    pub a_nominal: DMatrix<f64>,
    /// `e^{A_cont T/2}`.
    pub half_flow: DMatrix<f64>,
    pub generators: Vec<Generator>,
}

pub fn decompose(sys: &ClosedLoopSystem) -> Result<Decomposition> {
    let lis = build_lis(sys)?;
    let n = lis.n();
    let id = DMatrix::<f64>::identity(n, n);
    let half = lis.flow(lis.period / 2.0);

    let mut jumps = id.clone();
    for e in lis.e_u.iter().chain(&lis.e_y) {
        jumps += e - &id;
    }
    let ctrl_half = &lis.e_ctrl * &half;
    let a_nominal = &ctrl_half * jumps * &half;

    let st = lis.state;
    let generators = deviation_kinds(st.m, st.p)
        .into_iter()
        .map(|kind| {
            let (m1, m2, sign) = match kind {
                DeviationKind::U(i) => (ctrl_half.clone(), &lis.e_u[i] - &id, -1.0),
                DeviationKind::Y(j) => (&lis.e_ctrl * (&lis.e_y[j] - &id) * &half, id.clone(), 1.0),
                DeviationKind::UY(i, j) => (&lis.e_ctrl * (&lis.e_y[j] - &id), &lis.e_u[i] - &id, 1.0),
            };
            Generator { kind, m1, m2, sign }
        })
        .collect();
    Ok(Decomposition { lis, a_nominal, half_flow: half, generators })
}

impl Decomposition {
    pub fn kinds(&self) -> impl Iterator<Item = DeviationKind> + '_ {
        self.generators.iter().map(|g| g.kind)
    }

    pub fn generator(&self, kind: DeviationKind) -> &Generator {
        self.generators.iter().find(|g| g.kind == kind).expect("deviation kind out of range")
    }

    /// `ΔA_kind(τ)`; the actuator-to-sensor term is exactly zero for `τ ≤ 0`.
    pub fn eval(&self, kind: DeviationKind, tau: f64) -> DMatrix<f64> {
        let g = self.generator(kind);
        let n = self.lis.n();
        if tau == 0.0 || (kind.one_sided() && tau <= 0.0) {
            return DMatrix::zeros(n, n);
        }
        let flow = self.lis.flow(g.sign * tau) - DMatrix::identity(n, n);
        &g.m1 * flow * &g.m2
    }

    /// `A_nom` plus all deviation terms at the given timing.
    pub fn sum(&self, dt_u: &[f64], dt_y: &[f64]) -> DMatrix<f64> {
        let mut a = self.a_nominal.clone();
        for g in &self.generators {
            a += self.eval(g.kind, g.kind.argument(dt_u, dt_y));
        }
        a
    }

    pub fn factor_form(&self, kind: DeviationKind) -> FloatFactorForm {
        let g = self.generator(kind);
        FloatFactorForm { m1: g.m1.clone(), a: self.lis.a_cont.clone(), m2: g.m2.clone(), sign: g.sign }
    }
}

/// Interval enclosures of the nominal matrix and of all factor forms, with
/// the rank-one structure of the event matrices kept explicit.
#[derive(Clone, Debug)]
pub struct VerifiedFactors {
    pub a_cont: IntervalMatrix,
    pub nominal: IntervalMatrix,
    pub forms: Vec<(DeviationKind, FactorForm)>,
}

/// Builds [`VerifiedFactors`]. `e^{A_cont T/2}` is enclosed once and shared.
///
/// `E_u,i − I = e_{u_i} w_iᵀ` and `E_y,j − I = e_{y_j} z_jᵀ` are rank one, and
/// `E_ctrl e_{y_j}` is a fixed column, so most factors are outer products.
pub fn verified_factors(lis: &LisSpec) -> VerifiedFactors {
    let st = lis.state;
    let n = st.n();
    let half = lis.flow_enclosure(Interval::point(lis.period / 2.0));
    let e_ctrl = IntervalMatrix::from_point(&lis.e_ctrl);
    let ctrl_half = &e_ctrl * &half;

    let mut jumps = IntervalMatrix::identity(n);
    let (yd, uu) = (st.measurements().start, st.inputs().start);
    let w: Vec<IntervalVector> = (0..st.m)
        .map(|i| IntervalVector((0..n).map(|c| Interval::point(lis.e_u[i][(uu + i, c)] - f64::from(c == uu + i))).collect()))
        .collect();
    let z: Vec<IntervalVector> = (0..st.p)
        .map(|j| IntervalVector((0..n).map(|c| Interval::point(lis.e_y[j][(yd + j, c)] - f64::from(c == yd + j))).collect()))
        .collect();
    for (i, wi) in w.iter().enumerate() {
        for c in 0..n {
            jumps[(uu + i, c)] += wi.0[c];
        }
    }
    for (j, zj) in z.iter().enumerate() {
        for c in 0..n {
            jumps[(yd + j, c)] += zj.0[c];
        }
    }
    let nominal = &(&ctrl_half * &jumps) * &half;

    let ctrl_col = |j: usize| IntervalVector((0..n).map(|r| Interval::point(lis.e_ctrl[(r, yd + j)])).collect());
    let a_cont = IntervalMatrix::from_point(&lis.a_cont);
    let forms = crate::decomp::deviation_kinds(st.m, st.p)
        .into_iter()
        .map(|kind| {
            let form = match kind {
                DeviationKind::U(i) => FactorForm {
                    m1: FactorMatrix::Dense(ctrl_half.clone()),
                    a: a_cont.clone(),
                    m2: FactorMatrix::Outer { col: IntervalVector::unit(n, uu + i), row: w[i].clone() },
                    sign: -1.0,
                },
                DeviationKind::Y(j) => FactorForm {
                    m1: FactorMatrix::Outer { col: ctrl_col(j), row: half.tr_mul_vec(&z[j]) },
                    a: a_cont.clone(),
                    m2: FactorMatrix::Identity(n),
                    sign: 1.0,
                },
                DeviationKind::UY(i, j) => FactorForm {
                    m1: FactorMatrix::Outer { col: ctrl_col(j), row: z[j].clone() },
                    a: a_cont.clone(),
                    m2: FactorMatrix::Outer { col: IntervalVector::unit(n, uu + i), row: w[i].clone() },
                    sign: 1.0,
                },
            };
            (kind, form)
        })
        .collect();
    VerifiedFactors { a_cont, nominal, forms }
}
