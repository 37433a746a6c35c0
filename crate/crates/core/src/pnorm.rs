//! Ellipsoid norms `‖A‖_P = ‖Kᵀ A K⁻ᵀ‖_σ` (with `P = K Kᵀ`) and the bound
//! `h(δ) ≥ ‖M₁(e^{sAτ} − I)M₂‖_P` for all `|τ| ≤ δ`.
//!
//! `h(δ) = Σ_{i=1..r} ‖M₁AⁱM₂‖_P δⁱ/i! + ‖M₁‖_P‖M₂‖_P (e^{‖A‖_P δ} − Σ_{i=0..r} (‖A‖_P δ)ⁱ/i!)`,
//! which is the series bound rearranged so that the leading terms use the
//! exact power norms and only the tail is bounded by submultiplicativity.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::decomp::{DeviationKind, VerifiedFactors};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::interval::{spectral_norm_enclosure, triangular_inverse_enclosure, Interval, IntervalMatrix, IntervalVector};

/// Default truncation order of the series part of `h`.
pub const DEFAULT_ORDER: usize = 10;

/// `P`-ellipsoid norm given by an (interval) lower Cholesky factor `K`.
#[derive(Clone, Debug)]
pub struct EllipsoidNorm {
    k: IntervalMatrix,
    k_t: IntervalMatrix,
    k_inv: IntervalMatrix,
    k_inv_t: IntervalMatrix,
}

impl EllipsoidNorm {
    /// The spectral norm (`P = I`).
    pub fn identity(n: usize) -> Self {
        let i = IntervalMatrix::identity(n);
        Self { k: i.clone(), k_t: i.clone(), k_inv: i.clone(), k_inv_t: i }
    }

    /// From a floating-point lower-triangular factor with positive diagonal.
    pub fn from_factor(k: &DMatrix<f64>) -> Result<Self> {
        Self::from_interval_factor(IntervalMatrix::from_point(k))
    }

    /// From an interval lower-triangular factor whose diagonal is verified
    /// positive.
    pub fn from_interval_factor(k: IntervalMatrix) -> Result<Self> {
        if !k.is_square() {
            return Err(Error::Dimension(format!("factor is {}x{}", k.nrows(), k.ncols())));
        }
        for i in 0..k.nrows() {
            if !(k[(i, i)].lo() > 0.0) {
                return Err(Error::NotPositiveDefinite { pivot: i });
            }
        }
        let k_inv = triangular_inverse_enclosure(&k)?;
        Ok(Self { k_t: k.transpose(), k_inv_t: k_inv.transpose(), k_inv, k })
    }

    pub fn dim(&self) -> usize {
        self.k.nrows()
    }

    pub fn factor(&self) -> &IntervalMatrix {
        &self.k
    }

    pub fn inverse_transpose(&self) -> &IntervalMatrix {
        &self.k_inv_t
    }

    /// `Kᵀ A K⁻ᵀ`.
    pub fn transform(&self, a: &IntervalMatrix) -> IntervalMatrix {
        &(&self.k_t * a) * &self.k_inv_t
    }

    /// Enclosure of `‖c rᵀ‖_P = |Kᵀc|·|K⁻¹r|`.
    pub fn outer_norm(&self, col: &IntervalVector, row: &IntervalVector) -> Interval {
        self.k_t.mul_vec(col).norm() * self.k_inv.mul_vec(row).norm()
    }

    pub fn factor_norm(&self, f: &FactorMatrix) -> Interval {
        match f {
            FactorMatrix::Identity(_) => Interval::ONE,
            FactorMatrix::Outer { col, row } => self.outer_norm(col, row),
            FactorMatrix::Dense(m) => pnorm(self, m),
        }
    }

    /// Enclosure of `‖K‖_σ‖K⁻¹‖_σ = √(λ_max(P)/λ_min(P))`, the constant relating
    /// Euclidean and `P`-norm decay.
    pub fn condition_bound(&self) -> Interval {
        spectral_norm_enclosure(&self.k) * spectral_norm_enclosure(&self.k_inv)
    }
}

/// Enclosure of `‖A‖_P`.
pub fn pnorm(norm: &EllipsoidNorm, a: &IntervalMatrix) -> Interval {
    assert_eq!(a.shape(), (norm.dim(), norm.dim()), "pnorm dimension mismatch");
    spectral_norm_enclosure(&norm.transform(a))
}

/// A constant factor of a deviation term, with cheap representations for
/// the identity and for rank-one products.
#[derive(Clone, Debug)]
pub enum FactorMatrix {
    Identity(usize),
    /// `col · rowᵀ`.
    Outer { col: IntervalVector, row: IntervalVector },
    Dense(IntervalMatrix),
}

impl FactorMatrix {
    pub fn to_dense(&self) -> IntervalMatrix {
        match self {
            FactorMatrix::Identity(n) => IntervalMatrix::identity(*n),
            FactorMatrix::Outer { col, row } => IntervalMatrix::from_fn(col.len(), row.len(), |i, j| col.0[i] * row.0[j]),
            FactorMatrix::Dense(m) => m.clone(),
        }
    }

    /// `self · v`.
    fn apply(&self, v: &IntervalVector) -> IntervalVector {
        match self {
            FactorMatrix::Identity(_) => v.clone(),
            FactorMatrix::Outer { col, row } => col.scale(row.dot(v)),
            FactorMatrix::Dense(m) => m.mul_vec(v),
        }
    }

    /// `selfᵀ · v`.
    fn apply_transpose(&self, v: &IntervalVector) -> IntervalVector {
        match self {
            FactorMatrix::Identity(_) => v.clone(),
            FactorMatrix::Outer { col, row } => row.scale(col.dot(v)),
            FactorMatrix::Dense(m) => m.tr_mul_vec(v),
        }
    }
}

/// `M₁ (e^{sign·A·τ} − I) M₂`.
#[derive(Clone, Debug)]
pub struct FactorForm {
    pub m1: FactorMatrix,
    pub a: IntervalMatrix,
    pub m2: FactorMatrix,
    pub sign: f64,
}

impl FactorForm {
    fn signed_a(&self) -> IntervalMatrix {
        if self.sign < 0.0 {
            -&self.a
        } else {
            self.a.clone()
        }
    }

    /// `M₁ (sA)^i M₂` for `i = 1..=r`, exploiting rank-one factors.
    pub fn power_products(&self, r: usize) -> Vec<FactorMatrix> {
        let a = self.signed_a();
        let mut out = Vec::with_capacity(r);
        match (&self.m1, &self.m2) {
            (FactorMatrix::Outer { col, row }, _) => {
                let mut v = row.clone();
                for _ in 0..r {
                    v = a.tr_mul_vec(&v);
                    out.push(FactorMatrix::Outer { col: col.clone(), row: self.m2.apply_transpose(&v) });
                }
            }
            (_, FactorMatrix::Outer { col, row }) => {
                let mut v = col.clone();
                for _ in 0..r {
                    v = a.mul_vec(&v);
                    out.push(FactorMatrix::Outer { col: self.m1.apply(&v), row: row.clone() });
                }
            }
            _ => {
                let mut p = self.m2.to_dense();
                let m1 = self.m1.to_dense();
                for _ in 0..r {
                    p = &a * &p;
                    out.push(FactorMatrix::Dense(&m1 * &p));
                }
            }
        }
        out
    }
}

/// Norm data of one deviation term, from which `h(δ)` follows for any `δ`.
#[derive(Clone, Debug)]
pub struct GeneratorNorms {
    pub kind: DeviationKind,
    pub n_m1: Interval,
    pub n_m2: Interval,
    pub n_a: Interval,
    /// `‖M₁(sA)ⁱM₂‖_P` for `i = 1..=r`.
    pub powers: Vec<Interval>,
}

impl GeneratorNorms {
    pub fn compute(norm: &EllipsoidNorm, kind: DeviationKind, form: &FactorForm, n_a: Interval, r: usize) -> Self {
        Self::compute_with(norm, kind, form, n_a, r, |f| norm.factor_norm(f))
    }

    fn compute_with(
        norm: &EllipsoidNorm,
        kind: DeviationKind,
        form: &FactorForm,
        n_a: Interval,
        r: usize,
        factor_norm: impl Fn(&FactorMatrix) -> Interval,
    ) -> Self {
        assert!(r >= 1, "series order must be at least 1");
        let powers = form.power_products(r).iter().map(|f| norm.factor_norm(f)).collect();
        Self { kind, n_m1: factor_norm(&form.m1), n_m2: factor_norm(&form.m2), n_a, powers }
    }

    pub fn order(&self) -> usize {
        self.powers.len()
    }

    /// Enclosure of `h(δ)`; exactly zero at `δ = 0`.
    pub fn h(&self, delta: f64) -> Interval {
        assert!(delta >= 0.0, "negative window");
        if delta == 0.0 {
            return Interval::ZERO;
        }
        let r = self.order();
        let d = Interval::point(delta);
        let mut term = Interval::ONE;
        let mut sum = Interval::ZERO;
        for (i, &p) in self.powers.iter().enumerate() {
            term = term * d / Interval::point((i + 1) as f64);
            sum += p * term;
        }
        let x = Interval::point(self.n_a.hi()) * d;
        sum + self.n_m1 * self.n_m2 * exp_tail(x, r)
    }

    /// `γ_i = (‖M₁AⁱM₂‖ − ‖M₁‖‖A‖ⁱ‖M₂‖)/i!`.
    pub fn gamma(&self) -> Vec<Interval> {
        let mut fact = Interval::ONE;
        let mut a_pow = Interval::ONE;
        self.powers
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                fact = fact * Interval::point((i + 1) as f64);
                a_pow = a_pow * self.n_a;
                (p - self.n_m1 * a_pow * self.n_m2) / fact
            })
            .collect()
    }

    pub fn bound(&self, delta_max: f64) -> DeviationBound {
        DeviationBound {
            kind: self.kind,
            delta_max,
            gamma: self.gamma(),
            n_m1: self.n_m1,
            n_m2: self.n_m2,
            n_a: self.n_a,
            value: self.h(delta_max),
        }
    }
}

/// Enclosure of `e^x − Σ_{i=0..r} xⁱ/i!` for `x ≥ 0`, from above.
fn exp_tail(x: Interval, r: usize) -> Interval {
    let xr = Interval::point(x.hi());
    if xr.hi() == 0.0 {
        return Interval::ZERO;
    }
    if xr.hi() < (r + 2) as f64 / 2.0 {
        let mut fact = Interval::ONE;
        for k in 1..=(r + 1) {
            fact = fact * Interval::point(k as f64);
        }
        let geom = Interval::ONE - xr / Interval::point((r + 2) as f64);
        let t = xr.powi(r as u32 + 1) / fact / geom;
        Interval::new(0.0, t.hi())
    } else {
        let mut partial = Interval::ZERO;
        let mut term = Interval::ONE;
        for k in 0..=r {
            if k > 0 {
                term = term * xr / Interval::point(k as f64);
            }
            partial += term;
        }
        let t = xr.exp() - partial;
        Interval::new(0.0, t.hi().max(0.0))
    }
}

/// Verified bound of one deviation term over `|τ| ≤ delta_max`.
#[derive(Clone, Debug)]
pub struct DeviationBound {
    pub kind: DeviationKind,
    pub delta_max: f64,
    pub gamma: Vec<Interval>,
    pub n_m1: Interval,
    pub n_m2: Interval,
    pub n_a: Interval,
    /// Enclosure of `h(delta_max)`; its upper endpoint is the bound.
    pub value: Interval,
}

/// Bound of `‖M₁(e^{sAτ} − I)M₂‖_P` over `|τ| ≤ delta_max`.
///
/// `‖M₁(−A)ⁱM₂‖ = ‖M₁AⁱM₂‖`, so the sign changes no norm and the bound is
/// valid on both sides of zero.
pub fn deviation_bound(
    norm: &EllipsoidNorm,
    kind: DeviationKind,
    form: &FactorForm,
    delta_max: f64,
    r: usize,
) -> DeviationBound {
    let n_a = pnorm(norm, &form.a);
    GeneratorNorms::compute(norm, kind, form, n_a, r).bound(delta_max)
}

type Key = Vec<(u64, u64)>;

fn key<'a>(entries: impl IntoIterator<Item = &'a Interval>) -> Key {
    entries.into_iter().map(|x| (x.lo().to_bits(), x.hi().to_bits())).collect()
}

/// Quantities that several terms have in common, each computed once.
///
/// When both factors are rank one, `M₁(sA)ⁱM₂ = c₁ (r₁ᵀ(sA)ⁱc₂) r₂ᵀ`, so its
/// norm is `|r₁ᵀ(sA)ⁱc₂|·|Kᵀc₁|·|K⁻¹r₂|` and terms sharing `c₂` share the
/// powers.
struct SharedNorms {
    cols: HashMap<Key, Interval>,
    rows: HashMap<Key, Interval>,
    dense: HashMap<Key, Interval>,
    powers: HashMap<(Key, u64), Vec<IntervalVector>>,
}

impl SharedNorms {
    fn new(norm: &EllipsoidNorm, factors: &VerifiedFactors, r: usize, exec: Exec) -> Self {
        let mut cols = HashMap::new();
        let mut rows = HashMap::new();
        let mut dense = HashMap::new();
        let mut powers = HashMap::new();
        for (_, form) in &factors.forms {
            for f in [&form.m1, &form.m2] {
                match f {
                    FactorMatrix::Outer { col, row } => {
                        cols.entry(key(&col.0)).or_insert(col);
                        rows.entry(key(&row.0)).or_insert(row);
                    }
                    FactorMatrix::Dense(m) => {
                        dense.entry(key(m.iter())).or_insert(m);
                    }
                    FactorMatrix::Identity(_) => {}
                }
            }
            if let (FactorMatrix::Outer { .. }, FactorMatrix::Outer { col, .. }) = (&form.m1, &form.m2) {
                powers.entry((key(&col.0), form.sign.to_bits())).or_insert(form);
            }
        }
        fn run<K: Clone + Eq + std::hash::Hash + Send + Sync, V: Sync, R: Send>(
            exec: Exec,
            items: HashMap<K, V>,
            f: impl Fn(&V) -> R + Send + Sync,
        ) -> HashMap<K, R> {
            let items: Vec<(K, V)> = items.into_iter().collect();
            let out = exec.map(&items, |(_, v)| f(v));
            items.into_iter().map(|(k, _)| k).zip(out).collect()
        }
        Self {
            cols: run(exec, cols, |c| norm.k_t.mul_vec(c).norm()),
            rows: run(exec, rows, |w| norm.k_inv.mul_vec(w).norm()),
            dense: run(exec, dense, |m| pnorm(norm, m)),
            powers: run(exec, powers, |form| {
                let FactorMatrix::Outer { col, .. } = &form.m2 else { unreachable!() };
                let a = form.signed_a();
                let mut v = col.clone();
                (0..r)
                    .map(|_| {
                        v = a.mul_vec(&v);
                        v.clone()
                    })
                    .collect()
            }),
        }
    }

    fn factor_norm(&self, f: &FactorMatrix) -> Interval {
        match f {
            FactorMatrix::Identity(_) => Interval::ONE,
            FactorMatrix::Outer { col, row } => self.cols[&key(&col.0)] * self.rows[&key(&row.0)],
            FactorMatrix::Dense(m) => self.dense[&key(m.iter())],
        }
    }

    fn generator(&self, norm: &EllipsoidNorm, kind: DeviationKind, form: &FactorForm, n_a: Interval, r: usize) -> GeneratorNorms {
        let (FactorMatrix::Outer { col: c1, row: r1 }, FactorMatrix::Outer { col: c2, row: r2 }) = (&form.m1, &form.m2)
        else {
            return GeneratorNorms::compute_with(norm, kind, form, n_a, r, |f| self.factor_norm(f));
        };
        let outer = self.cols[&key(&c1.0)] * self.rows[&key(&r2.0)];
        let powers = self.powers[&(key(&c2.0), form.sign.to_bits())]
            .iter()
            .map(|v| r1.dot(v).abs() * outer)
            .collect();
        GeneratorNorms {
            kind,
            n_m1: self.factor_norm(&form.m1),
            n_m2: self.factor_norm(&form.m2),
            n_a,
            powers,
        }
    }
}

/// [`GeneratorNorms`] of every term, sharing `‖A_cont‖_P` and the factor
/// norms and powers that terms have in common.
pub fn generator_norms(norm: &EllipsoidNorm, factors: &VerifiedFactors, r: usize, exec: Exec) -> Vec<GeneratorNorms> {
    assert!(r >= 1, "series order must be at least 1");
    let n_a = pnorm(norm, &factors.a_cont);
    let shared = SharedNorms::new(norm, factors, r, exec);
    exec.map(&factors.forms, |(kind, form)| shared.generator(norm, *kind, form, n_a, r))
}
