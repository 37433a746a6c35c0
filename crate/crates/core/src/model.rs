//! Problem instance and its linear impulsive system (LIS) form.
//!
//! The augmented state is `x = [x_p; x_d; y_d; u]`. Between events only the
//! plant moves (`ẋ_p = A_p x_p + B_p u`); sensor reads, actuator writes and the
//! controller update are instantaneous jumps `x ← E x`.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::interval::{exp_enclosure, Interval, IntervalMatrix};
use crate::linalg;

/// Plant `(A_p, B_p, C_p)`, discrete controller `(A_d, B_d, C_d)` with period
/// `T`, and per-channel timing windows `[lo, hi]` (seconds, relative to the
/// nominal instant `kT`).
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedLoopSystem {
    pub a_p: DMatrix<f64>,
    pub b_p: DMatrix<f64>,
    pub c_p: DMatrix<f64>,
    pub a_d: DMatrix<f64>,
    pub b_d: DMatrix<f64>,
    pub c_d: DMatrix<f64>,
    pub period: f64,
    pub dt_u_lo: DVector<f64>,
    pub dt_u_hi: DVector<f64>,
    pub dt_y_lo: DVector<f64>,
    pub dt_y_hi: DVector<f64>,
}

impl ClosedLoopSystem {
    /// System with all timing windows `[0, 0]`.
    pub fn nominal(
        a_p: DMatrix<f64>,
        b_p: DMatrix<f64>,
        c_p: DMatrix<f64>,
        a_d: DMatrix<f64>,
        b_d: DMatrix<f64>,
        c_d: DMatrix<f64>,
        period: f64,
    ) -> Result<Self> {
        let (m, p) = (b_p.ncols(), c_p.nrows());
        let sys = Self {
            a_p,
            b_p,
            c_p,
            a_d,
            b_d,
            c_d,
            period,
            dt_u_lo: DVector::zeros(m),
            dt_u_hi: DVector::zeros(m),
            dt_y_lo: DVector::zeros(p),
            dt_y_hi: DVector::zeros(p),
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn state(&self) -> AugmentedState {
        AugmentedState { n_p: self.a_p.nrows(), n_d: self.a_d.nrows(), p: self.c_p.nrows(), m: self.b_p.ncols() }
    }

    pub fn num_inputs(&self) -> usize {
        self.b_p.ncols()
    }

    pub fn num_outputs(&self) -> usize {
        self.c_p.nrows()
    }

    /// Checks dimensions and the half-period timing constraint.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidInstance(what));
        let n_p = self.a_p.nrows();
        let n_d = self.a_d.nrows();
        let m = self.b_p.ncols();
        let p = self.c_p.nrows();
        if !self.a_p.is_square() {
            return bad(format!("A_p is {}x{}, expected square", n_p, self.a_p.ncols()));
        }
        if !self.a_d.is_square() {
            return bad(format!("A_d is {}x{}, expected square", n_d, self.a_d.ncols()));
        }
        let expect = [
            ("B_p", self.b_p.shape(), (n_p, m)),
            ("C_p", self.c_p.shape(), (p, n_p)),
            ("B_d", self.b_d.shape(), (n_d, p)),
            ("C_d", self.c_d.shape(), (m, n_d)),
        ];
        for (name, got, want) in expect {
            if got != want {
                return bad(format!("{name} is {}x{}, expected {}x{}", got.0, got.1, want.0, want.1));
            }
        }
        let windows = [
            ("dt_u_lo", &self.dt_u_lo, m),
            ("dt_u_hi", &self.dt_u_hi, m),
            ("dt_y_lo", &self.dt_y_lo, p),
            ("dt_y_hi", &self.dt_y_hi, p),
        ];
        for (name, v, len) in windows {
            if v.len() != len {
                return bad(format!("{name} has length {}, expected {len}", v.len()));
            }
        }
        let mats = [&self.a_p, &self.b_p, &self.c_p, &self.a_d, &self.b_d, &self.c_d];
        if mats.iter().any(|m| m.iter().any(|x| !x.is_finite())) {
            return bad("matrix entries must be finite".into());
        }
        if !(self.period.is_finite() && self.period > 0.0) {
            return bad(format!("period T = {} must be positive", self.period));
        }
        let half = self.period / 2.0;
        for (side, lo, hi) in [("u", &self.dt_u_lo, &self.dt_u_hi), ("y", &self.dt_y_lo, &self.dt_y_hi)] {
            for i in 0..lo.len() {
                let (l, h) = (lo[i], hi[i]);
                if !(l.is_finite() && h.is_finite()) || l > h {
                    return bad(format!("timing window dt_{side}[{i}] = [{l}, {h}] is not an interval"));
                }
                if !(-half < l && h < half) {
                    return bad(format!(
                        "timing window dt_{side}[{i}] = [{l}, {h}] violates the half-period constraint -T/2 < lo <= hi < T/2 (T/2 = {half})"
                    ));
                }
            }
        }
        Ok(())
    }

    /// Copy with every timing window scaled by `s` about zero.
    pub fn with_timing_scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.dt_u_lo *= s;
        out.dt_u_hi *= s;
        out.dt_y_lo *= s;
        out.dt_y_hi *= s;
        out
    }

    /// Block-diagonal repetition of the loop `copies` times (plant, controller
    /// and timing windows repeated).
    pub fn repeated(&self, copies: usize) -> Self {
        let rep = |m: &DMatrix<f64>| linalg::block_diag(&vec![m; copies]);
        let repv = |v: &DVector<f64>| linalg::vcat(&vec![v; copies]);
        Self {
            a_p: rep(&self.a_p),
            b_p: rep(&self.b_p),
            c_p: rep(&self.c_p),
            a_d: rep(&self.a_d),
            b_d: rep(&self.b_d),
            c_d: rep(&self.c_d),
            period: self.period,
            dt_u_lo: repv(&self.dt_u_lo),
            dt_u_hi: repv(&self.dt_u_hi),
            dt_y_lo: repv(&self.dt_y_lo),
            dt_y_hi: repv(&self.dt_y_hi),
        }
    }
}

/// Block sizes of `x = [x_p; x_d; y_d; u]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AugmentedState {
    pub n_p: usize,
    pub n_d: usize,
    pub p: usize,
    pub m: usize,
}

impl AugmentedState {
    pub fn n(&self) -> usize {
        self.n_p + self.n_d + self.p + self.m
    }

    pub fn plant(&self) -> Range<usize> {
        0..self.n_p
    }

    pub fn controller(&self) -> Range<usize> {
        self.n_p..self.n_p + self.n_d
    }

    pub fn measurements(&self) -> Range<usize> {
        let s = self.n_p + self.n_d;
        s..s + self.p
    }

    pub fn inputs(&self) -> Range<usize> {
        let s = self.n_p + self.n_d + self.p;
        s..s + self.m
    }
}

/// Identifies one of the `m + p + 1` events of a period.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    /// Actuator write `u_i ← (C_d x_d)_i`.
    Actuation(usize),
    /// Sensor read `y_{d,j} ← (C_p x_p)_j`.
    Measurement(usize),
    /// Controller update `x_d ← A_d x_d + B_d y_d` at `T/2`.
    Control,
}

/// Flow matrix and event matrices of the impulsive system.
#[derive(Clone, Debug)]
pub struct LisSpec {
    pub state: AugmentedState,
    pub period: f64,
    pub a_cont: DMatrix<f64>,
    pub e_u: Vec<DMatrix<f64>>,
    pub e_y: Vec<DMatrix<f64>>,
    pub e_ctrl: DMatrix<f64>,
    a_p: DMatrix<f64>,
    b_p: DMatrix<f64>,
}

/// Builds `A_cont` and the event matrices of `sys`.
pub fn build_lis(sys: &ClosedLoopSystem) -> Result<LisSpec> {
    sys.validate()?;
    let st = sys.state();
    let n = st.n();
    let (xp, xd, yd, uu) = (st.plant().start, st.controller().start, st.measurements().start, st.inputs().start);

    let mut a_cont = DMatrix::zeros(n, n);
    a_cont.view_mut((xp, xp), (st.n_p, st.n_p)).copy_from(&sys.a_p);
    a_cont.view_mut((xp, uu), (st.n_p, st.m)).copy_from(&sys.b_p);

    let e_u = (0..st.m)
        .map(|i| {
            let mut e = DMatrix::identity(n, n);
            for k in 0..st.n_d {
                e[(uu + i, xd + k)] = sys.c_d[(i, k)];
            }
            e[(uu + i, uu + i)] = 0.0;
            e
        })
        .collect();
    let e_y = (0..st.p)
        .map(|j| {
            let mut e = DMatrix::identity(n, n);
            for k in 0..st.n_p {
                e[(yd + j, xp + k)] = sys.c_p[(j, k)];
            }
            e[(yd + j, yd + j)] = 0.0;
            e
        })
        .collect();
    let mut e_ctrl = DMatrix::identity(n, n);
    e_ctrl.view_mut((xd, xd), (st.n_d, st.n_d)).copy_from(&sys.a_d);
    e_ctrl.view_mut((xd, yd), (st.n_d, st.p)).copy_from(&sys.b_d);

    Ok(LisSpec { state: st, period: sys.period, a_cont, e_u, e_y, e_ctrl, a_p: sys.a_p.clone(), b_p: sys.b_p.clone() })
}

impl LisSpec {
    pub fn n(&self) -> usize {
        self.state.n()
    }

    pub fn event(&self, kind: EventKind) -> &DMatrix<f64> {
        match kind {
            EventKind::Actuation(i) => &self.e_u[i],
            EventKind::Measurement(j) => &self.e_y[j],
            EventKind::Control => &self.e_ctrl,
        }
    }

    /// All event kinds in canonical order (actuators, sensors, controller).
    pub fn event_kinds(&self) -> impl Iterator<Item = EventKind> {
        (0..self.state.m)
            .map(EventKind::Actuation)
            .chain((0..self.state.p).map(EventKind::Measurement))
            .chain(std::iter::once(EventKind::Control))
    }

    /// Events of one period as offsets from `kT`, stably sorted by time;
    /// the controller update sits at `T/2`.
    pub fn events_in_period(&self, dt_u: &[f64], dt_y: &[f64]) -> Vec<(f64, EventKind)> {
        let mut ev: Vec<(f64, EventKind)> = dt_u
            .iter()
            .enumerate()
            .map(|(i, &t)| (t, EventKind::Actuation(i)))
            .chain(dt_y.iter().enumerate().map(|(j, &t)| (t, EventKind::Measurement(j))))
            .collect();
        ev.sort_by(|a, b| a.0.total_cmp(&b.0));
        ev.push((self.period / 2.0, EventKind::Control));
        ev
    }

    /// `[[A_p, B_p], [0, 0]]`, whose exponential carries all of `e^{A_cont δ}`.
    pub fn augmented_generator(&self) -> DMatrix<f64> {
        let (n_p, m) = (self.state.n_p, self.state.m);
        let mut g = DMatrix::zeros(n_p + m, n_p + m);
        g.view_mut((0, 0), (n_p, n_p)).copy_from(&self.a_p);
        g.view_mut((0, n_p), (n_p, m)).copy_from(&self.b_p);
        g
    }

    /// `e^{A_cont δ}` for any real `δ`.
    pub fn flow(&self, delta: f64) -> DMatrix<f64> {
        let aug = linalg::expm(&(self.augmented_generator() * delta));
        self.embed(&aug)
    }

    /// Enclosure of `e^{A_cont δ}` for every `δ` in `delta`; only the
    /// `(n_p + m)`-sized augmented block is exponentiated.
    pub fn flow_enclosure(&self, delta: Interval) -> IntervalMatrix {
        let g = IntervalMatrix::from_point(&self.augmented_generator()).scale(delta);
        let aug = exp_enclosure(&g);
        let st = self.state;
        let n = st.n();
        let (n_p, m, uu) = (st.n_p, st.m, st.inputs().start);
        let mut out = IntervalMatrix::identity(n);
        out.set_block(0, 0, &aug.block(0, 0, n_p, n_p));
        out.set_block(0, uu, &aug.block(0, n_p, n_p, m));
        out
    }

    fn embed(&self, aug: &DMatrix<f64>) -> DMatrix<f64> {
        let st = self.state;
        let n = st.n();
        let (n_p, m, uu) = (st.n_p, st.m, st.inputs().start);
        let mut out = DMatrix::identity(n, n);
        out.view_mut((0, 0), (n_p, n_p)).copy_from(&aug.view((0, 0), (n_p, n_p)));
        out.view_mut((0, uu), (n_p, m)).copy_from(&aug.view((0, n_p), (n_p, m)));
        out
    }
}

/// `e^{A_cont δ}` for the LIS of `sys`.
pub fn structured_exp(sys: &ClosedLoopSystem, delta: f64) -> Result<DMatrix<f64>> {
    Ok(build_lis(sys)?.flow(delta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_system(a: f64, b: f64) -> ClosedLoopSystem {
        let one = |x: f64| DMatrix::from_element(1, 1, x);
        ClosedLoopSystem::nominal(one(a), one(b), one(1.0), one(1.0), one(1.0), one(1.0), 1.0).unwrap()
    }

    #[test]
    fn actuation_event_row() {
        let lis = build_lis(&scalar_system(1.0, 1.0)).unwrap();
        let d = &lis.e_u[0] - DMatrix::identity(4, 4);
        let expected = DMatrix::from_row_slice(4, 4, &[0., 0., 0., 0., 0., 0., 0., 0., 0., 0., 0., 0., 0., 1., 0., -1.]);
        assert_eq!(d, expected);
    }

    #[test]
    fn zero_plant_has_zero_flow_generator() {
        let lis = build_lis(&scalar_system(0.0, 0.0)).unwrap();
        assert_eq!(lis.a_cont, DMatrix::zeros(4, 4));
    }

    #[test]
    fn flow_at_zero_is_identity() {
        let lis = build_lis(&scalar_system(-0.7, 2.0)).unwrap();
        assert!((lis.flow(0.0) - DMatrix::identity(4, 4)).amax() < 1e-15);
    }

    #[test]
    fn integrator_flow() {
        let lis = build_lis(&scalar_system(0.0, 3.0)).unwrap();
        let f = lis.flow(0.25);
        assert!((f[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((f[(0, 3)] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn scalar_input_integral_matches_closed_form() {
        let (a, b) = (-1.3, 0.8);
        let lis = build_lis(&scalar_system(a, b)).unwrap();
        for &d in &[-0.4, 0.01, 0.3, 1.7] {
            let f = lis.flow(d);
            let expected = ((a * d).exp() - 1.0) / a * b;
            assert!((f[(0, 3)] - expected).abs() < 1e-13, "delta {d}");
            assert!((f[(0, 0)] - (a * d).exp()).abs() < 1e-13);
        }
    }

    #[test]
    fn flow_enclosure_contains_flow() {
        let lis = build_lis(&scalar_system(-1.3, 0.8)).unwrap();
        let e = lis.flow_enclosure(Interval::point(0.5));
        assert!(e.contains(&lis.flow(0.5)));
        assert!(e.max_width() < 1e-13);
    }

    #[test]
    fn dimension_errors() {
        let mut sys = scalar_system(1.0, 1.0);
        sys.c_d = DMatrix::zeros(2, 1);
        assert!(matches!(build_lis(&sys), Err(Error::InvalidInstance(_))));
    }

    #[test]
    fn half_period_constraint() {
        let mut sys = scalar_system(1.0, 1.0);
        sys.dt_u_hi[0] = 0.6;
        let err = sys.validate().unwrap_err().to_string();
        assert!(err.contains("half-period"), "{err}");
    }

    #[test]
    fn repeated_doubles_dimensions() {
        let sys = scalar_system(1.0, 1.0).repeated(2);
        assert_eq!(sys.state().n(), 8);
        sys.validate().unwrap();
    }
}
