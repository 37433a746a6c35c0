//! Constructed closed loops used by tests, benches and examples.
//!
//! The controllers are one-period predictors: the sensor values read around
//! `kT` and the input applied over the current period predict the plant state
//! at `(k+1)T`, and an LQR gain acts on that prediction. With `x_d = u_next`
//! this is `A_d = −KΓ`, `B_d = −KΦ`, `C_d = I` for full-state measurement.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::linalg;
use crate::model::ClosedLoopSystem;

/// Zero-order-hold discretization `(Φ, Γ)` of `(A, B)` with period `T`.
pub fn discretize(a: &DMatrix<f64>, b: &DMatrix<f64>, period: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n, m) = (a.nrows(), b.ncols());
    let mut g = DMatrix::zeros(n + m, n + m);
    g.view_mut((0, 0), (n, n)).copy_from(a);
    g.view_mut((0, n), (n, m)).copy_from(b);
    let e = linalg::expm(&(g * period));
    (e.view((0, 0), (n, n)).into_owned(), e.view((0, n), (n, m)).into_owned())
}

/// Discrete LQR gain by Riccati value iteration.
pub fn dlqr(phi: &DMatrix<f64>, gamma: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>) -> DMatrix<f64> {
    let mut p = q.clone();
    let mut k = DMatrix::zeros(gamma.ncols(), phi.nrows());
    for _ in 0..100_000 {
        let s = r + gamma.transpose() * &p * gamma;
        let kn = s.clone().lu().solve(&(gamma.transpose() * &p * phi)).expect("regular LQR weight");
        let pn = linalg::sym(&(q + phi.transpose() * &p * (phi - gamma * &kn)));
        let done = (&pn - &p).amax() <= 1e-13 * pn.amax();
        p = pn;
        k = kn;
        if done {
            break;
        }
    }
    k
}

/// Predictor controller around an LQR gain; requires `C_p = I`.
pub fn predictor_loop(a_p: DMatrix<f64>, b_p: DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>, period: f64) -> ClosedLoopSystem {
    let n_p = a_p.nrows();
    let m = b_p.ncols();
    let (phi, gamma) = discretize(&a_p, &b_p, period);
    let k = dlqr(&phi, &gamma, q, r);
    ClosedLoopSystem::nominal(
        a_p,
        b_p,
        DMatrix::identity(n_p, n_p),
        -(&k * &gamma),
        -(&k * &phi),
        DMatrix::identity(m, m),
        period,
    )
    .expect("benchmark dimensions are consistent")
}

/// Sets every window to `[−frac·T, frac·T]`.
pub fn with_symmetric_jitter(mut sys: ClosedLoopSystem, frac: f64) -> ClosedLoopSystem {
    let j = frac * sys.period;
    sys.dt_u_lo.fill(-j);
    sys.dt_u_hi.fill(j);
    sys.dt_y_lo.fill(-j);
    sys.dt_y_hi.fill(j);
    sys
}

/// Double integrator (position, velocity), one input, both states measured
/// (`m = 1`, `p = 2`, `n = 6`), windows `±frac·T`.
pub fn double_integrator(period: f64, frac: f64) -> ClosedLoopSystem {
    let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
    let q = DMatrix::from_diagonal(&DVector::from_vec(vec![10.0, 1.0]));
    let r = DMatrix::from_element(1, 1, 0.1);
    with_symmetric_jitter(predictor_loop(a, b, &q, &r, period), frac)
}

/// Two coupled axes, each with position, velocity and a first-order
/// actuator lag; full-state measurement (`n_p = 6`, `m = 2`, `p = 6`,
/// `n = 16`), windows `±frac·T`.
pub fn two_axis(period: f64, frac: f64) -> ClosedLoopSystem {
    let tau = 0.2;
    let mut a = DMatrix::zeros(6, 6);
    let mut b = DMatrix::zeros(6, 2);
    for axis in 0..2 {
        let o = 3 * axis;
        a[(o, o + 1)] = 1.0;
        a[(o + 1, o + 2)] = 1.0;
        a[(o + 1, o + 1)] = -0.1;
        a[(o + 2, o + 2)] = -1.0 / tau;
        b[(o + 2, axis)] = 1.0 / tau;
    }
    // Mild aerodynamic-style coupling between the velocity states.
    a[(1, 4)] = 0.05;
    a[(4, 1)] = -0.05;
    let q = DMatrix::from_diagonal(&DVector::from_vec(vec![10.0, 1.0, 0.1, 10.0, 1.0, 0.1]));
    let r = DMatrix::identity(2, 2) * 0.1;
    with_symmetric_jitter(predictor_loop(a, b, &q, &r, period), frac)
}

/// Random instance with entries uniform in `[−1, 1]` and windows drawn
/// inside `±max_frac·T`. Not necessarily stable.
pub fn random_system<R: Rng>(
    rng: &mut R,
    n_p: usize,
    n_d: usize,
    p: usize,
    m: usize,
    period: f64,
    max_frac: f64,
) -> ClosedLoopSystem {
    let mut mat = |r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0));
    let (a_p, b_p, c_p, a_d, b_d, c_d) = (mat(n_p, n_p), mat(n_p, m), mat(p, n_p), mat(n_d, n_d), mat(n_d, p), mat(m, n_d));
    let mut sys = ClosedLoopSystem::nominal(a_p, b_p, c_p, a_d, b_d, c_d, period).expect("consistent dimensions");
    let j = max_frac * period;
    let mut window = |len: usize| {
        let mut lo = DVector::zeros(len);
        let mut hi = DVector::zeros(len);
        if j > 0.0 {
            for i in 0..len {
                let a: f64 = rng.random_range(-j..j);
                let b: f64 = rng.random_range(-j..j);
                lo[i] = a.min(b);
                hi[i] = a.max(b);
            }
        }
        (lo, hi)
    };
    (sys.dt_u_lo, sys.dt_u_hi) = window(m);
    (sys.dt_y_lo, sys.dt_y_hi) = window(p);
    sys
}
