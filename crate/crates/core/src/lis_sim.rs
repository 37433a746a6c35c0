//! Trajectory evaluation of the impulsive system. Floating point only; this
//! is the brute-force reference for the decomposition and the certificates.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{ClosedLoopSystem, EventKind, LisSpec};

/// Events at absolute times, applied in order after the flow from `start`.
#[derive(Clone, Debug, PartialEq)]
pub struct EventSchedule {
    pub start: f64,
    pub events: Vec<(f64, EventKind)>,
    pub x0: DVector<f64>,
}

impl EventSchedule {
    pub fn new(start: f64, events: Vec<(f64, EventKind)>, x0: DVector<f64>) -> Result<Self> {
        let mut prev = start;
        for (i, &(t, _)) in events.iter().enumerate() {
            if !(t >= prev) {
                return Err(Error::InvalidSchedule(format!("event {i} at {t} precedes {prev}")));
            }
            prev = t;
        }
        Ok(Self { start, events, x0 })
    }

    /// Schedule starting right after the controller update at `T/2`, with one
    /// `(dt_u, dt_y)` pair per following period.
    pub fn periodic(lis: &LisSpec, timings: &[(Vec<f64>, Vec<f64>)], x0: DVector<f64>) -> Result<Self> {
        let t = lis.period;
        let mut events = Vec::new();
        for (k, (du, dy)) in timings.iter().enumerate() {
            check_timing(lis, du, dy)?;
            let base = (k + 1) as f64 * t;
            events.extend(lis.events_in_period(du, dy).into_iter().map(|(off, e)| (base + off, e)));
        }
        Self::new(t / 2.0, events, x0)
    }
}

/// State at time `t` (post-event values at event instants).
pub fn simulate(lis: &LisSpec, sched: &EventSchedule, t: f64) -> Result<DVector<f64>> {
    if sched.x0.len() != lis.n() {
        return Err(Error::Dimension(format!("x0 has length {}, expected {}", sched.x0.len(), lis.n())));
    }
    if !(t >= sched.start) {
        return Err(Error::InvalidSchedule(format!("t = {t} precedes the schedule start {}", sched.start)));
    }
    let mut prev = sched.start;
    for (i, &(tau, _)) in sched.events.iter().enumerate() {
        if !(tau >= prev) {
            return Err(Error::InvalidSchedule(format!("event {i} at {tau} precedes {prev}")));
        }
        prev = tau;
    }
    let mut x = sched.x0.clone();
    let mut now = sched.start;
    for &(tau, kind) in sched.events.iter().take_while(|(tau, _)| *tau <= t) {
        if tau > now {
            x = lis.flow(tau - now) * x;
        }
        x = lis.event(kind) * x;
        now = tau;
    }
    if t > now {
        x = lis.flow(t - now) * x;
    }
    Ok(x)
}

fn check_timing(lis: &LisSpec, dt_u: &[f64], dt_y: &[f64]) -> Result<()> {
    let st = lis.state;
    if dt_u.len() != st.m || dt_y.len() != st.p {
        return Err(Error::Dimension(format!(
            "timing vector lengths ({}, {}), expected ({}, {})",
            dt_u.len(),
            dt_y.len(),
            st.m,
            st.p
        )));
    }
    let half = lis.period / 2.0;
    if let Some(bad) = dt_u.iter().chain(dt_y).find(|t| !(-half < **t && **t < half)) {
        return Err(Error::InvalidTiming(format!("deviation {bad} outside (-T/2, T/2) with T/2 = {half}")));
    }
    Ok(())
}

/// One-period transition matrix `A(Δt)` from `kT − T/2` to `kT + T/2`.
pub fn transition_matrix(lis: &LisSpec, dt_u: &[f64], dt_y: &[f64]) -> Result<DMatrix<f64>> {
    check_timing(lis, dt_u, dt_y)?;
    let mut a = DMatrix::identity(lis.n(), lis.n());
    let mut prev = -lis.period / 2.0;
    for (tau, kind) in lis.events_in_period(dt_u, dt_y) {
        if tau > prev {
            a = lis.flow(tau - prev) * a;
        }
        a = lis.event(kind) * a;
        prev = tau;
    }
    Ok(a)
}

/// Uniformly random admissible timing inside the windows of `sys`.
pub fn random_timing<R: Rng>(sys: &ClosedLoopSystem, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let draw = |rng: &mut R, lo: f64, hi: f64| if lo < hi { rng.random_range(lo..=hi) } else { lo };
    let u = (0..sys.num_inputs()).map(|i| draw(rng, sys.dt_u_lo[i], sys.dt_u_hi[i])).collect();
    let y = (0..sys.num_outputs()).map(|j| draw(rng, sys.dt_y_lo[j], sys.dt_y_hi[j])).collect();
    (u, y)
}

/// Monte-Carlo sampling of `|x_k| / |x_0|` at the period boundaries.
///
/// Each run uses a random unit initial state and independent random timings
/// per period; run `r` is seeded with `seed + r`, so results do not depend on
/// the execution policy. Returns `runs` vectors of `periods + 1` ratios.
pub fn monte_carlo_norm_ratios(
    sys: &ClosedLoopSystem,
    lis: &LisSpec,
    runs: usize,
    periods: usize,
    seed: u64,
    exec: Exec,
) -> Vec<Vec<f64>> {
    exec.map_range(runs, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
        let mut x = DVector::from_fn(lis.n(), |_, _| rng.random_range(-1.0..1.0));
        let n0 = x.norm();
        if n0 > 0.0 {
            x /= n0;
        }
        let mut out = Vec::with_capacity(periods + 1);
        out.push(1.0);
        for _ in 0..periods {
            let (du, dy) = random_timing(sys, &mut rng);
            let a = transition_matrix(lis, &du, &dy).expect("sampled timing is admissible");
            x = a * x;
            out.push(x.norm());
        }
        out
    })
}

/// Writes `t, x_0, ..., x_{n-1}` rows for the given times; columns follow
/// the augmented state order (plant, controller, measurements, inputs).
pub fn write_trajectory_csv<W: Write>(lis: &LisSpec, sched: &EventSchedule, times: &[f64], mut w: W) -> io::Result<()> {
    let st = lis.state;
    let mut header = vec!["t".to_string()];
    header.extend((0..st.n_p).map(|i| format!("x_p{i}")));
    header.extend((0..st.n_d).map(|i| format!("x_d{i}")));
    header.extend((0..st.p).map(|i| format!("y_d{i}")));
    header.extend((0..st.m).map(|i| format!("u{i}")));
    writeln!(w, "{}", header.join(","))?;
    for &t in times {
        let x = simulate(lis, sched, t).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
        let row: Vec<String> = std::iter::once(t).chain(x.iter().copied()).map(|v| format!("{v:e}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}
