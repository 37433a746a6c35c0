#![allow(dead_code)]

pub mod dd;
pub mod lemmas;
pub mod series;

use jitterbound::benchmarks::random_system;
use jitterbound::decomp::decompose;
use jitterbound::linalg;
use jitterbound::model::ClosedLoopSystem;
use jitterbound::synth::lyapunov_p;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random instance with every block dimension in `1..=3`.
pub fn small_system(rng: &mut ChaCha8Rng, max_frac: f64) -> ClosedLoopSystem {
    let d = |rng: &mut ChaCha8Rng| rng.random_range(1..=3usize);
    let (n_p, n_d, p, m) = (d(rng), d(rng), d(rng), d(rng));
    let period = rng.random_range(0.1..1.0);
    random_system(rng, n_p, n_d, p, m, period, max_frac)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-scale..scale))
}

/// Random matrix rescaled to spectral radius `rho`.
pub fn with_spectral_radius(rng: &mut ChaCha8Rng, n: usize, rho: f64) -> DMatrix<f64> {
    loop {
        let a = random_matrix(rng, n, n, 1.0);
        let r = linalg::spectral_radius(&a);
        if r > 1e-3 {
            return a * (rho / r);
        }
    }
}

/// Random symmetric positive definite matrix with condition number at most ~100.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let g = random_matrix(rng, n, n, 1.0);
    linalg::sym(&(&g * g.transpose() + DMatrix::identity(n, n) * 0.1 * n as f64))
}

/// Lyapunov factor for the nominal matrix when it is stable, identity otherwise.
pub fn nominal_factor(sys: &ClosedLoopSystem) -> DMatrix<f64> {
    let a = decompose(sys).unwrap().a_nominal;
    let rho = linalg::spectral_radius(&a);
    let n = a.nrows();
    if rho < 0.99 {
        if let Some(k) = lyapunov_p(&a, 0.5 * (1.0 + rho)).k {
            return k;
        }
    }
    DMatrix::identity(n, n)
}
