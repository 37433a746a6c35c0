mod common;

use jitterbound::benchmarks;
use jitterbound::decomp::decompose;
use jitterbound::interval::IntervalMatrix;
use jitterbound::linalg;
use jitterbound::pnorm::{pnorm, EllipsoidNorm};
use jitterbound::synth::{
    deviation_set, inverse_transform_cholesky, lmi_p, lyapunov_p, precondition, SynthesisProblem, SynthesisStatus,
};
use nalgebra::DMatrix;
use rand::Rng;

use common::{random_matrix, random_spd, rng, with_spectral_radius};

fn verified_pnorm(k: &DMatrix<f64>, a: &DMatrix<f64>) -> (f64, f64) {
    let norm = EllipsoidNorm::from_factor(k).unwrap();
    let v = pnorm(&norm, &IntervalMatrix::from_point(a));
    (v.lo(), v.hi())
}

#[test]
fn lyapunov_solution_meets_its_target() {
    let mut rng = rng(51);
    for case in 0..120 {
        let n = rng.random_range(1..=16);
        let rho = rng.random_range(0.05..0.95);
        let a = with_spectral_radius(&mut rng, n, rho);
        let rho_bar = rng.random_range(rho + 0.02..1.0f64.min(rho + 0.5));
        let res = lyapunov_p(&a, rho_bar);
        assert_eq!(res.status, SynthesisStatus::Ok, "case {case}");
        let (_, hi) = verified_pnorm(&res.k.unwrap(), &a);
        assert!(hi <= rho_bar + 1e-6, "case {case}: {hi} > {rho_bar}");
    }
}

fn max_eig(m: &DMatrix<f64>) -> f64 {
    linalg::max_eigenvalue(&linalg::sym(m))
}

#[test]
fn lmi_solution_satisfies_all_inequalities() {
    let mut rng = rng(52);
    let mut solved = 0;
    for case in 0..40 {
        let n = rng.random_range(1..=6);
        let rho = rng.random_range(0.1..0.9);
        let a = with_spectral_radius(&mut rng, n, rho);
        let rho_bar = 0.8 + 0.2 * rho;
        let devs: Vec<_> = (0..rng.random_range(0..4)).map(|_| random_matrix(&mut rng, n, n, 0.05)).collect();
        let beta = rng.random_range(0.2..0.6);
        let prob = SynthesisProblem { a_nom: a.clone(), deviation_set: devs.clone(), rho_bar, beta };
        let res = lmi_p(&prob, 0.0, 1e-9);
        if res.status != SynthesisStatus::Ok {
            continue;
        }
        solved += 1;
        let k = res.k.unwrap();
        let p = &k * k.transpose();
        let id = DMatrix::<f64>::identity(n, n);
        assert!(max_eig(&(a.transpose() * &p * &a - &p * rho_bar.powi(2))) < 1e-8, "case {case}");
        for d in &devs {
            assert!(max_eig(&(d.transpose() * &p * d - &p * beta.powi(2))) < 1e-8, "case {case}");
        }
        assert!(max_eig(&(&id * res.gamma - &p)) < 1e-8, "case {case}");
        assert!(max_eig(&(&p - &id)) < 1e-8, "case {case}");
        assert!(res.gamma > 0.0);
    }
    assert!(solved >= 30, "only {solved} problems solved");
}

#[test]
fn norm_bound_agrees_with_matrix_inequality() {
    let mut rng = rng(53);
    for _ in 0..150 {
        let n = rng.random_range(1..=6);
        let p = random_spd(&mut rng, n);
        let k = linalg::cholesky_lower(&p).unwrap();
        let m = random_matrix(&mut rng, n, n, 1.0);
        let exact = linalg::pnorm_float(&k, &m);
        let c = exact * rng.random_range(0.9..1.1);
        if (c - exact).abs() <= 1e-9 * exact {
            continue;
        }
        let lmi_holds = max_eig(&(m.transpose() * &p * &m - &p * (c * c))) < 0.0;
        assert_eq!(lmi_holds, exact < c);
        let (lo, hi) = verified_pnorm(&k, &m);
        if hi < c {
            assert!(lmi_holds);
        }
        if lo >= c {
            assert!(!lmi_holds);
        }
    }
}

#[test]
fn jordan_block_norm_exceeds_spectral_radius() {
    let a = DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 0.0, 0.5]);
    let mut factors = Vec::new();
    for rho_bar in [0.55, 0.6, 0.75, 0.9, 0.99] {
        factors.push(lyapunov_p(&a, rho_bar).k.unwrap());
        let prob = SynthesisProblem { a_nom: a.clone(), deviation_set: vec![], rho_bar, beta: 0.0 };
        if let Some(k) = lmi_p(&prob, 0.0, 1e-9).k {
            factors.push(k);
        }
    }
    let mut rng = rng(54);
    factors.extend((0..100).map(|_| linalg::cholesky_lower(&random_spd(&mut rng, 2)).unwrap()));
    for k in &factors {
        let (lo, _) = verified_pnorm(k, &a);
        assert!(lo > 0.5, "{lo}");
    }
    let (_, hi) = verified_pnorm(&lyapunov_p(&a, 0.9).k.unwrap(), &a);
    assert!(hi <= 0.9, "{hi}");
}

#[test]
fn preconditioning_yields_contraction() {
    let mut rng = rng(55);
    for _ in 0..20 {
        let rho = rng.random_range(0.1..0.95);
        let a = with_spectral_radius(&mut rng, 4, rho);
        let pre = precondition(&a, &[], 1e-9).unwrap();
        assert!(linalg::spectral_norm(&pre.a_tilde) < 1.0);
        assert!(linalg::rel_diff(&(&pre.r_inv * &a), &(&pre.a_tilde * &pre.r_inv)) < 1e-10);
    }
}

#[test]
fn inverse_transform_reproduces_congruence() {
    let mut rng = rng(56);
    for _ in 0..20 {
        let k_tilde = linalg::cholesky_lower(&random_spd(&mut rng, 3)).unwrap();
        let r_inv = linalg::cholesky_lower(&random_spd(&mut rng, 3)).unwrap().transpose();
        let p_tilde = &k_tilde * k_tilde.transpose();
        let direct = r_inv.transpose() * &p_tilde * &r_inv;
        let f = inverse_transform_cholesky(&k_tilde, &r_inv);
        let via_factor = f.transpose() * &f;
        assert!(linalg::rel_diff(&via_factor, &direct) < 1e-10);
    }
}

#[test]
fn deviation_set_has_eight_members() {
    let sys = benchmarks::double_integrator(0.1, 0.01);
    let dec = decompose(&sys).unwrap();
    assert_eq!(deviation_set(&dec, &sys).len(), 8);
}
