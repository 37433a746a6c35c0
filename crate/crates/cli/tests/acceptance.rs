//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use jitterbound::benchmarks::{self, with_symmetric_jitter};
use jitterbound::decomp::{decompose, verified_factors};
use jitterbound::interval::{exp_enclosure, float_spectral_norm, spectral_norm_enclosure, IntervalMatrix};
use jitterbound::lis_sim::{monte_carlo_norm_ratios, random_timing, transition_matrix};
use jitterbound::model::{build_lis, ClosedLoopSystem};
use jitterbound::pnorm::{generator_norms, pnorm, EllipsoidNorm, DEFAULT_ORDER};
use jitterbound::synth::{beta_search, lmi_p, lyapunov_p, SynthesisOptions, SynthesisProblem, SynthesisStatus};
use jitterbound::verify::{sample_points, timing_scale_bisection, Certificate, Verifier, VerifyOptions};
use jitterbound::{linalg, Exec};
use jitterbound_cli::JobConfig;
use nalgebra::DMatrix;
use rand::Rng;

use common::dd::dd_expm;
use common::lemmas::check_lemmas;
use common::series::term;
use common::{nominal_factor, random_matrix, random_spd, rng, small_system, with_spectral_radius};

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn synthesize(sys: &ClosedLoopSystem) -> (DMatrix<f64>, Certificate) {
    let dec = decompose(sys).unwrap();
    let out = beta_search(sys, &dec, &SynthesisOptions::default()).unwrap();
    (out.result.k.unwrap(), out.certificate)
}

fn ac1() -> Outcome {
    let mut rng = rng(1001);
    let mut worst = 0.0f64;
    for _ in 0..120 {
        let sys = small_system(&mut rng, 0.45);
        let dec = decompose(&sys).unwrap();
        for _ in 0..25 {
            let (du, dy) = random_timing(&sys, &mut rng);
            let direct = transition_matrix(&dec.lis, &du, &dy).unwrap();
            worst = worst.max(linalg::rel_diff(&dec.sum(&du, &dy), &direct));
        }
    }
    ensure(worst <= 1e-9, format!("worst relative error {worst:.1e} over 120 systems x 25 timings"))
}

fn ac2() -> Outcome {
    let mut rng = rng(1002);
    for _ in 0..120 {
        let lis = build_lis(&small_system(&mut rng, 0.3)).unwrap();
        check_lemmas(&lis, &mut rng);
    }
    Ok("all products exactly zero and all pairs exactly commuting on 120 instances".into())
}

fn ac3() -> Outcome {
    let mut rng = rng(1003);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (r, c) = (rng.random_range(1..=16), rng.random_range(1..=16));
        let scale = 10f64.powf(rng.random_range(-3.0..3.0));
        let a = random_matrix(&mut rng, r, c, scale);
        let sigma = float_spectral_norm(&a);
        let enc = spectral_norm_enclosure(&IntervalMatrix::from_point(&a));
        if !enc.contains(sigma) {
            return Err(format!("{r}x{c}: sigma_max {sigma} outside {enc:?}"));
        }
        worst = worst.max(enc.width() / sigma);
    }
    let mut checked = 0;
    for _ in 0..200 {
        let n = rng.random_range(1..=6);
        let a = random_matrix(&mut rng, n, n, 1.0);
        let a = &a * (rng.random_range(0.01..5.0) / a.norm().max(1e-300));
        let enc = exp_enclosure(&IntervalMatrix::from_point(&a));
        let reference = dd_expm(&a);
        for i in 0..n {
            for j in 0..n {
                let e = enc[(i, j)];
                if !(reference[i][j].at_least(e.lo()) && reference[i][j].at_most(e.hi())) {
                    return Err(format!("exp entry ({i},{j}) outside {e:?}"));
                }
                checked += 1;
            }
        }
    }
    ensure(
        worst <= 1e-6,
        format!("1000 spectral enclosures (worst relative width {worst:.1e}), {checked} exponential entries over 200 matrices"),
    )
}

/// Worst `(two-sided, one-sided)` relative gaps of `h` over sampled norms;
/// errors out if any sample exceeds its bound.
fn bound_gaps(sys: &ClosedLoopSystem) -> Result<(f64, f64), String> {
    let dec = decompose(sys).unwrap();
    let k = nominal_factor(sys);
    let norm = EllipsoidNorm::from_factor(&k).unwrap();
    let gens = generator_norms(&norm, &verified_factors(&dec.lis), DEFAULT_ORDER, Exec::Sequential);
    let k_t = k.transpose();
    let k_inv_t = linalg::lower_inverse_transpose(&k).unwrap();
    let mut worst = (0.0f64, 0.0f64);
    for g in &gens {
        let delta = g.kind.delta_max(sys);
        let h = g.bound(delta).value.hi();
        let sampled = sample_points(g.kind, delta, 100)
            .into_iter()
            .map(|t| linalg::pnorm_float_with(&k_t, &k_inv_t, &term(&dec, g.kind, t)))
            .fold(0.0, f64::max);
        if sampled > h {
            return Err(format!("{}: sampled {sampled} exceeds bound {h}", g.kind));
        }
        if h > 1e-14 {
            let gap = (h - sampled) / h;
            if g.kind.one_sided() {
                worst.1 = worst.1.max(gap);
            } else {
                worst.0 = worst.0.max(gap);
            }
        }
    }
    Ok(worst)
}

fn ac4() -> Outcome {
    let mut wide = rng(1004);
    for _ in 0..60 {
        bound_gaps(&small_system(&mut wide, 0.45))?;
    }
    // Windows of ±T/100 give two-sided terms δ = T/100; windows of ±T/200
    // give the one-sided terms δ = T/100.
    let mut small = rng(42);
    let mut two_sided = 0.0f64;
    for _ in 0..60 {
        two_sided = two_sided.max(bound_gaps(&with_symmetric_jitter(small_system(&mut small, 0.0), 0.01))?.0);
    }
    let mut small = rng(42);
    let mut one_sided = 0.0f64;
    for _ in 0..500 {
        one_sided = one_sided.max(bound_gaps(&with_symmetric_jitter(small_system(&mut small, 0.0), 0.005))?.1);
    }
    ensure(
        two_sided <= 0.5 && one_sided <= 0.5,
        format!(
            "sound on 60 systems; worst gap at delta = T/100: two-sided {two_sided:.3} (60 systems), one-sided {one_sided:.3} (500 systems), limit 0.5"
        ),
    )
}

fn ac5() -> Outcome {
    let sys = benchmarks::double_integrator(0.1, 0.05);
    let (k, _) = synthesize(&sys);
    let found = timing_scale_bisection(&sys, &k, VerifyOptions::default(), 40).unwrap();
    ensure(
        found.scale > 0.0 && found.certificate.is_stable(),
        format!("double integrator (m = 1, p = 2): stable at jitter scale {:.4} of 5% windows", found.scale),
    )
}

fn ac6() -> Outcome {
    let mut instances: Vec<(String, ClosedLoopSystem)> = vec![
        ("double integrator".into(), benchmarks::double_integrator(0.1, 0.002)),
        ("two-axis".into(), benchmarks::two_axis(0.05, 0.001)),
    ];
    let mut rng = rng(1006);
    for i in 0..10 {
        instances.push((format!("random #{i}"), small_system(&mut rng, 0.02)));
    }
    let mut certified = Vec::new();
    for (name, sys) in &instances {
        let (_, cert) = synthesize(sys);
        if !cert.is_stable() {
            continue;
        }
        let lis = build_lis(sys).unwrap();
        let c = cert.condition.unwrap().hi();
        let rho = cert.rho_tilde.hi();
        let ratios = monte_carlo_norm_ratios(sys, &lis, 1000, 50, 7, Exec::default());
        let violations = ratios
            .iter()
            .flat_map(|run| run.iter().enumerate())
            .filter(|(k, r)| **r > c * rho.powi(*k as i32))
            .count();
        if violations > 0 {
            return Err(format!("{name}: {violations} violations"));
        }
        certified.push(name.clone());
    }
    ensure(
        certified.len() >= 2,
        format!("{} certified instances, 1000 runs x 50 periods each, zero violations", certified.len()),
    )
}

fn ac7() -> Outcome {
    let mut rng = rng(1007);
    for case in 0..100 {
        let n = rng.random_range(1..=16);
        let rho = rng.random_range(0.05..0.95);
        let a = with_spectral_radius(&mut rng, n, rho);
        let rho_bar = rng.random_range(rho + 0.02..1.0f64.min(rho + 0.5));
        let res = lyapunov_p(&a, rho_bar);
        let k = res.k.ok_or(format!("Lyapunov case {case} failed"))?;
        let hi = pnorm(&EllipsoidNorm::from_factor(&k).unwrap(), &IntervalMatrix::from_point(&a)).hi();
        if hi > rho_bar + 1e-6 {
            return Err(format!("Lyapunov case {case}: {hi} > {rho_bar}"));
        }
    }
    let max_eig = |m: &DMatrix<f64>| linalg::max_eigenvalue(&linalg::sym(m));
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
        let mut worst = max_eig(&(a.transpose() * &p * &a - &p * rho_bar.powi(2)));
        for d in &devs {
            worst = worst.max(max_eig(&(d.transpose() * &p * d - &p * beta.powi(2))));
        }
        worst = worst.max(max_eig(&(&id * res.gamma - &p))).max(max_eig(&(&p - &id)));
        if worst >= 1e-8 {
            return Err(format!("LMI case {case}: largest eigenvalue {worst:e}"));
        }
    }
    let mut triples = 0;
    while triples < 100 {
        let n = rng.random_range(1..=6);
        let p = random_spd(&mut rng, n);
        let k = linalg::cholesky_lower(&p).unwrap();
        let m = random_matrix(&mut rng, n, n, 1.0);
        let exact = linalg::pnorm_float(&k, &m);
        let c = exact * rng.random_range(0.9..1.1);
        if (c - exact).abs() <= 1e-9 * exact {
            continue;
        }
        triples += 1;
        let lmi_holds = max_eig(&(m.transpose() * &p * &m - &p * (c * c))) < 0.0;
        if lmi_holds != (exact < c) {
            return Err(format!("norm bound and matrix inequality disagree at c = {c}"));
        }
    }
    ensure(
        solved >= 30,
        format!("100 Lyapunov targets met, {solved}/40 LMI solutions re-verified at 1e-8, 100 norm/inequality triples agree"),
    )
}

fn ac8() -> Outcome {
    let a = DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 0.0, 0.5]);
    let verified = |k: &DMatrix<f64>| pnorm(&EllipsoidNorm::from_factor(k).unwrap(), &IntervalMatrix::from_point(&a));
    let mut factors = Vec::new();
    for rho_bar in [0.55, 0.6, 0.75, 0.9, 0.99] {
        factors.extend(lyapunov_p(&a, rho_bar).k);
        let prob = SynthesisProblem { a_nom: a.clone(), deviation_set: vec![], rho_bar, beta: 0.0 };
        factors.extend(lmi_p(&prob, 0.0, 1e-9).k);
    }
    let lowest = factors.iter().map(|k| verified(k).lo()).fold(f64::INFINITY, f64::min);
    let at_09 = verified(&lyapunov_p(&a, 0.9).k.unwrap()).hi();
    ensure(
        lowest > 0.5 && at_09 <= 0.9,
        format!("{} synthesized P: smallest verified norm {lowest:.4} > 0.5; Lyapunov at 0.9 gives {at_09:.4}", factors.len()),
    )
}

fn median_certify_time(sys: &ClosedLoopSystem, k: &DMatrix<f64>) -> (Duration, Certificate) {
    let verifier = Verifier::new(sys, VerifyOptions { exec: Exec::Sequential, ..Default::default() }).unwrap();
    let cert = verifier.certify(k);
    let mut times: Vec<Duration> = (0..9)
        .map(|_| {
            let t = Instant::now();
            std::hint::black_box(verifier.certify(k));
            t.elapsed()
        })
        .collect();
    times.sort();
    (times[times.len() / 2], cert)
}

fn ac9() -> Outcome {
    let base = benchmarks::two_axis(0.05, 0.001);
    let mut rows = Vec::new();
    for sys in [base.clone(), base.repeated(2)] {
        let t = Instant::now();
        let (k, _) = synthesize(&sys);
        let synth = t.elapsed();
        let (certify, cert) = median_certify_time(&sys, &k);
        rows.push((sys.state().n(), synth, certify, cert));
    }
    let (n1, s1, c1, cert1) = &rows[0];
    let (n2, s2, c2, cert2) = &rows[1];
    let ratio = c2.as_secs_f64() / c1.as_secs_f64();
    let (rho1, rho2) = (cert1.rho_tilde.hi(), cert2.rho_tilde.hi());
    ensure(
        ratio <= 8.0 && rho2 >= rho1 && cert2.is_stable(),
        format!(
            "n = {n1} -> {n2}: certification {:.1} ms -> {:.1} ms ({ratio:.1}x, median of 9), rho_tilde {rho1:.6} -> {rho2:.6}; synthesis {:.1} s -> {:.1} s",
            c1.as_secs_f64() * 1e3,
            c2.as_secs_f64() * 1e3,
            s1.as_secs_f64(),
            s2.as_secs_f64()
        ),
    )
}

fn ac10() -> Outcome {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let bin = env!("CARGO_BIN_EXE_jitterbound");
    for (config, code, golden) in
        [("stable.json", 0, Some("stable.report.json")), ("unstable.json", 2, Some("unstable.report.json")), ("half_period.json", 1, None)]
    {
        let path = dir.join(config);
        let out = Command::new(bin).args(["verify", path.to_str().unwrap(), "--json"]).output().map_err(|e| e.to_string())?;
        if out.status.code() != Some(code) {
            return Err(format!("{config}: exit {:?}, expected {code}", out.status.code()));
        }
        if let Some(golden) = golden {
            let mut v: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
            v.as_object_mut().unwrap().remove("wall_time");
            let expected: serde_json::Value =
                serde_json::from_str(&std::fs::read_to_string(dir.join(golden)).unwrap()).unwrap();
            if v != expected {
                return Err(format!("{config}: report differs from {golden}"));
            }
        }
        let cfg = JobConfig::parse(&std::fs::read_to_string(&path).unwrap()).map_err(|e| e.to_string())?;
        if JobConfig::parse(&cfg.to_json()).map_err(|e| e.to_string())? != cfg {
            return Err(format!("{config}: config does not round-trip"));
        }
    }
    Ok("exit codes 0/2/1 and golden reports match; configs round-trip".into())
}

fn main() {
    let criteria: [(&str, &str, fn() -> Outcome); 10] = [
        ("AC1", "decomposition equivalence", ac1),
        ("AC2", "event-matrix identities", ac2),
        ("AC3", "enclosure soundness", ac3),
        ("AC4", "bound soundness and tightness", ac4),
        ("AC5", "positive certified window by bisection", ac5),
        ("AC6", "certified decay vs. simulation", ac6),
        ("AC7", "Lyapunov/LMI posteriors", ac7),
        ("AC8", "Jordan-block norm gap", ac8),
        ("AC9", "scalability under block doubling", ac9),
        ("AC10", "CLI contract", ac10),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("{id} PASS {name}: {detail} ({secs:.1} s)"),
            Err(detail) => {
                failed += 1;
                println!("{id} FAIL {name}: {detail} ({secs:.1} s)");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
