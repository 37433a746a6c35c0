//! Batch front-end: reads a job config, synthesizes `P`, certifies the loop
//! and writes a report.
//!
//! Exit status: 0 when the loop is certified stable, 2 when the result is
//! unknown, 1 on any input or usage error.

pub mod config;
pub mod decimal;
pub mod report;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use jitterbound::decomp::decompose;
use jitterbound::synth::{beta_search, SynthesisOptions};
use jitterbound::verify::{approx_certify, certify_with, VerifyOptions};
use jitterbound::Exec;

pub use config::{JobConfig, Mode};
pub use report::Report;

pub const EXIT_STABLE: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] jitterbound::Error),
}

#[derive(Debug, Parser)]
#[command(name = "jitterbound", version, about = "Stability certificates for control loops with timing jitter")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a Lyapunov matrix and certify the loop described by a config.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// JSON job config.
    pub config: PathBuf,
    /// Overrides `options.mode`.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Overrides `options.taylor_order`.
    #[arg(long)]
    pub taylor_order: Option<usize>,
    /// Overrides `options.approx_samples`.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Reads and parses the config named by `args`, applying flag overrides.
pub fn load(args: &VerifyArgs) -> Result<JobConfig, Error> {
    let text = std::fs::read_to_string(&args.config).map_err(|source| Error::Io { path: args.config.clone(), source })?;
    let mut cfg = JobConfig::parse(&text)?;
    if let Some(mode) = args.mode {
        cfg.options.mode = mode;
    }
    if let Some(r) = args.taylor_order {
        cfg.options.taylor_order = r;
    }
    if let Some(s) = args.samples {
        cfg.options.approx_samples = s;
    }
    Ok(cfg)
}

/// Runs the whole pipeline on a parsed config.
pub fn run_job(cfg: &JobConfig, exec: Exec) -> Result<Report, Error> {
    let opts = &cfg.options;
    if opts.taylor_order == 0 {
        return Err(Error::Usage("taylor order must be at least 1".into()));
    }
    if opts.mode.approx() && opts.approx_samples == 0 {
        return Err(Error::Usage("approximation needs at least one sample".into()));
    }
    if !(opts.lmi_tolerance.0 > 0.0) {
        return Err(Error::Usage("lmi_tolerance must be positive".into()));
    }
    let sys = cfg.to_system()?;

    let start = Instant::now();
    let dec = decompose(&sys)?;
    let synth_opts = SynthesisOptions {
        lmi_tolerance: opts.lmi_tolerance.0,
        heuristic_iterations: opts.heuristic_iterations,
        taylor_order: opts.taylor_order,
        exec,
    };
    let outcome = beta_search(&sys, &dec, &synth_opts)?;
    let mut wall = report::WallTime { synthesis: start.elapsed().as_secs_f64(), ..Default::default() };

    let k = outcome.result.k.as_ref();
    let cert = if opts.mode.verified() {
        match k {
            Some(k) => {
                let start = Instant::now();
                let cert = certify_with(&sys, k, VerifyOptions { taylor_order: opts.taylor_order, exec })?;
                wall.verified = Some(start.elapsed().as_secs_f64());
                Some(cert)
            }
            None => Some(outcome.certificate.clone()),
        }
    } else {
        None
    };
    let approx = match (opts.mode.approx(), k) {
        (true, Some(k)) => {
            let start = Instant::now();
            let a = approx_certify(&sys, k, opts.approx_samples, exec)?;
            wall.approx = Some(start.elapsed().as_secs_f64());
            Some(a)
        }
        _ => None,
    };
    let dims = report::Dimensions { n: dec.lis.n(), m: sys.num_inputs(), p: sys.num_outputs() };
    let mut report = Report::new(opts.mode, dims, opts.taylor_order, &outcome, cert.as_ref(), approx.as_ref(), wall);
    if report.reason.is_none() && !report.is_stable() && k.is_none() {
        report.reason = Some("no Lyapunov matrix could be synthesized".into());
    }
    Ok(report)
}

/// `verify` subcommand: returns the exit status.
pub fn verify(args: &VerifyArgs) -> Result<i32, Error> {
    let cfg = load(args)?;
    let report = run_job(&cfg, Exec::default())?;
    let body = if args.json { report.to_json() } else { report.to_text() };
    match &args.out {
        Some(path) => std::fs::write(path, body).map_err(|source| Error::Io { path: path.clone(), source })?,
        None => print!("{body}"),
    }
    Ok(if report.is_stable() { EXIT_STABLE } else { EXIT_UNKNOWN })
}
