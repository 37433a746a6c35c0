//! Human- and machine-readable job reports.

use std::fmt::Write;

use jitterbound::interval::Interval;
use jitterbound::synth::BetaSearchOutcome;
use jitterbound::verify::{sensitivity_report, ApproxCertificate, Certificate};
use serde::{Deserialize, Serialize};

use crate::config::Mode;
use crate::decimal;

/// Interval endpoints as outward-rounded decimal strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Endpoints {
    pub lo: String,
    pub hi: String,
}

impl From<Interval> for Endpoints {
    fn from(x: Interval) -> Self {
        Self { lo: decimal::down(x.lo()), hi: decimal::up(x.hi()) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CgesReport {
    /// Decay rate, rounded up.
    pub lambda: String,
    /// Overshoot constant, rounded up.
    pub d: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub channel: String,
    /// Upper endpoint of the deviation bound, rounded up.
    pub bound: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxReport {
    pub rho_n: String,
    pub rho_tilde: String,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub beta: String,
    pub status: String,
    pub rho_tilde: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisReport {
    pub rho_bar: String,
    pub fallback: bool,
    pub iterations: Vec<IterationReport>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WallTime {
    pub synthesis: f64,
    pub verified: Option<f64>,
    pub approx: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dimensions {
    pub n: usize,
    pub m: usize,
    pub p: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    /// `"stable"` or `"unknown"`; decides the exit status.
    pub verdict: String,
    /// False when the verdict rests on the sampled approximation alone.
    pub verified: bool,
    pub reason: Option<String>,
    pub mode: Mode,
    pub dimensions: Dimensions,
    pub taylor_order: usize,
    pub rho_n: Option<Endpoints>,
    pub rho_tilde: Option<Endpoints>,
    pub cges: Option<CgesReport>,
    pub sensitivity: Vec<SensitivityRow>,
    pub sensitivity_note: Option<String>,
    pub approx: Option<ApproxReport>,
    pub synthesis: SynthesisReport,
    /// Seconds.
    pub wall_time: WallTime,
}

impl Report {
    pub fn is_stable(&self) -> bool {
        self.verdict == "stable"
    }

    pub fn new(
        mode: Mode,
        dimensions: Dimensions,
        taylor_order: usize,
        synthesis: &BetaSearchOutcome,
        cert: Option<&Certificate>,
        approx: Option<&ApproxCertificate>,
        wall_time: WallTime,
    ) -> Self {
        let mut report = Report {
            verdict: "unknown".into(),
            verified: cert.is_some(),
            reason: None,
            mode,
            dimensions,
            taylor_order,
            rho_n: None,
            rho_tilde: None,
            cges: None,
            sensitivity: vec![],
            sensitivity_note: None,
            approx: approx.map(|a| ApproxReport {
                rho_n: decimal::nearest(a.rho_n),
                rho_tilde: decimal::nearest(a.rho_tilde),
                samples: a.samples,
            }),
            synthesis: SynthesisReport {
                rho_bar: decimal::nearest(synthesis.rho_bar),
                fallback: synthesis.fallback,
                iterations: synthesis
                    .iterations
                    .iter()
                    .map(|it| IterationReport {
                        beta: decimal::nearest(it.beta),
                        status: format!("{:?}", it.status),
                        rho_tilde: it.rho_tilde.map(decimal::up),
                    })
                    .collect(),
            },
            wall_time,
        };
        if let Some(cert) = cert {
            report.verdict = cert.verdict.as_str().into();
            report.reason = cert.reason.clone();
            report.rho_n = Some(cert.rho_n.into());
            report.rho_tilde = Some(cert.rho_tilde.into());
            report.cges = cert.cges.map(|c| CgesReport { lambda: decimal::up(c.lambda), d: decimal::up(c.d) });
            let ranking = sensitivity_report(cert);
            report.sensitivity = ranking
                .entries
                .iter()
                .map(|e| SensitivityRow { channel: e.kind.to_string(), bound: decimal::up(e.bound) })
                .collect();
            report.sensitivity_note = ranking.note.map(str::to_string);
        } else if let Some(a) = approx {
            if a.rho_tilde < 1.0 {
                report.verdict = "stable".into();
            } else {
                report.reason = Some(format!("approximate rho_tilde {} >= 1", decimal::nearest(a.rho_tilde)));
            }
        }
        report
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let verdict = if self.verified { self.verdict.clone() } else { format!("{} (unverified)", self.verdict) };
        let _ = writeln!(s, "verdict       {verdict}");
        if let Some(reason) = &self.reason {
            let _ = writeln!(s, "reason        {reason}");
        }
        let d = &self.dimensions;
        let _ = writeln!(s, "dimensions    n = {}, m = {}, p = {}", d.n, d.m, d.p);
        if let Some(r) = &self.rho_n {
            let _ = writeln!(s, "rho_n         [{}, {}]", r.lo, r.hi);
        }
        if let Some(r) = &self.rho_tilde {
            let _ = writeln!(s, "rho_tilde     [{}, {}]", r.lo, r.hi);
        }
        if let Some(c) = &self.cges {
            let _ = writeln!(s, "cges          lambda = {}, D = {}", c.lambda, c.d);
        }
        if self.verified {
            let _ = writeln!(s, "taylor order  {}", self.taylor_order);
        }
        if let Some(a) = &self.approx {
            let _ = writeln!(s, "approx        rho_tilde ~ {}, rho_n ~ {} ({} samples)", a.rho_tilde, a.rho_n, a.samples);
        }
        if !self.sensitivity.is_empty() {
            let _ = writeln!(s, "sensitivity   {} channels, largest bound first", self.sensitivity.len());
            let width = self.sensitivity.iter().map(|r| r.channel.len()).max().unwrap_or(0);
            for row in &self.sensitivity {
                let _ = writeln!(s, "  {:<width$}  {}", row.channel, row.bound);
            }
            if let Some(note) = &self.sensitivity_note {
                let _ = writeln!(s, "  ({note})");
            }
        }
        let w = &self.wall_time;
        let mut times = vec![format!("synthesis {}", ms(w.synthesis))];
        if let Some(t) = w.verified {
            times.push(format!("verified {}", ms(t)));
        }
        if let Some(t) = w.approx {
            times.push(format!("approx {}", ms(t)));
        }
        let _ = writeln!(s, "wall time     {}", times.join(", "));
        s
    }
}

fn ms(seconds: f64) -> String {
    format!("{:.3} ms", seconds * 1e3)
}
