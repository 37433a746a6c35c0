//! Job configuration: a JSON document with the loop matrices as row-major
//! nested arrays and every number given as a decimal string.

use std::fmt;
use std::str::FromStr;

use jitterbound::model::ClosedLoopSystem;
use jitterbound::synth::DEFAULT_LMI_TOLERANCE;
use jitterbound::pnorm::DEFAULT_ORDER;
use nalgebra::{DMatrix, DVector};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::decimal;
use crate::Error;

/// A finite double read from a decimal string (plain JSON numbers are
/// accepted too) and written back as its shortest round-trip string.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Number(pub f64);

impl FromStr for Number {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let ok = !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit() || b"+-.eE".contains(&b));
        match t.parse::<f64>() {
            Ok(x) if ok && x.is_finite() => Ok(Number(x)),
            Ok(_) if ok => Err(format!("decimal {s:?} is out of range")),
            _ => Err(format!("invalid decimal {s:?}")),
        }
    }
}

impl Serialize for Number {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&decimal::nearest(self.0))
    }
}

impl<'de> Deserialize<'de> for Number {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Number;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a decimal string")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Number, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Number, E> {
                Ok(Number(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Number, E> {
                Ok(Number(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Number, E> {
                Ok(Number(v as f64))
            }
        }
        d.deserialize_any(V)
    }
}

pub type Matrix = Vec<Vec<Number>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub a_p: Matrix,
    pub b_p: Matrix,
    pub c_p: Matrix,
    pub a_d: Matrix,
    pub b_d: Matrix,
    pub c_d: Matrix,
    pub period: Number,
    pub dt_u_lo: Vec<Number>,
    pub dt_u_hi: Vec<Number>,
    pub dt_y_lo: Vec<Number>,
    pub dt_y_hi: Vec<Number>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Verified,
    Approx,
    Both,
}

impl Mode {
    pub fn verified(self) -> bool {
        self != Mode::Approx
    }

    pub fn approx(self) -> bool {
        self != Mode::Verified
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Options {
    pub taylor_order: usize,
    pub approx_samples: usize,
    pub lmi_tolerance: Number,
    pub heuristic_iterations: usize,
    pub mode: Mode,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            taylor_order: DEFAULT_ORDER,
            approx_samples: 100,
            lmi_tolerance: Number(DEFAULT_LMI_TOLERANCE),
            heuristic_iterations: 3,
            mode: Mode::Verified,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub system: SystemConfig,
    #[serde(default)]
    pub options: Options,
}

impl JobConfig {
    /// Parses a config, naming the offending field and position on error.
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut de = serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                Error::Config(inner.to_string())
            } else {
                Error::Config(format!("{path}: {inner}"))
            }
        })?;
        de.end().map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_system(sys: &ClosedLoopSystem, options: Options) -> Self {
        let m = |a: &DMatrix<f64>| -> Matrix {
            (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| Number(a[(i, j)])).collect()).collect()
        };
        let v = |x: &DVector<f64>| x.iter().map(|&e| Number(e)).collect();
        Self {
            system: SystemConfig {
                a_p: m(&sys.a_p),
                b_p: m(&sys.b_p),
                c_p: m(&sys.c_p),
                a_d: m(&sys.a_d),
                b_d: m(&sys.b_d),
                c_d: m(&sys.c_d),
                period: Number(sys.period),
                dt_u_lo: v(&sys.dt_u_lo),
                dt_u_hi: v(&sys.dt_u_hi),
                dt_y_lo: v(&sys.dt_y_lo),
                dt_y_hi: v(&sys.dt_y_hi),
            },
            options,
        }
    }

    /// The validated system.
    pub fn to_system(&self) -> Result<ClosedLoopSystem, Error> {
        let s = &self.system;
        let sys = ClosedLoopSystem {
            a_p: matrix("system.a_p", &s.a_p)?,
            b_p: matrix("system.b_p", &s.b_p)?,
            c_p: matrix("system.c_p", &s.c_p)?,
            a_d: matrix("system.a_d", &s.a_d)?,
            b_d: matrix("system.b_d", &s.b_d)?,
            c_d: matrix("system.c_d", &s.c_d)?,
            period: s.period.0,
            dt_u_lo: vector(&s.dt_u_lo),
            dt_u_hi: vector(&s.dt_u_hi),
            dt_y_lo: vector(&s.dt_y_lo),
            dt_y_hi: vector(&s.dt_y_hi),
        };
        sys.validate()?;
        Ok(sys)
    }
}

fn matrix(name: &str, rows: &Matrix) -> Result<DMatrix<f64>, Error> {
    let cols = rows.first().map_or(0, Vec::len);
    if let Some(i) = rows.iter().position(|r| r.len() != cols) {
        return Err(Error::Config(format!("{name}[{i}]: row has {} entries, expected {cols}", rows[i].len())));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j].0))
}

fn vector(v: &[Number]) -> DVector<f64> {
    DVector::from_iterator(v.len(), v.iter().map(|x| x.0))
}
