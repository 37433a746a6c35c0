//! Verified exponential-stability certificates for sampled-data control
//! loops whose sensor reads and actuator writes deviate from the nominal
//! period by bounded, time-varying offsets.
//!
//! Pipeline: [`model`] builds the impulsive-system matrices, [`decomp`]
//! splits the one-period transition matrix into a nominal part and
//! single-parameter deviation terms, [`synth`] finds a quadratic Lyapunov
//! matrix `P`, and [`verify`] bounds every term in the `P`-ellipsoid norm
//! with interval arithmetic ([`interval`], [`pnorm`]).

pub mod benchmarks;
pub mod decomp;
pub mod error;
pub mod exec;
pub mod interval;
pub mod linalg;
pub mod lis_sim;
pub mod model;
pub mod pnorm;
pub mod synth;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Exec;
