//! Hard-handover analysis and hysteresis optimization for a mobile terminal
//! moving between base stations under correlated log-normal shadowing.
//!
//! The pipeline runs left to right through the modules: [`scenario`] lays out
//! cells and the terminal's path, [`channel`] samples received powers,
//! [`estimators`] filters them into strength estimates, [`hybrid`] applies the
//! hysteresis rule, [`gaussian`] and [`metrics`] turn the filter coefficients
//! into connection, handover and outage probabilities, [`optimizer`] picks
//! hysteresis margins over a receding horizon, and [`harness`] runs the
//! Monte Carlo experiments.

pub mod channel;
pub mod config;
pub mod error;
pub mod estimators;
pub mod gaussian;
pub mod harness;
pub mod hybrid;
pub mod metrics;
pub mod optimizer;
pub mod rng;
pub mod scenario;

pub use error::{Error, Result};
