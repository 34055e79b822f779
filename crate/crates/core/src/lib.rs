//! Adaptive Bayesian gravity estimation for atom-interferometer gravimeters.
//!
//! A simulated Mach-Zehnder gravimeter ([`physics`]) feeds shots into a
//! grid posterior over `g` ([`bayes`]). Interrogation times follow a
//! [`schedule`] and the control value is re-centred on the running
//! estimate after every shot. [`oracle`] has the closed-form precision
//! laws, [`frequentist`] the conventional fringe-scan protocol, and
//! [`harness`] the repeatable Monte Carlo experiments built on them.

pub mod bayes;
pub mod error;
pub mod frequentist;
pub mod harness;
pub mod oracle;
pub mod parallel;
pub mod physics;
pub mod quadrature;
pub mod rng;
pub mod schedule;

pub use error::{Error, Result};
