//! Configuration, Monte Carlo orchestration and output.

pub mod compare;
pub mod config;
pub mod fit;
pub mod output;
pub mod presets;
pub mod run;
pub mod scaling;
pub mod stats;
pub mod sweep;

pub use compare::{compare_protocols, CompareOptions, CompareRow};
pub use config::{Axis, CompareSpec, Protocol, RunConfig, ScalingSpec, SweepSpec};
pub use fit::{fit_scaling_exponent, PowerLawFit};
pub use presets::{preset, PRESET_NAMES};
pub use run::{run_bge, run_bge_rep, EstimationTrace, TraceRow};
pub use scaling::{scaling_experiment, ScalingReport};
pub use sweep::{run_repetitions, run_sweep, SweepRow};
