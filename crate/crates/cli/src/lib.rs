//! Experiment orchestration for `minent`: sweep specs, figure presets,
//! consolidated CSV output and the command-line front end.

pub mod cli;
pub mod external;
pub mod spec;
pub mod sweep;

pub use spec::{ExperimentSpec, Family, MethodKind};
pub use sweep::{run_sweep, Row, RunContext};
