//! Sweeps, threshold searches and SDP export on top of `dicka-core`.

use std::fmt;

pub mod config;
pub mod export;
pub mod sweep;
pub mod threshold;

pub use config::{Grid, Overrides, Scenario, Scenario2Config, SweepConfig};
pub use export::{run_export, ExportManifest};
pub use sweep::{run_sweep, validate_csv, CurvePoint, Status, Summary};
pub use threshold::{run_threshold, ThresholdReport};

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad configuration file, flag or environment value.
    Config(String),
    /// A computation or output step failed.
    Compute(String),
    /// `validate` found rows that do not reproduce their rate.
    Invalid(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Compute(_) => 3,
            Self::Invalid(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "invalid configuration: {m}"),
            Self::Compute(m) => write!(f, "computation failed: {m}"),
            Self::Invalid(m) => write!(f, "validation failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}
