//! Numeric tolerances shared by every module.
//!
//! A single [`NumericPolicy`] record carries the thresholds used for
//! Hermiticity, positivity and normalization checks. The defaults can be
//! overridden through the `DICKA_NUMERIC_POLICY` environment variable, e.g.
//! `DICKA_NUMERIC_POLICY="hermiticity=1e-9,psd_floor=-1e-8"`.

use crate::error::{Error, Result};

pub const POLICY_ENV_VAR: &str = "DICKA_NUMERIC_POLICY";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericPolicy {
    /// Max absolute entry of `A - A†` for a matrix to count as Hermitian.
    pub hermiticity: f64,
    /// Smallest eigenvalue accepted as "positive semidefinite".
    pub psd_floor: f64,
    /// Allowed deviation of a trace or a norm from one.
    pub normalization: f64,
    /// Allowed deviation of a probability table sum from one.
    pub probability: f64,
}

impl Default for NumericPolicy {
    fn default() -> Self {
        Self {
            hermiticity: 1e-10,
            psd_floor: -1e-9,
            normalization: 1e-10,
            probability: 1e-9,
        }
    }
}

impl NumericPolicy {
    /// Parses `key=value` pairs separated by commas on top of the defaults.
    pub fn parse_overrides(spec: &str) -> Result<Self> {
        let mut policy = Self::default();
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("expected key=value, got `{item}`")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad number in `{item}`")))?;
            match key.trim() {
                "hermiticity" => policy.hermiticity = value,
                "psd_floor" => policy.psd_floor = value,
                "normalization" => policy.normalization = value,
                "probability" => policy.probability = value,
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "unknown numeric policy key `{other}`"
                    )))
                }
            }
        }
        Ok(policy)
    }

    /// Defaults, overridden by [`POLICY_ENV_VAR`] when it is set.
    pub fn from_env() -> Result<Self> {
        match std::env::var(POLICY_ENV_VAR) {
            Ok(spec) => Self::parse_overrides(&spec),
            Err(_) => Ok(Self::default()),
        }
    }
}
