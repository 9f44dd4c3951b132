//! Minimum detection efficiency `η_e` for a positive rate at `L = 0`.

use dicka_core::keyrate::{find_threshold, SearchOptions};
use serde::Serialize;

use crate::config::{Scenario, SweepConfig};
use crate::sweep::rate_at;
use crate::CliError;

/// Samples taken across the bracket before bisecting.
const MONOTONE_SAMPLES: usize = 6;

#[derive(Debug, Clone, Serialize)]
pub struct FixedQThreshold {
    pub q: Option<f64>,
    /// `None` when the bracket holds no sign change.
    pub threshold: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdReport {
    pub scenario: String,
    pub parties: usize,
    pub parameter: &'static str,
    pub range: [f64; 2],
    pub resolution: f64,
    pub per_q: Vec<FixedQThreshold>,
    /// Threshold of `max_q K` over the configured `q` values; only for
    /// more than one `q`.
    pub optimized_q: Option<f64>,
}

impl ThresholdReport {
    /// The smaller of the fixed-q and optimized-q thresholds.
    pub fn best(&self) -> Option<f64> {
        self.per_q.iter().filter_map(|t| t.threshold).chain(self.optimized_q).reduce(f64::min)
    }
}

/// Raw rate at `L = 0` as a function of `η_e`.
fn rate_fn<'a>(config: &'a SweepConfig, qs: &'a [f64]) -> impl FnMut(f64) -> dicka_core::Result<f64> + 'a {
    move |eta_e| {
        let mut best = f64::NEG_INFINITY;
        for &q in qs {
            let (report, _) = rate_at(config, q, eta_e, 0.0, None).map_err(|e| dicka_core::Error::Solver(e.to_string()))?;
            best = best.max(report.raw_rate);
        }
        Ok(best)
    }
}

fn search(config: &SweepConfig, qs: &[f64]) -> Result<Result<f64, String>, CliError> {
    let [lo, hi] = config.threshold_range;
    let mut rate = rate_fn(config, qs);
    let mut secure_seen = false;
    for k in 0..MONOTONE_SAMPLES {
        let eta = lo + (hi - lo) * k as f64 / (MONOTONE_SAMPLES - 1) as f64;
        let secure = rate(eta).map_err(|e| CliError::Compute(e.to_string()))? > 0.0;
        if secure_seen && !secure {
            return Err(CliError::Compute(format!("rate is not monotone in eta_e: no key at {eta} above a secure point")));
        }
        secure_seen |= secure;
    }
    match find_threshold(rate, lo, hi, SearchOptions::threshold()) {
        Ok(t) => Ok(Ok(t)),
        Err(dicka_core::Error::NoBracket { lo, hi }) => Ok(Err(format!("no sign change in [{lo}, {hi}]"))),
        Err(e) => Err(CliError::Compute(e.to_string())),
    }
}

pub fn run_threshold(config: &SweepConfig) -> Result<ThresholdReport, CliError> {
    let qs: Vec<f64> = if config.scenario == Scenario::Direct { config.q[..1].to_vec() } else { config.q.clone() };
    let mut per_q = Vec::new();
    for &q in &qs {
        let found = search(config, &[q])?;
        per_q.push(FixedQThreshold {
            q: (config.scenario != Scenario::Direct).then_some(q),
            threshold: found.as_ref().ok().copied(),
            note: found.err(),
        });
    }
    let optimized_q = if qs.len() > 1 { search(config, &qs)?.ok() } else { None };
    if per_q.iter().all(|t| t.threshold.is_none()) && optimized_q.is_none() {
        let notes: Vec<String> = per_q.iter().filter_map(|t| t.note.clone()).collect();
        return Err(CliError::Compute(format!("no threshold in range: {}", notes.join("; "))));
    }
    Ok(ThresholdReport {
        scenario: config.scenario.to_string(),
        parties: config.parties,
        parameter: "eta_e",
        range: config.threshold_range,
        resolution: SearchOptions::threshold().resolution,
        per_q,
        optimized_q,
    })
}
