//! Asymptotic conference-key rates `K = P_success (H(A|x*,E) − max_i H(A|B_i))`.

mod scenario2;
mod search;

use std::fmt;

pub use scenario2::{
    optimize_displacements, scenario2_export, scenario2_pipeline, DisplacementSearch, OptimizedDisplacements,
    Scenario2Export, Scenario2Options,
};
pub use search::{find_threshold, max_secure_distance, SearchOptions};

use crate::error::{Error, Result};
use crate::heralding::{heralded_ensemble, HeraldingOptions, ProtocolParams};
use crate::measurements::{behavior, keygen_distribution, standard_ghz, BehaviorTable, OutcomeDistribution, PartyConfig};
use crate::quantum::{binary_entropy, conditional_shannon_entropy};

/// Parity-CHSH winning probability: the round is won when
/// `a ⊕ b₁ = x·(y₁ ⊕ b₂ ⊕ … ⊕ b_{N−1})`, averaged over uniform `x, y₁` with
/// the remaining Bobs at their first input.
pub fn parity_chsh_win(table: &BehaviorTable) -> Result<f64> {
    let n = table.parties();
    if n < 2 || table.inputs()[0] != 2 || table.inputs()[1] != 2 {
        return Err(Error::MalformedBehavior(
            "parity-CHSH needs two inputs for Alice and Bob₁".into(),
        ));
    }
    let mut win = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            let mut inputs = vec![0; n];
            inputs[0] = x;
            inputs[1] = y;
            for o in 0..(1usize << n) {
                let bits: Vec<usize> = (0..n).map(|k| (o >> (n - 1 - k)) & 1).collect();
                let rest = bits[2..].iter().fold(0, |acc, b| acc ^ b);
                if bits[0] ^ bits[1] == x & (y ^ rest) {
                    win += table.prob(&inputs, &bits);
                }
            }
        }
    }
    Ok(win / 4.0)
}

/// `1 − h((1 + √((4P−2)² − 1))/2)`, and 0 without a violation (`P ≤ 3/4`).
pub fn entropy_bound_parity_chsh(p_win: f64) -> f64 {
    if !(p_win > 0.75) {
        return 0.0;
    }
    let s = ((4.0 * p_win - 2.0).powi(2) - 1.0).clamp(0.0, 1.0);
    let arg = ((1.0 + s.sqrt()) / 2.0).clamp(0.0, 1.0);
    1.0 - binary_entropy(arg).expect("argument clamped into [0, 1]")
}

/// Error-correction cost `max_i H(A|B_i)` of a key-round distribution.
pub fn ec_cost(dist: &OutcomeDistribution) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 1..dist.parties() {
        let t = dist.pair_with_alice(k)?;
        worst = worst.max(conditional_shannon_entropy(&t)?);
    }
    Ok(worst)
}

/// Where the entropy bound of a report came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Provenance {
    ParityChsh,
    BffSdp { nodes: usize, level: usize },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ParityChsh => f.write_str("parity-CHSH"),
            Self::BffSdp { .. } => f.write_str("BFF-SDP"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyRateReport {
    pub p_success: f64,
    /// Parity-CHSH winning probability when it was computed.
    pub p_win: Option<f64>,
    /// Lower bound on `H(A|x*,E)` in bits.
    pub entropy_bound: f64,
    /// `max_i H(A|B_i)` in bits.
    pub ec_cost: f64,
    /// `P_success·(entropy_bound − ec_cost)` before flooring.
    pub raw_rate: f64,
    pub provenance: Provenance,
}

impl KeyRateReport {
    /// Bits per protocol round; the protocol aborts rather than produce a
    /// negative rate.
    pub fn key_rate(&self) -> f64 {
        self.raw_rate.max(0.0)
    }

    pub fn is_secure(&self) -> bool {
        self.raw_rate > 0.0
    }
}

pub fn key_rate(p_success: f64, entropy_bound: f64, ec: f64, provenance: Provenance) -> KeyRateReport {
    KeyRateReport {
        p_success,
        p_win: None,
        entropy_bound,
        ec_cost: ec,
        raw_rate: p_success * (entropy_bound - ec),
        provenance,
    }
}

/// Rate of the protocol with Pauli-plane measurements.
pub fn scenario1_pipeline(params: &ProtocolParams, options: &HeraldingOptions) -> Result<KeyRateReport> {
    let ensemble = heralded_ensemble(params, options)?;
    if ensemble.success_probability <= 0.0 {
        return Ok(key_rate(0.0, 0.0, 0.0, Provenance::ParityChsh));
    }
    let rho = ensemble.rho_x()?;
    let config = PartyConfig::scenario1(params.parties, params.p_dc_e);
    parity_chsh_report(ensemble.success_probability, &behavior(rho, &config)?, &keygen_distribution(rho, &config)?)
}

fn parity_chsh_report(p_success: f64, table: &BehaviorTable, key: &OutcomeDistribution) -> Result<KeyRateReport> {
    let p_win = parity_chsh_win(table)?;
    let mut report = key_rate(p_success, entropy_bound_parity_chsh(p_win), ec_cost(key)?, Provenance::ParityChsh);
    report.p_win = Some(p_win);
    Ok(report)
}

/// Baseline: a GHZ state prepared locally and sent to every party through
/// `distance_km` of fiber, each party detecting with efficiency `eta_det`.
pub fn direct_transmission_rate(parties: usize, distance_km: f64, eta_det: f64, p_dc: f64) -> Result<KeyRateReport> {
    crate::error::check_unit_interval("eta_det", eta_det)?;
    crate::error::check_unit_interval("p_dc", p_dc)?;
    if parties < 3 {
        return Err(Error::UnsupportedParties(parties));
    }
    let eta_eff = eta_det * crate::heralding::transmissivity_from_distance(distance_km);
    let rho = standard_ghz(parties)?;
    let config = PartyConfig::direct(parties, eta_eff, p_dc);
    parity_chsh_report(1.0, &behavior(&rho, &config)?, &keygen_distribution(&rho, &config)?)
}
