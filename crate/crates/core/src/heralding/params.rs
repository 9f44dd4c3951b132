use crate::error::{check_unit_interval, Error, Result};

/// Channel transmissivity for a fiber of `distance_km` at 0.2 dB/km.
pub fn transmissivity_from_distance(distance_km: f64) -> f64 {
    10f64.powf(-0.02 * distance_km)
}

/// Physical parameters of one protocol configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    /// Number of parties (even, 4 or 6).
    pub parties: usize,
    /// Probability that a party keeps its photon in the source state.
    pub q: f64,
    /// Transmissivity of each party's channel to the central station.
    pub eta: f64,
    /// Efficiency of the station detectors.
    pub eta_d: f64,
    /// Efficiency of the parties' detectors.
    pub eta_e: f64,
    /// Dark-count probability of the station detectors.
    pub p_dc: f64,
    /// Dark-count probability of the parties' detectors.
    pub p_dc_e: f64,
}

impl ProtocolParams {
    /// Parameters at `distance_km` with ideal station detectors and equal
    /// dark-count probabilities at the station and at the parties.
    pub fn at_distance(parties: usize, q: f64, distance_km: f64, eta_e: f64, p_dc: f64) -> Self {
        Self {
            parties,
            q,
            eta: transmissivity_from_distance(distance_km),
            eta_d: 1.0,
            eta_e,
            p_dc,
            p_dc_e: p_dc,
        }
    }

    /// Lossless, noiseless devices.
    pub fn ideal(parties: usize, q: f64) -> Self {
        Self::at_distance(parties, q, 0.0, 1.0, 0.0)
    }

    pub fn with_distance(mut self, distance_km: f64) -> Self {
        self.eta = transmissivity_from_distance(distance_km);
        self
    }

    pub fn with_eta_e(mut self, eta_e: f64) -> Self {
        self.eta_e = eta_e;
        self
    }

    pub fn with_q(mut self, q: f64) -> Self {
        self.q = q;
        self
    }

    /// Effective transmission from a party's source to the station
    /// detectors (`η·η_d`).
    pub fn station_transmission(&self) -> f64 {
        self.eta * self.eta_d
    }

    pub fn validate(&self) -> Result<()> {
        if self.parties < 4 || self.parties % 2 != 0 {
            return Err(Error::UnsupportedParties(self.parties));
        }
        check_unit_interval("q", self.q)?;
        check_unit_interval("eta", self.eta)?;
        check_unit_interval("eta_d", self.eta_d)?;
        check_unit_interval("eta_e", self.eta_e)?;
        check_unit_interval("p_dc", self.p_dc)?;
        check_unit_interval("p_dc_e", self.p_dc_e)?;
        Ok(())
    }
}

/// One input port of a four-mode interferometer: a single-photon source
/// whose sent mode reaches the station with transmissivity `eta` and whose
/// kept mode is detected with efficiency `eta_e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourcePort {
    pub q: f64,
    pub eta: f64,
    pub eta_e: f64,
}

impl SourcePort {
    pub fn party(params: &ProtocolParams) -> Self {
        Self {
            q: params.q,
            eta: params.station_transmission(),
            eta_e: params.eta_e,
        }
    }

    /// Auxiliary source co-located with the station: no fiber, ideal local
    /// detection of the kept mode (it is consumed by the Bell projection).
    pub fn auxiliary(params: &ProtocolParams) -> Self {
        Self {
            q: params.q,
            eta: params.eta_d,
            eta_e: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_unit_interval("q", self.q)?;
        check_unit_interval("eta", self.eta)?;
        check_unit_interval("eta_e", self.eta_e)
    }
}
