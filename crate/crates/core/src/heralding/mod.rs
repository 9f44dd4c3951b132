//! Heralded GHZ distribution through a central linear-optical station.
//!
//! Each party holds a single-photon source in the superposition
//! `√q|10⟩ + √(1−q)|01⟩`, sends one mode through a lossy fiber into a
//! four-mode interferometer and keeps the other. Two clicks at the station
//! herald a four-party GHZ state. Six parties use two interferometers joined
//! by a Bell projection on two auxiliary sources placed at the station.
//!
//! Two independent routes compute the heralded ensemble: the branch
//! calculus in [`herald_interferometer`] and a full Fock-space simulation in
//! [`simulate_interferometer`]. [`heralded_ensemble`] and
//! [`brute_force_herald`] wrap them for a whole protocol.

mod brute_force;
mod closed_form;
mod interferometer;
mod params;

use num_complex::Complex64;

pub use brute_force::simulate_interferometer;
pub use closed_form::{herald_interferometer, local_branch_states, source_state};
pub use interferometer::{
    interferometer_network, interferometer_unitary, ClickPattern, ModeTransform, StationPovm,
};
pub use params::{transmissivity_from_distance, ProtocolParams, SourcePort};

use crate::error::{Error, Result};
use crate::quantum::{DensityOperator, ModeLabel, ModeRegistry, StateVector, TensorProduct};

/// One dark-count branch: POVM weight and unnormalized pure state over the
/// kept and environment modes of every port.
#[derive(Debug, Clone, PartialEq)]
pub struct HeraldBranch {
    pub weight: f64,
    pub state: StateVector,
}

/// Outcome of a single interferometer for one click pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferometerHerald {
    pub pattern: ClickPattern,
    pub branches: Vec<HeraldBranch>,
    /// Probability of the click pattern.
    pub click_probability: f64,
    /// Kept modes of the four ports, in port order.
    pub party_modes: Vec<ModeLabel>,
    /// `Σ_k P_k Tr_EF |φᵏ⟩⟨φᵏ|`, trace equal to `click_probability`.
    pub rho_unnormalized: DensityOperator,
}

impl InterferometerHerald {
    pub(crate) fn from_branches(
        pattern: ClickPattern,
        branches: Vec<HeraldBranch>,
        party_modes: Vec<ModeLabel>,
    ) -> Result<Self> {
        let mut rho: Option<DensityOperator> = None;
        for b in &branches {
            let r = b.state.reduced_density(&party_modes)?.scaled(b.weight);
            rho = Some(match rho {
                None => r,
                Some(acc) => acc.add(&r)?,
            });
        }
        let rho = rho.ok_or(Error::ZeroProbability)?;
        let click_probability = branches.iter().map(|b| b.weight * b.state.norm_squared()).sum();
        Ok(Self {
            pattern,
            branches,
            click_probability,
            party_modes,
            rho_unnormalized: rho,
        })
    }
}

/// Target state of the Bell projection joining two interferometers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BellState {
    /// `(|01⟩ − |10⟩)/√2`
    #[default]
    PsiMinus,
    /// `(|01⟩ + |10⟩)/√2`
    PsiPlus,
    /// `(|00⟩ + |11⟩)/√2`
    PhiPlus,
    /// `(|00⟩ − |11⟩)/√2`
    PhiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [Self::PsiMinus, Self::PsiPlus, Self::PhiPlus, Self::PhiMinus];

    pub fn state(&self, a: &ModeLabel, b: &ModeLabel) -> Result<StateVector> {
        let reg = ModeRegistry::new([(a.clone(), 1), (b.clone(), 1)])?;
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let (first, second): (&[usize], &[usize]) = match self {
            Self::PsiMinus | Self::PsiPlus => (&[0, 1], &[1, 0]),
            Self::PhiPlus | Self::PhiMinus => (&[0, 0], &[1, 1]),
        };
        let sign = match self {
            Self::PsiMinus | Self::PhiMinus => -h,
            _ => h,
        };
        StateVector::from_terms(reg, &[(h, first), (sign, second)])
    }
}

impl std::str::FromStr for BellState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "psi-" | "psi_minus" | "psiminus" => Ok(Self::PsiMinus),
            "psi+" | "psi_plus" | "psiplus" => Ok(Self::PsiPlus),
            "phi+" | "phi_plus" | "phiplus" => Ok(Self::PhiPlus),
            "phi-" | "phi_minus" | "phiminus" => Ok(Self::PhiMinus),
            other => Err(Error::InvalidConfig(format!("unknown Bell state `{other}`"))),
        }
    }
}

/// How the Bell projection enters the success probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BellSuccess {
    /// Only the configured Bell outcome is accepted.
    #[default]
    SingleOutcome,
    /// Every Bell outcome is accepted and corrected locally, so the factor is
    /// the total weight of the auxiliary qubit subspace.
    AllOutcomes,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct HeraldingOptions {
    /// Accepted click pattern, used on every interferometer.
    pub pattern: ClickPattern,
    pub bell_state: BellState,
    pub bell_success: BellSuccess,
    /// Count all six two-click patterns of each interferometer as successes.
    pub all_click_patterns: bool,
}

/// Heralded state of the parties and its success probability.
#[derive(Debug, Clone, PartialEq)]
pub struct HeraldedEnsemble {
    pub parties: usize,
    /// One entry per interferometer, for the accepted pattern.
    pub interferometers: Vec<InterferometerHerald>,
    /// Probability of the Bell projection given both heralds (six parties).
    pub bell_probability: Option<f64>,
    pub success_probability: f64,
    rho_x: Option<DensityOperator>,
}

impl HeraldedEnsemble {
    /// Normalized state of the party qubits `X1..XN`.
    pub fn rho_x(&self) -> Result<&DensityOperator> {
        self.rho_x.as_ref().ok_or(Error::ZeroProbability)
    }

    /// Dark-count branches of the first interferometer.
    pub fn branches(&self) -> &[HeraldBranch] {
        &self.interferometers[0].branches
    }

    pub fn party_modes(&self) -> Vec<ModeLabel> {
        (1..=self.parties).map(|k| ModeLabel::new(format!("X{k}"))).collect()
    }
}

type InterferometerFn = fn(&[SourcePort; 4], &[&str; 4], &ClickPattern, f64) -> Result<InterferometerHerald>;

const N4_TAGS: [&str; 4] = ["1", "2", "3", "4"];
const N6_TAGS: [[&str; 4]; 2] = [["1", "2", "3", "a"], ["b", "4", "5", "6"]];

/// Heralded ensemble from the branch calculus.
pub fn heralded_ensemble(params: &ProtocolParams, options: &HeraldingOptions) -> Result<HeraldedEnsemble> {
    assemble(params, options, herald_interferometer)
}

/// Heralded ensemble from the explicit Fock-space simulation. Much slower
/// than [`heralded_ensemble`], which it exists to cross-check.
pub fn brute_force_herald(params: &ProtocolParams, options: &HeraldingOptions) -> Result<HeraldedEnsemble> {
    assemble(params, options, simulate_interferometer)
}

/// Six-party ensemble: two interferometers, each fed three parties and one
/// auxiliary source, joined by projecting the auxiliary kept modes onto
/// `options.bell_state`.
pub fn compose_n6(params: &ProtocolParams, options: &HeraldingOptions) -> Result<HeraldedEnsemble> {
    if params.parties != 6 {
        return Err(Error::UnsupportedParties(params.parties));
    }
    heralded_ensemble(params, options)
}

fn assemble(params: &ProtocolParams, options: &HeraldingOptions, run: InterferometerFn) -> Result<HeraldedEnsemble> {
    params.validate()?;
    let party = SourcePort::party(params);
    let pattern_factor = |ports: &[SourcePort; 4], tags: &[&str; 4], accepted: &InterferometerHerald| -> Result<f64> {
        if !options.all_click_patterns {
            return Ok(accepted.click_probability);
        }
        let mut total = 0.0;
        for p in ClickPattern::all() {
            total += if p == accepted.pattern {
                accepted.click_probability
            } else {
                run(ports, tags, &p, params.p_dc)?.click_probability
            };
        }
        Ok(total)
    };

    match params.parties {
        4 => {
            let ports = [party; 4];
            let herald = run(&ports, &N4_TAGS, &options.pattern, params.p_dc)?;
            let success_probability = pattern_factor(&ports, &N4_TAGS, &herald)?;
            let rho_x = normalize(&herald.rho_unnormalized)?;
            Ok(HeraldedEnsemble {
                parties: 4,
                interferometers: vec![herald],
                bell_probability: None,
                success_probability,
                rho_x,
            })
        }
        6 => {
            let aux = SourcePort::auxiliary(params);
            let layouts = [[party, party, party, aux], [aux, party, party, party]];
            let mut heralds = Vec::with_capacity(2);
            let mut success_probability = 1.0;
            for (ports, tags) in layouts.iter().zip(&N6_TAGS) {
                let h = run(ports, tags, &options.pattern, params.p_dc)?;
                success_probability *= pattern_factor(ports, tags, &h)?;
                heralds.push(h);
            }
            let (pa, pb) = (heralds[0].click_probability, heralds[1].click_probability);
            let joint = if pa > 0.0 && pb > 0.0 {
                let a = heralds[0].rho_unnormalized.scaled(1.0 / pa);
                let b = heralds[1].rho_unnormalized.scaled(1.0 / pb);
                Some(a.tensor(&b)?)
            } else {
                None
            };
            let (xa, xb) = (ModeLabel::new("Xa"), ModeLabel::new("Xb"));
            let (bell_probability, rho_x) = match joint {
                Some(joint) => {
                    let projected = joint.project_onto(&options.bell_state.state(&xa, &xb)?)?;
                    let p_bell = projected.trace();
                    let factor = match options.bell_success {
                        BellSuccess::SingleOutcome => p_bell,
                        BellSuccess::AllOutcomes => {
                            let mut total = 0.0;
                            for b in BellState::ALL {
                                total += joint.project_onto(&b.state(&xa, &xb)?)?.trace();
                            }
                            total
                        }
                    };
                    success_probability *= factor;
                    (Some(p_bell), normalize(&projected)?)
                }
                None => {
                    success_probability = 0.0;
                    (None, None)
                }
            };
            Ok(HeraldedEnsemble {
                parties: 6,
                interferometers: heralds,
                bell_probability,
                success_probability,
                rho_x,
            })
        }
        n => Err(Error::UnsupportedParties(n)),
    }
}

fn normalize(rho: &DensityOperator) -> Result<Option<DensityOperator>> {
    if rho.trace() <= 0.0 {
        Ok(None)
    } else {
        rho.normalized().map(Some)
    }
}

/// `(|0101…⟩ − |1010…⟩)/√2` on `X1..XN`, the state heralded by the default
/// pattern in the lossless limit.
pub fn alternating_ghz(parties: usize) -> Result<StateVector> {
    let reg = ModeRegistry::new((1..=parties).map(|k| (format!("X{k}"), 1)))?;
    let even: Vec<usize> = (0..parties).map(|k| k % 2).collect();
    let odd: Vec<usize> = (0..parties).map(|k| 1 - k % 2).collect();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    StateVector::from_terms(reg, &[(Complex64::new(h, 0.0), &even), (Complex64::new(-h, 0.0), &odd)])
}
