use super::closed_form::{port_modes, source_state};
use super::interferometer::{interferometer_network, ClickPattern, StationPovm};
use super::params::SourcePort;
use super::{HeraldBranch, InterferometerHerald};
use crate::error::Result;
use crate::quantum::{ModeLabel, StateVector, TensorProduct};

/// Direct Fock-space simulation of one interferometer: sources, dilated
/// loss channels, the beamsplitter network, then the diagonal click POVM
/// summed over every detector occupation it gives weight to.
pub fn simulate_interferometer(
    ports: &[SourcePort; 4],
    tags: &[&str; 4],
    pattern: &ClickPattern,
    p_dc: f64,
) -> Result<InterferometerHerald> {
    let povm = StationPovm::new(pattern.clone(), p_dc)?;
    let sent: Vec<ModeLabel> = tags.iter().map(|t| ModeLabel::new(format!("S{t}"))).collect();
    let mut joint: Option<StateVector> = None;
    for (k, (port, tag)) in ports.iter().zip(tags).enumerate() {
        port.validate()?;
        let [x, e, f] = port_modes(tag);
        let src = source_state(port.q)?.relabel(|l| {
            if l.as_str() == "X" {
                x.clone()
            } else {
                sent[k].clone()
            }
        })?;
        let lossy = src
            .pure_loss_channel(&sent[k], port.eta, e)?
            .pure_loss_channel(&x, port.eta_e, f)?
            .with_cutoff(&sent[k], 4)?;
        joint = Some(match joint {
            None => lossy,
            Some(j) => j.tensor(&lossy)?,
        });
    }
    let mut state = joint.expect("four ports");
    for (i, j, b) in interferometer_network() {
        state = state.apply_two_mode(&sent[i], &sent[j], &b)?;
    }

    let mut branches = Vec::new();
    for idx in 0..5usize.pow(4) {
        let occ: Vec<usize> = (0..4).map(|d| (idx / 5usize.pow(3 - d as u32)) % 5).collect();
        let weight = povm.weight(&occ);
        if weight == 0.0 {
            continue;
        }
        let psi = state.project(&sent, &occ)?;
        branches.push(HeraldBranch { weight, state: psi });
    }
    let party_modes: Vec<ModeLabel> = tags.iter().map(|t| port_modes(t)[0].clone()).collect();
    InterferometerHerald::from_branches(pattern.clone(), branches, party_modes)
}
