use num_complex::Complex64;

use super::interferometer::{interferometer_unitary, pair_coefficient, ClickPattern, StationPovm};
use super::params::SourcePort;
use super::{HeraldBranch, InterferometerHerald};
use crate::error::{check_unit_interval, Error, Result};
use crate::quantum::{ModeLabel, ModeRegistry, StateVector, TensorProduct};

/// `√q|10⟩ + √(1−q)|01⟩` over the kept mode `X` and the sent mode `X'`.
pub fn source_state(q: f64) -> Result<StateVector> {
    check_unit_interval("q", q)?;
    let reg = ModeRegistry::new([("X", 1), ("X'", 1)])?;
    let (kept, sent) = (q.sqrt(), (1.0 - q).sqrt());
    StateVector::from_terms(
        reg,
        &[(Complex64::new(kept, 0.0), &[1, 0]), (Complex64::new(sent, 0.0), &[0, 1])],
    )
}

/// Unnormalized conditional states of one source over its kept mode `X`,
/// channel environment `E` and local-loss environment `F`: `S` when the
/// sent photon reached the station, `V` when the station saw vacuum.
pub fn local_branch_states(q: f64, eta: f64, eta_e: f64) -> Result<(StateVector, StateVector)> {
    check_unit_interval("q", q)?;
    check_unit_interval("eta", eta)?;
    check_unit_interval("eta_e", eta_e)?;
    let reg = ModeRegistry::new([("X", 1), ("E", 1), ("F", 1)])?;
    let c = |x: f64| Complex64::new(x, 0.0);
    let s = StateVector::from_terms(reg.clone(), &[(c((1.0 - q).sqrt() * eta.sqrt()), &[0, 0, 0])])?;
    let v = StateVector::from_terms(
        reg,
        &[
            (c(q.sqrt() * eta_e.sqrt()), &[1, 0, 0]),
            (c(q.sqrt() * (1.0 - eta_e).sqrt()), &[0, 0, 1]),
            (c((1.0 - q).sqrt() * (1.0 - eta).sqrt()), &[0, 1, 0]),
        ],
    )?;
    Ok((s, v))
}

/// Mode labels `X<tag>`, `E<tag>`, `F<tag>` for an interferometer port.
pub(crate) fn port_modes(tag: &str) -> [ModeLabel; 3] {
    [
        ModeLabel::new(format!("X{tag}")),
        ModeLabel::new(format!("E{tag}")),
        ModeLabel::new(format!("F{tag}")),
    ]
}

/// Heralded branches of one four-port interferometer from the photon
/// bookkeeping: each clicking detector either saw one of the sent photons
/// or fired dark, and silent detectors saw vacuum.
pub fn herald_interferometer(
    ports: &[SourcePort; 4],
    tags: &[&str; 4],
    pattern: &ClickPattern,
    p_dc: f64,
) -> Result<InterferometerHerald> {
    let u = interferometer_unitary(4)?;
    let povm = StationPovm::new(pattern.clone(), p_dc)?;
    let mut locals = Vec::with_capacity(4);
    for (port, tag) in ports.iter().zip(tags) {
        port.validate()?;
        let (s, v) = local_branch_states(port.q, port.eta, port.eta_e)?;
        let labels = port_modes(tag);
        let relabel = |l: &ModeLabel| match l.as_str() {
            "X" => labels[0].clone(),
            "E" => labels[1].clone(),
            _ => labels[2].clone(),
        };
        locals.push((s.relabel(relabel)?, v.relabel(relabel)?));
    }
    let product = |sent: &[usize]| -> Result<StateVector> {
        let pick = |k: usize| if sent.contains(&k) { &locals[k].0 } else { &locals[k].1 };
        let mut out = pick(0).clone();
        for k in 1..4 {
            out = out.tensor(pick(k))?;
        }
        Ok(out)
    };

    let clicked = pattern.clicked();
    let (i, j) = (clicked[0], clicked[1]);
    let mut branches = Vec::with_capacity(4);
    for (weight, occ) in povm.branches() {
        let lit: Vec<usize> = clicked.iter().copied().filter(|&d| occ[d] == 1).collect();
        let state = match lit.len() {
            2 => {
                let mut acc: Option<StateVector> = None;
                for k in 0..4 {
                    for l in (k + 1)..4 {
                        let c = pair_coefficient(&u, i, j, k, l);
                        if c.abs() < 1e-15 {
                            continue;
                        }
                        let term = product(&[k, l])?.scaled(Complex64::new(c, 0.0));
                        acc = Some(match acc {
                            None => term,
                            Some(a) => a.add(&term)?,
                        });
                    }
                }
                acc.ok_or(Error::ZeroProbability)?
            }
            1 => {
                let d = lit[0];
                let mut acc = product(&[0])?.scaled(Complex64::new(u.matrix()[(d, 0)], 0.0));
                for k in 1..4 {
                    acc = acc.add(&product(&[k])?.scaled(Complex64::new(u.matrix()[(d, k)], 0.0)))?;
                }
                acc
            }
            _ => product(&[])?,
        };
        branches.push(HeraldBranch { weight, state });
    }
    let party_modes: Vec<ModeLabel> = tags.iter().map(|t| port_modes(t)[0].clone()).collect();
    InterferometerHerald::from_branches(pattern.clone(), branches, party_modes)
}
