//! Node SDPs of one Scenario-2 point in SDPA sparse format.

use std::path::{Path, PathBuf};

use dicka_core::keyrate::scenario2_export;
use dicka_core::measurements::Displacements;
use dicka_core::sdp::write_sdpa;
use serde::Serialize;

use crate::config::{Scenario, SweepConfig};
use crate::sweep::{protocol_params, rate_at, scenario2_options};
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct ExportManifest {
    pub q: f64,
    pub eta_e: f64,
    pub distance_km: f64,
    pub displacements: Vec<f64>,
    pub p_success: f64,
    pub ec_cost: f64,
    /// The entropy bound is `constant + Σ_i node_scales[i]·(optimum of
    /// files[i])`, in bits.
    pub constant: f64,
    pub node_scales: Vec<f64>,
    pub files: Vec<PathBuf>,
}

/// `<stem>-node<i>.dat-s` next to `out`.
pub fn node_path(out: &Path, node: usize) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "scenario2".into());
    out.with_file_name(format!("{stem}-node{node}.dat-s"))
}

/// Exports the first grid point. Without configured displacements the
/// optimizer picks them first.
pub fn run_export(config: &SweepConfig) -> Result<ExportManifest, CliError> {
    if config.scenario != Scenario::Two {
        return Err(CliError::Config("export-sdp needs scenario 2".into()));
    }
    let s2 = config.scenario2.as_ref().expect("scenario 2 options");
    let (q, eta_e, distance) = (config.q[0], config.eta_e[0], config.distance[0]);
    let displacements = match &s2.displacements {
        Some(d) => d.clone(),
        None => rate_at(config, q, eta_e, distance, None)?.1.expect("scenario 2 reports displacements"),
    };
    let params = protocol_params(config, q, eta_e, distance);
    let disp = Displacements::from_reals(config.parties, &displacements).map_err(|e| CliError::Compute(e.to_string()))?;
    let export = scenario2_export(&params, &disp, &scenario2_options(config, s2))
        .map_err(|e| CliError::Compute(e.to_string()))?
        .ok_or_else(|| CliError::Compute("heralding never succeeds at this point".into()))?;
    let mut files = Vec::new();
    for (i, sdp) in export.sdps.iter().enumerate() {
        let path = node_path(&config.out, i);
        write_sdpa(sdp, &path).map_err(|e| CliError::Compute(format!("{}: {e}", path.display())))?;
        files.push(path);
    }
    let manifest = ExportManifest {
        q,
        eta_e,
        distance_km: distance,
        displacements,
        p_success: export.p_success,
        ec_cost: export.ec_cost,
        constant: export.constant,
        node_scales: export.node_scales,
        files,
    };
    let path = config.out.with_extension("json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Compute(e.to_string()))?;
    std::fs::write(&path, text + "\n").map_err(|e| CliError::Compute(format!("{}: {e}", path.display())))?;
    Ok(manifest)
}
