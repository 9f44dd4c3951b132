//! Grid evaluation, CSV rows and the summary file.

use std::path::{Path, PathBuf};

use dicka_core::heralding::{heralded_ensemble, transmissivity_from_distance, HeraldingOptions, ProtocolParams};
use dicka_core::keyrate::{
    direct_transmission_rate, max_secure_distance, optimize_displacements, scenario1_pipeline, scenario2_export,
    scenario2_pipeline, DisplacementSearch, KeyRateReport, Scenario2Options, SearchOptions,
};
use dicka_core::measurements::Displacements;
use dicka_core::npa::Relaxation;
use dicka_core::sdp::write_sdpa;
use dicka_core::NumericPolicy;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Scenario, Scenario2Config, SweepConfig};
use crate::CliError;

pub const SCHEMA: &str = "dicka-curve/1";

pub const CSV_HEADER: [&str; 18] = [
    "scenario",
    "parties",
    "q",
    "eta_e",
    "eta_d",
    "p_dc",
    "p_dc_e",
    "distance (km)",
    "transmissivity",
    "p_success (per round)",
    "p_win",
    "entropy_bound (bits)",
    "ec_cost (bits)",
    "raw_rate (bits/round)",
    "key_rate (bits/round)",
    "provenance",
    "status",
    "displacements",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// Only the node SDPs were written.
    Exported,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::Exported => "exported",
        }
    }
}

/// One sweep point with everything needed to reproduce its rate.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub scenario: Scenario,
    pub parties: usize,
    /// Not used by direct transmission.
    pub q: Option<f64>,
    pub eta_e: f64,
    pub eta_d: f64,
    pub p_dc: f64,
    pub p_dc_e: f64,
    pub distance: f64,
    pub p_success: f64,
    pub p_win: Option<f64>,
    /// Missing for exported rows.
    pub entropy_bound: Option<f64>,
    pub ec_cost: f64,
    pub raw_rate: Option<f64>,
    pub provenance: String,
    pub status: Status,
    pub displacements: Option<Vec<f64>>,
    pub export: Option<ExportedPoint>,
}

impl CurvePoint {
    pub fn key_rate(&self) -> Option<f64> {
        self.raw_rate.map(|r| r.max(0.0))
    }

    pub fn transmissivity(&self) -> f64 {
        transmissivity_from_distance(self.distance)
    }

    pub fn csv_record(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(fmt_float).unwrap_or_default();
        vec![
            self.scenario.to_string(),
            self.parties.to_string(),
            opt(self.q),
            fmt_float(self.eta_e),
            fmt_float(self.eta_d),
            fmt_float(self.p_dc),
            fmt_float(self.p_dc_e),
            fmt_float(self.distance),
            fmt_float(self.transmissivity()),
            fmt_float(self.p_success),
            opt(self.p_win),
            opt(self.entropy_bound),
            fmt_float(self.ec_cost),
            opt(self.raw_rate),
            opt(self.key_rate()),
            self.provenance.clone(),
            self.status.as_str().to_string(),
            self.displacements
                .as_ref()
                .map(|d| d.iter().map(|x| fmt_float(*x)).collect::<Vec<_>>().join(";"))
                .unwrap_or_default(),
        ]
    }
}

/// Seventeen significant digits, enough to read back the same `f64`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn compute(e: impl std::fmt::Display, what: &str) -> CliError {
    CliError::Compute(format!("{what}: {e}"))
}

pub fn protocol_params(config: &SweepConfig, q: f64, eta_e: f64, distance: f64) -> ProtocolParams {
    ProtocolParams {
        parties: config.parties,
        q,
        eta: transmissivity_from_distance(distance),
        eta_d: config.eta_d,
        eta_e,
        p_dc: config.p_dc,
        p_dc_e: config.p_dc_e,
    }
}

pub fn scenario2_options(config: &SweepConfig, s2: &Scenario2Config) -> Scenario2Options {
    let relaxation = if s2.npa_level == 1 { Relaxation::default_for(config.parties) } else { Relaxation::level(s2.npa_level) };
    Scenario2Options { m: s2.m, relaxation: Some(relaxation), ..Default::default() }
}

pub fn displacement_search(config: &SweepConfig, s2: &Scenario2Config) -> DisplacementSearch {
    DisplacementSearch {
        alpha_max: s2.alpha_max,
        grid_levels: s2.search_grid.clone(),
        samples: s2.search_samples,
        restarts: s2.search_restarts,
        max_iterations: s2.search_iterations,
        seed: config.seed,
        initial: s2.displacements.iter().cloned().collect(),
        ..Default::default()
    }
}

/// Rate at one point; Scenario 2 optimizes the displacements unless
/// `fixed` is given.
pub fn rate_at(
    config: &SweepConfig,
    q: f64,
    eta_e: f64,
    distance: f64,
    fixed: Option<&[f64]>,
) -> Result<(KeyRateReport, Option<Vec<f64>>), CliError> {
    let params = protocol_params(config, q, eta_e, distance);
    let what = format!("scenario {} at q={q}, eta_e={eta_e}, L={distance} km", config.scenario);
    match config.scenario {
        Scenario::One => Ok((scenario1_pipeline(&params, &HeraldingOptions::default()).map_err(|e| compute(e, &what))?, None)),
        Scenario::Direct => Ok((
            direct_transmission_rate(config.parties, distance, eta_e, config.p_dc).map_err(|e| compute(e, &what))?,
            None,
        )),
        Scenario::Two => {
            let s2 = config.scenario2.as_ref().expect("scenario 2 options");
            let opts = scenario2_options(config, s2);
            match fixed {
                Some(d) => {
                    let disp = Displacements::from_reals(config.parties, d).map_err(|e| compute(e, &what))?;
                    let report = scenario2_pipeline(&params, &disp, &opts).map_err(|e| compute(e, &what))?;
                    Ok((report, Some(d.to_vec())))
                }
                None => {
                    let best = optimize_displacements(&params, &opts, &displacement_search(config, s2))
                        .map_err(|e| compute(e, &what))?;
                    Ok((best.report, Some(best.displacements.to_reals())))
                }
            }
        }
    }
}

/// Checks the heralded state against the numeric policy.
fn check_state(config: &SweepConfig, params: &ProtocolParams, policy: &NumericPolicy, what: &str) -> Result<(), CliError> {
    if config.scenario == Scenario::Direct {
        return Ok(());
    }
    let ensemble = heralded_ensemble(params, &HeraldingOptions::default()).map_err(|e| compute(e, what))?;
    if let Ok(rho) = ensemble.rho_x() {
        if !rho.is_valid(policy) {
            return Err(CliError::Compute(format!("{what}: heralded state fails the numeric policy {policy:?}")));
        }
    }
    Ok(())
}

fn evaluate(config: &SweepConfig, index: usize, q: f64, eta_e: f64, distance: f64, policy: &NumericPolicy) -> Result<CurvePoint, CliError> {
    let params = protocol_params(config, q, eta_e, distance);
    let what = format!("point {index} (q={q}, eta_e={eta_e}, L={distance} km)");
    check_state(config, &params, policy, &what)?;
    let mut point = CurvePoint {
        scenario: config.scenario,
        parties: config.parties,
        q: (config.scenario != Scenario::Direct).then_some(q),
        eta_e,
        eta_d: config.eta_d,
        p_dc: config.p_dc,
        p_dc_e: if config.scenario == Scenario::Direct { config.p_dc } else { config.p_dc_e },
        distance,
        p_success: 0.0,
        p_win: None,
        entropy_bound: None,
        ec_cost: 0.0,
        raw_rate: None,
        provenance: String::new(),
        status: Status::Ok,
        displacements: None,
        export: None,
    };
    if let Some(s2) = config.scenario2.as_ref().filter(|s| s.export_sdp) {
        let d = s2.displacements.clone().expect("validated");
        let disp = Displacements::from_reals(config.parties, &d).map_err(|e| compute(e, &what))?;
        let export = scenario2_export(&params, &disp, &scenario2_options(config, s2)).map_err(|e| compute(e, &what))?;
        point.status = Status::Exported;
        point.provenance = "BFF-SDP".into();
        point.displacements = Some(d);
        if let Some(export) = export {
            point.p_success = export.p_success;
            point.ec_cost = export.ec_cost;
            let dir = sdp_dir(&config.out);
            std::fs::create_dir_all(&dir).map_err(|e| compute(e, &dir.display().to_string()))?;
            let mut files = Vec::new();
            for (i, sdp) in export.sdps.iter().enumerate() {
                let file = dir.join(format!("p{index:04}_node{i}.dat-s"));
                write_sdpa(sdp, &file).map_err(|e| compute(e, &file.display().to_string()))?;
                files.push(file);
            }
            point.export = Some(ExportedPoint {
                row: index,
                p_success: export.p_success,
                ec_cost: export.ec_cost,
                constant: export.constant,
                node_scales: export.node_scales,
                files,
            });
        } else {
            point.entropy_bound = Some(0.0);
            point.raw_rate = Some(0.0);
            point.status = Status::Ok;
        }
        return Ok(point);
    }
    let (report, displacements) = rate_at(config, q, eta_e, distance, None)?;
    point.p_success = report.p_success;
    point.p_win = report.p_win;
    point.entropy_bound = Some(report.entropy_bound);
    point.ec_cost = report.ec_cost;
    point.raw_rate = Some(report.raw_rate);
    point.provenance = report.provenance.to_string();
    point.displacements = displacements;
    Ok(point)
}

/// Directory for exported SDPs: `<out stem>_sdp` next to the CSV.
pub fn sdp_dir(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "rates".into());
    out.with_file_name(format!("{stem}_sdp"))
}

/// Sweep order: `q` outermost, then `η_e`, then distance.
pub fn sweep_points(config: &SweepConfig) -> Vec<(f64, f64, f64)> {
    let qs: &[f64] = if config.scenario == Scenario::Direct { &config.q[..1] } else { &config.q };
    let mut out = Vec::new();
    for &q in qs {
        for &eta_e in &config.eta_e {
            for &l in &config.distance {
                out.push((q, eta_e, l));
            }
        }
    }
    out
}

/// Evaluates every grid point on the worker pool, in sweep order.
pub fn evaluate_grid(config: &SweepConfig, policy: &NumericPolicy) -> Result<Vec<CurvePoint>, CliError> {
    let points = sweep_points(config);
    points
        .par_iter()
        .enumerate()
        .map(|(i, &(q, eta_e, l))| evaluate(config, i, q, eta_e, l, policy))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveSummary {
    pub q: Option<f64>,
    pub eta_e: f64,
    pub points: usize,
    pub secure_at_origin: Option<bool>,
    /// `null` when the curve was only exported.
    pub max_secure_distance_km: Option<f64>,
    /// Displacements held fixed during the distance search (Scenario 2).
    pub search_displacements: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExportedPoint {
    pub row: usize,
    pub p_success: f64,
    pub ec_cost: f64,
    /// The bound is `constant + Σ_i node_scales[i]·(optimum of file i)`.
    pub constant: f64,
    pub node_scales: Vec<f64>,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub schema: &'static str,
    pub csv: PathBuf,
    pub scenario: String,
    pub parties: usize,
    pub seed: u64,
    pub rows: usize,
    pub curves: Vec<CurveSummary>,
    pub exported: Vec<ExportedPoint>,
}

fn curve_summary(config: &SweepConfig, rows: &[CurvePoint]) -> Result<CurveSummary, CliError> {
    let first = &rows[0];
    let mut summary = CurveSummary {
        q: first.q,
        eta_e: first.eta_e,
        points: rows.len(),
        secure_at_origin: None,
        max_secure_distance_km: None,
        search_displacements: None,
    };
    if rows.iter().any(|r| r.status == Status::Exported) {
        return Ok(summary);
    }
    let q = first.q.unwrap_or(0.0);
    let step = config.distance.windows(2).map(|w| (w[1] - w[0]).abs()).fold(5.0_f64, f64::min);
    let options = SearchOptions { scan_step: step.max(1e-3), ..SearchOptions::distance() };
    let fixed = match config.scenario {
        Scenario::Two => {
            // the best row's displacements stay fixed along the curve
            let best = rows.iter().max_by(|a, b| a.raw_rate.unwrap_or(f64::MIN).total_cmp(&b.raw_rate.unwrap_or(f64::MIN)));
            best.and_then(|r| r.displacements.clone())
        }
        _ => None,
    };
    let d = max_secure_distance(
        |l| Ok(rate_at(config, q, first.eta_e, l, fixed.as_deref()).map(|(r, _)| r.raw_rate).map_err(|e| dicka_core::Error::Solver(e.to_string()))?),
        config.max_distance,
        options,
    )
    .map_err(|e| compute(e, "max secure distance"))?;
    summary.secure_at_origin = Some(d > 0.0);
    summary.max_secure_distance_km = Some(d);
    summary.search_displacements = fixed;
    Ok(summary)
}

pub fn summarize(config: &SweepConfig, rows: &[CurvePoint]) -> Result<Summary, CliError> {
    let per_curve = config.distance.len();
    let curves = rows.chunks(per_curve).map(|c| curve_summary(config, c)).collect::<Result<Vec<_>, _>>()?;
    let exported = rows.iter().filter_map(|r| r.export.clone()).collect();
    Ok(Summary {
        schema: SCHEMA,
        csv: config.out.clone(),
        scenario: config.scenario.to_string(),
        parties: config.parties,
        seed: config.seed,
        rows: rows.len(),
        curves,
        exported,
    })
}

pub fn write_csv(path: &Path, rows: &[CurvePoint]) -> Result<(), CliError> {
    let io = |e: csv::Error| compute(e, &path.display().to_string());
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(CSV_HEADER).map_err(io)?;
    for row in rows {
        w.write_record(row.csv_record()).map_err(io)?;
    }
    w.flush().map_err(|e| compute(e, &path.display().to_string()))
}

/// Runs the grid and writes the CSV and its summary.
pub fn run_sweep(config: &SweepConfig, policy: &NumericPolicy) -> Result<Summary, CliError> {
    let rows = evaluate_grid(config, policy)?;
    write_csv(&config.out, &rows)?;
    let summary = summarize(config, &rows)?;
    let path = config.summary_path();
    let text = serde_json::to_string_pretty(&summary).map_err(|e| compute(e, "summary"))?;
    std::fs::write(&path, text + "\n").map_err(|e| compute(e, &path.display().to_string()))?;
    Ok(summary)
}

/// Mismatch found by [`validate_csv`].
#[derive(Debug, Clone, PartialEq)]
pub struct RowMismatch {
    /// 1-based data row.
    pub row: usize,
    pub message: String,
}

/// Recomputes `raw_rate = p_success·(entropy_bound − ec_cost)` and
/// `key_rate = max(raw_rate, 0)` for every solved row.
pub fn validate_csv(path: &Path, tolerance: f64) -> Result<Vec<RowMismatch>, CliError> {
    let io = |e: csv::Error| compute(e, &path.display().to_string());
    let mut reader = csv::Reader::from_path(path).map_err(io)?;
    let header = reader.headers().map_err(io)?.clone();
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(CliError::Compute(format!("{}: unexpected header", path.display())));
    }
    let col = |name: &str| CSV_HEADER.iter().position(|h| *h == name).expect("known column");
    let (ps, hb, ec, raw, key, status) = (
        col("p_success (per round)"),
        col("entropy_bound (bits)"),
        col("ec_cost (bits)"),
        col("raw_rate (bits/round)"),
        col("key_rate (bits/round)"),
        col("status"),
    );
    let mut bad = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(io)?;
        let row = i + 1;
        if &record[status] == Status::Exported.as_str() {
            continue;
        }
        let num = |c: usize| record[c].parse::<f64>();
        match (num(ps), num(hb), num(ec), num(raw), num(key)) {
            (Ok(ps), Ok(hb), Ok(ec), Ok(raw), Ok(key)) => {
                let expected = ps * (hb - ec);
                if (expected - raw).abs() > tolerance || (expected.max(0.0) - key).abs() > tolerance {
                    bad.push(RowMismatch { row, message: format!("key_rate {key:e} but p_success·(bound − ec) = {expected:e}") });
                }
            }
            _ => bad.push(RowMismatch { row, message: "unparseable number".into() }),
        }
    }
    Ok(bad)
}
