//! Sweep configuration: built-in defaults, then the TOML file, then
//! command-line flags, each layer overriding the previous one.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Pauli-plane measurements, parity-CHSH bound.
    One,
    /// Displaced photon detection, SDP bound.
    Two,
    /// Locally prepared GHZ state sent through fiber.
    Direct,
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "1" => Ok(Self::One),
            "2" => Ok(Self::Two),
            "direct" => Ok(Self::Direct),
            other => Err(format!("unknown scenario `{other}` (expected 1, 2 or direct)")),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::One => "1",
            Self::Two => "2",
            Self::Direct => "direct",
        })
    }
}

/// A list of values, written `0.6,0.8,0.95` or as an inclusive range
/// `start:stop:step`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("bad number `{t}` in `{s}`"));
        match parts.len() {
            1 => s.split(',').map(num).collect::<Result<Vec<_>, _>>().map(Grid),
            3 => {
                let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
                if !(step > 0.0) || !start.is_finite() || !stop.is_finite() {
                    return Err(format!("range `{s}` needs finite ends and a positive step"));
                }
                if stop < start {
                    return Ok(Grid(Vec::new()));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                Ok(Grid((0..count).map(|k| start + k as f64 * step).collect()))
            }
            _ => Err(format!("expected a list or start:stop:step, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum GridValue {
    One(f64),
    Many(Vec<f64>),
    Text(String),
}

impl GridValue {
    fn into_grid(self) -> Result<Grid, String> {
        match self {
            Self::One(x) => Ok(Grid(vec![x])),
            Self::Many(v) => Ok(Grid(v)),
            Self::Text(s) => s.parse(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ScenarioValue {
    Number(i64),
    Text(String),
}

/// Keys accepted in the configuration file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    scenario: Option<ScenarioValue>,
    parties: Option<usize>,
    q: Option<GridValue>,
    eta_e: Option<GridValue>,
    distance: Option<GridValue>,
    eta_d: Option<f64>,
    pdc: Option<f64>,
    pdc_e: Option<f64>,
    max_distance: Option<f64>,
    threshold_range: Option<[f64; 2]>,
    m: Option<usize>,
    npa_level: Option<usize>,
    alpha_max: Option<f64>,
    search_grid: Option<Vec<f64>>,
    search_samples: Option<usize>,
    search_restarts: Option<usize>,
    search_iterations: Option<u64>,
    displacements: Option<Vec<f64>>,
    export_sdp: Option<bool>,
    out: Option<PathBuf>,
    seed: Option<u64>,
}

/// Values given on the command line; `None` leaves the file value alone.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub scenario: Option<Scenario>,
    pub parties: Option<usize>,
    pub q: Option<Grid>,
    pub eta_e: Option<Grid>,
    pub distance: Option<Grid>,
    pub eta_d: Option<f64>,
    pub pdc: Option<f64>,
    pub pdc_e: Option<f64>,
    pub m: Option<usize>,
    pub npa_level: Option<usize>,
    pub displacements: Option<Vec<f64>>,
    pub export_sdp: Option<bool>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Options that only apply to Scenario 2.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario2Config {
    pub m: usize,
    pub npa_level: usize,
    pub alpha_max: f64,
    /// Per-coordinate values of the coarse starting grid.
    pub search_grid: Vec<f64>,
    pub search_samples: usize,
    pub search_restarts: usize,
    pub search_iterations: u64,
    /// Starting point for the search, or the evaluation point when
    /// exporting.
    pub displacements: Option<Vec<f64>>,
    /// Write the node SDPs instead of solving them.
    pub export_sdp: bool,
}

impl Default for Scenario2Config {
    fn default() -> Self {
        Self {
            m: 4,
            npa_level: 1,
            alpha_max: 2.0,
            search_grid: vec![-0.65, 0.0, 0.65],
            search_samples: 8,
            search_restarts: 3,
            search_iterations: 150,
            displacements: None,
            export_sdp: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub scenario: Scenario,
    pub parties: usize,
    pub q: Vec<f64>,
    pub eta_e: Vec<f64>,
    /// Fiber length from each party to the station, km.
    pub distance: Vec<f64>,
    pub eta_d: f64,
    pub p_dc: f64,
    pub p_dc_e: f64,
    /// Upper end of the max-distance search, km.
    pub max_distance: f64,
    /// Bracket for threshold searches over `η_e`.
    pub threshold_range: [f64; 2],
    /// Present iff the scenario is 2.
    pub scenario2: Option<Scenario2Config>,
    pub out: PathBuf,
    pub seed: u64,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl SweepConfig {
    /// Reads `path` (if any) and applies `overrides` on top.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| invalid(format!("{}: {e}", p.display())))?;
                toml::from_str::<FileConfig>(&text).map_err(|e| invalid(format!("{}: {e}", p.display())))?
            }
            None => FileConfig::default(),
        };
        Self::resolve(file, overrides)
    }

    /// Parses configuration text, as [`SweepConfig::load`] would a file.
    pub fn from_toml(text: &str, overrides: &Overrides) -> Result<Self, CliError> {
        let file = toml::from_str::<FileConfig>(text).map_err(|e| invalid(e.to_string()))?;
        Self::resolve(file, overrides)
    }

    fn resolve(file: FileConfig, o: &Overrides) -> Result<Self, CliError> {
        let scenario = match (o.scenario, file.scenario) {
            (Some(s), _) => s,
            (None, Some(ScenarioValue::Number(n))) => n.to_string().parse().map_err(invalid)?,
            (None, Some(ScenarioValue::Text(s))) => s.parse().map_err(invalid)?,
            (None, None) => Scenario::One,
        };
        let grid = |flag: &Option<Grid>, value: Option<GridValue>, default: &str| -> Result<Vec<f64>, CliError> {
            match (flag, value) {
                (Some(g), _) => Ok(g.0.clone()),
                (None, Some(v)) => v.into_grid().map(|g| g.0).map_err(invalid),
                (None, None) => default.parse::<Grid>().map(|g| g.0).map_err(invalid),
            }
        };
        let p_dc = o.pdc.or(file.pdc).unwrap_or(1e-6);

        let s2_keys = [
            ("m", o.m.is_some() || file.m.is_some()),
            ("npa_level", o.npa_level.is_some() || file.npa_level.is_some()),
            ("alpha_max", file.alpha_max.is_some()),
            ("search_grid", file.search_grid.is_some()),
            ("search_samples", file.search_samples.is_some()),
            ("search_restarts", file.search_restarts.is_some()),
            ("search_iterations", file.search_iterations.is_some()),
            ("displacements", o.displacements.is_some() || file.displacements.is_some()),
            ("export_sdp", o.export_sdp.is_some() || file.export_sdp.is_some()),
        ];
        let scenario2 = if scenario == Scenario::Two {
            let d = Scenario2Config::default();
            Some(Scenario2Config {
                m: o.m.or(file.m).unwrap_or(d.m),
                npa_level: o.npa_level.or(file.npa_level).unwrap_or(d.npa_level),
                alpha_max: file.alpha_max.unwrap_or(d.alpha_max),
                search_grid: file.search_grid.unwrap_or(d.search_grid),
                search_samples: file.search_samples.unwrap_or(d.search_samples),
                search_restarts: file.search_restarts.unwrap_or(d.search_restarts),
                search_iterations: file.search_iterations.unwrap_or(d.search_iterations),
                displacements: o.displacements.clone().or(file.displacements),
                export_sdp: o.export_sdp.or(file.export_sdp).unwrap_or(false),
            })
        } else {
            if let Some((key, _)) = s2_keys.iter().find(|(_, set)| *set) {
                return Err(invalid(format!("`{key}` only applies to scenario 2")));
            }
            None
        };

        let config = Self {
            scenario,
            parties: o.parties.or(file.parties).unwrap_or(4),
            q: grid(&o.q, file.q, "0.95")?,
            eta_e: grid(&o.eta_e, file.eta_e, "0.97")?,
            distance: grid(&o.distance, file.distance, "0:100:5")?,
            eta_d: o.eta_d.or(file.eta_d).unwrap_or(1.0),
            p_dc,
            p_dc_e: o.pdc_e.or(file.pdc_e).unwrap_or(p_dc),
            max_distance: file.max_distance.unwrap_or(300.0),
            threshold_range: file.threshold_range.unwrap_or([0.8, 1.0]),
            scenario2,
            out: o.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("rates.csv")),
            seed: o.seed.or(file.seed).unwrap_or(7),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(invalid(format!("{name} = {v} is outside [0, 1]")))
            }
        };
        match self.scenario {
            Scenario::Direct if self.parties < 3 => return Err(invalid("direct transmission needs at least 3 parties")),
            Scenario::One | Scenario::Two if self.parties != 4 && self.parties != 6 => {
                return Err(invalid(format!("{} parties unsupported (4 or 6)", self.parties)))
            }
            _ => {}
        }
        for (name, grid) in [("q", &self.q), ("eta_e", &self.eta_e), ("distance", &self.distance)] {
            if grid.is_empty() {
                return Err(invalid(format!("{name} range is empty")));
            }
        }
        for &q in &self.q {
            if !(q > 0.0 && q <= 1.0) {
                return Err(invalid(format!("q = {q} is outside (0, 1]")));
            }
        }
        for &e in &self.eta_e {
            unit("eta_e", e)?;
        }
        if let Some(l) = self.distance.iter().find(|l| !(**l >= 0.0) || !l.is_finite()) {
            return Err(invalid(format!("distance {l} km is not a finite non-negative length")));
        }
        unit("eta_d", self.eta_d)?;
        unit("pdc", self.p_dc)?;
        unit("pdc_e", self.p_dc_e)?;
        if !(self.max_distance > 0.0 && self.max_distance.is_finite()) {
            return Err(invalid("max_distance must be positive"));
        }
        let [lo, hi] = self.threshold_range;
        unit("threshold_range", lo)?;
        unit("threshold_range", hi)?;
        if lo >= hi {
            return Err(invalid("threshold_range must be increasing"));
        }
        if let Some(s2) = &self.scenario2 {
            if s2.m < 2 {
                return Err(invalid("m must be at least 2"));
            }
            if s2.npa_level == 0 {
                return Err(invalid("npa_level must be at least 1"));
            }
            if !(s2.alpha_max > 0.0 && s2.alpha_max.is_finite()) {
                return Err(invalid("alpha_max must be positive"));
            }
            if s2.search_grid.iter().any(|v| !(v.abs() <= s2.alpha_max)) {
                return Err(invalid("search_grid values must lie within ±alpha_max"));
            }
            if let Some(d) = &s2.displacements {
                if d.len() != self.parties + 1 {
                    return Err(invalid(format!(
                        "displacements needs {} values (A₁, B₀¹, B₁¹, β₂, …), got {}",
                        self.parties + 1,
                        d.len()
                    )));
                }
                if d.iter().any(|x| !x.is_finite()) {
                    return Err(invalid("displacements must be finite"));
                }
            }
            if s2.export_sdp && s2.displacements.is_none() {
                return Err(invalid("export_sdp needs explicit displacements"));
            }
        }
        Ok(())
    }

    /// The summary JSON sits next to the CSV.
    pub fn summary_path(&self) -> PathBuf {
        self.out.with_extension("json")
    }
}
