use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dicka_cli::{run_export, run_sweep, run_threshold, validate_csv, CliError, Grid, Overrides, Scenario, SweepConfig};
use dicka_core::NumericPolicy;

/// Key-rate curves for heralded DI conference key agreement.
///
/// Settings are read from built-in defaults, then the `--config` TOML file,
/// then command-line flags; later sources win. Numeric tolerances can be
/// overridden with DICKA_NUMERIC_POLICY="hermiticity=1e-9,psd_floor=-1e-8".
#[derive(Parser)]
#[command(name = "dicka", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the parameter grid and write CSV plus a JSON summary.
    Sweep(Common),
    /// Bisect the smallest eta_e with a positive rate at L = 0.
    Threshold(Common),
    /// Write the node SDPs of one Scenario-2 point as SDPA files.
    ExportSdp(Common),
    /// Check a configuration and, optionally, re-validate a CSV.
    Validate {
        #[command(flatten)]
        common: Common,
        /// CSV written by `sweep`.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML file with the same keys as the flags (underscored).
    #[arg(long)]
    config: Option<PathBuf>,
    /// 1, 2 or direct.
    #[arg(long)]
    scenario: Option<Scenario>,
    #[arg(long)]
    parties: Option<usize>,
    /// List `a,b,c` or range `start:stop:step`.
    #[arg(long)]
    q: Option<Grid>,
    /// List or range of party detector efficiencies.
    #[arg(long)]
    eta_e: Option<Grid>,
    /// Station detector efficiency.
    #[arg(long)]
    eta_d: Option<f64>,
    /// Dark-count probability (station, and parties unless --pdc-e).
    #[arg(long)]
    pdc: Option<f64>,
    #[arg(long)]
    pdc_e: Option<f64>,
    /// Fiber length per party in km, list or range.
    #[arg(long)]
    distance: Option<Grid>,
    /// Gauss-Radau points (scenario 2).
    #[arg(long)]
    m: Option<usize>,
    /// Relaxation level; 1 uses level 1 plus cross terms (scenario 2).
    #[arg(long)]
    npa_level: Option<usize>,
    /// Comma-separated `A1,B0_1,B1_1,beta_2,...` (scenario 2).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    displacements: Option<Vec<f64>>,
    /// Write node SDPs instead of solving them (scenario 2 sweeps).
    #[arg(long)]
    export_sdp: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<SweepConfig, CliError> {
        let overrides = Overrides {
            scenario: self.scenario,
            parties: self.parties,
            q: self.q.clone(),
            eta_e: self.eta_e.clone(),
            distance: self.distance.clone(),
            eta_d: self.eta_d,
            pdc: self.pdc,
            pdc_e: self.pdc_e,
            m: self.m,
            npa_level: self.npa_level,
            displacements: self.displacements.clone(),
            export_sdp: self.export_sdp.then_some(true),
            out: self.out.clone(),
            seed: self.seed,
        };
        SweepConfig::load(self.config.as_deref(), &overrides)
    }
}

fn json(value: &impl serde::Serialize) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Compute(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let policy = NumericPolicy::from_env().map_err(|e| match e {
        dicka_core::Error::InvalidConfig(m) => CliError::Config(format!("DICKA_NUMERIC_POLICY: {m}")),
        e => CliError::Config(e.to_string()),
    })?;
    log::debug!("numeric policy {policy:?}");
    match cli.command {
        Command::Sweep(common) => {
            let config = common.load()?;
            let summary = run_sweep(&config, &policy)?;
            println!("{}", json(&summary)?);
        }
        Command::Threshold(common) => {
            let report = run_threshold(&common.load()?)?;
            println!("{}", json(&report)?);
        }
        Command::ExportSdp(common) => {
            let manifest = run_export(&common.load()?)?;
            println!("{}", json(&manifest)?);
        }
        Command::Validate { common, csv } => {
            common.load()?;
            if let Some(path) = csv {
                let bad = validate_csv(&path, 1e-12)?;
                for m in &bad {
                    eprintln!("row {}: {}", m.row, m.message);
                }
                if !bad.is_empty() {
                    return Err(CliError::Invalid(format!("{} row(s) in {}", bad.len(), path.display())));
                }
            }
            println!("ok");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
