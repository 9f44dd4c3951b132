use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use super::{ec_cost, key_rate, KeyRateReport, Provenance};
use crate::bff::{bff_entropy_bound, build_bff_problem, gauss_radau, BffProblem, DEFAULT_EQUALITY_SLACK};
use crate::error::{Error, Result};
use crate::heralding::{heralded_ensemble, HeraldingOptions, ProtocolParams};
use crate::measurements::{behavior, keygen_distribution, Displacements, PartyConfig};
use crate::npa::{relax, Field, Relaxation};
use crate::sdp::{SdpProblem, SolverOptions};

/// Settings of the SDP entropy bound used for displaced measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario2Options {
    /// Gauss-Radau points.
    pub m: usize,
    /// Monomial set; `None` picks [`Relaxation::default_for`].
    pub relaxation: Option<Relaxation>,
    pub field: Field,
    pub solver: SolverOptions,
    pub equality_slack: f64,
    pub heralding: HeraldingOptions,
}

impl Default for Scenario2Options {
    fn default() -> Self {
        Self {
            m: 4,
            relaxation: None,
            field: Field::Real,
            solver: SolverOptions::default(),
            equality_slack: DEFAULT_EQUALITY_SLACK,
            heralding: HeraldingOptions::default(),
        }
    }
}

impl Scenario2Options {
    pub fn relaxation_for(&self, parties: usize) -> Relaxation {
        self.relaxation.clone().unwrap_or_else(|| Relaxation::default_for(parties))
    }
}

struct Scenario2Data {
    p_success: f64,
    ec: f64,
    problem: BffProblem,
}

fn scenario2_data(
    params: &ProtocolParams,
    displacements: &Displacements,
    opts: &Scenario2Options,
) -> Result<Option<Scenario2Data>> {
    if displacements.parties() != params.parties {
        return Err(Error::DimensionMismatch { expected: params.parties, found: displacements.parties() });
    }
    let ensemble = heralded_ensemble(params, &opts.heralding)?;
    if ensemble.success_probability <= 0.0 {
        return Ok(None);
    }
    let rho = ensemble.rho_x()?;
    let config = PartyConfig::scenario2(displacements, params.p_dc_e);
    let table = behavior(rho, &config)?;
    let ec = ec_cost(&keygen_distribution(rho, &config)?)?;
    let rule = gauss_radau(opts.m)?;
    let problem = build_bff_problem(&table, &rule, 0)?.with_equality_slack(opts.equality_slack);
    Ok(Some(Scenario2Data { p_success: ensemble.success_probability, ec, problem }))
}

/// Key rate with displaced-vacuum measurements; Alice's key and first Bell
/// setting are undisplaced.
pub fn scenario2_pipeline(
    params: &ProtocolParams,
    displacements: &Displacements,
    opts: &Scenario2Options,
) -> Result<KeyRateReport> {
    let relaxation = opts.relaxation_for(params.parties);
    let provenance = Provenance::BffSdp { nodes: opts.m, level: relaxation.level };
    let Some(data) = scenario2_data(params, displacements, opts)? else {
        return Ok(key_rate(0.0, 0.0, 0.0, provenance));
    };
    let bound = bff_entropy_bound(&data.problem, &relaxation, opts.field, &opts.solver)
        .map_err(|e| Error::Solver(format!("{e} (displacements {:?})", displacements.to_reals())))?;
    Ok(key_rate(data.p_success, bound.bits, data.ec, provenance))
}

/// Node SDPs of a Scenario-2 point, for solving elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario2Export {
    pub p_success: f64,
    pub ec_cost: f64,
    /// `c_m`; the entropy bound is `c_m + Σ_i node_scales[i]·v_i` with `v_i`
    /// the optimum of `sdps[i]`.
    pub constant: f64,
    pub node_scales: Vec<f64>,
    pub sdps: Vec<SdpProblem>,
}

/// `None` when the heralding never succeeds.
pub fn scenario2_export(
    params: &ProtocolParams,
    displacements: &Displacements,
    opts: &Scenario2Options,
) -> Result<Option<Scenario2Export>> {
    let relaxation = opts.relaxation_for(params.parties);
    let Some(data) = scenario2_data(params, displacements, opts)? else {
        return Ok(None);
    };
    let rule = &data.problem.rule;
    let sdps = data
        .problem
        .nodes
        .iter()
        .map(|node| relax(node, &relaxation, opts.field).map(|r| r.sdp))
        .collect::<Result<Vec<_>>>()?;
    Ok(Some(Scenario2Export {
        p_success: data.p_success,
        ec_cost: data.ec,
        constant: rule.c_m,
        node_scales: (0..sdps.len()).map(|i| rule.node_scale(i)).collect(),
        sdps,
    }))
}

/// Derivative-free search over real displacements.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementSearch {
    /// Box `|α| ≤ alpha_max` on every displacement.
    pub alpha_max: f64,
    /// Values tried for every coordinate in the coarse grid; empty skips
    /// the grid.
    pub grid_levels: Vec<f64>,
    /// Random points scored after the grid.
    pub samples: usize,
    /// Local searches started from the best points.
    pub restarts: usize,
    pub max_iterations: u64,
    /// Initial simplex edge.
    pub step: f64,
    pub seed: u64,
    /// Starting points scored ahead of the grid.
    pub initial: Vec<Vec<f64>>,
}

impl Default for DisplacementSearch {
    fn default() -> Self {
        Self {
            alpha_max: 2.0,
            grid_levels: vec![-0.65, 0.0, 0.65],
            samples: 8,
            restarts: 3,
            max_iterations: 150,
            step: 0.15,
            seed: 7,
            initial: Vec::new(),
        }
    }
}

/// Best point found by [`optimize_displacements`].
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizedDisplacements {
    pub displacements: Displacements,
    pub report: KeyRateReport,
    pub evaluations: usize,
}

struct RateObjective<'a> {
    params: &'a ProtocolParams,
    opts: &'a Scenario2Options,
    alpha_max: f64,
    evaluations: std::cell::Cell<usize>,
}

impl RateObjective<'_> {
    /// Unfloored rate minus the distance outside the box; a failed solve
    /// scores as `−∞`.
    fn rate(&self, v: &[f64]) -> f64 {
        self.evaluations.set(self.evaluations.get() + 1);
        let clipped: Vec<f64> = v.iter().map(|x| x.clamp(-self.alpha_max, self.alpha_max)).collect();
        let overshoot: f64 = v.iter().zip(&clipped).map(|(a, b)| (a - b).abs()).sum();
        let Ok(d) = Displacements::from_reals(self.params.parties, &clipped) else {
            return f64::NEG_INFINITY;
        };
        match scenario2_pipeline(self.params, &d, self.opts) {
            Ok(r) => r.raw_rate - overshoot,
            Err(e) => {
                log::warn!("rate evaluation failed: {e}");
                f64::NEG_INFINITY
            }
        }
    }
}

impl CostFunction for &RateObjective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        let r = self.rate(p);
        Ok(if r.is_finite() { -r } else { f64::MAX })
    }
}

/// Maximizes the Scenario-2 rate over `[A₁, B₀¹, B₁¹, β₂, …]`: a coarse
/// grid and random samples in the box, then Nelder-Mead from the best few.
/// Deterministic for a fixed seed; among rates equal within 1e−9 the first
/// found wins.
pub fn optimize_displacements(
    params: &ProtocolParams,
    opts: &Scenario2Options,
    search: &DisplacementSearch,
) -> Result<OptimizedDisplacements> {
    let dim = params.parties + 1;
    if let Some(bad) = search.initial.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, found: bad.len() });
    }
    let objective = RateObjective { params, opts, alpha_max: search.alpha_max, evaluations: 0.into() };
    let mut rng = StdRng::seed_from_u64(search.seed);
    let mut candidates: Vec<Vec<f64>> = search.initial.clone();
    if !search.grid_levels.is_empty() {
        let mut grid = vec![Vec::new()];
        for _ in 0..dim {
            grid = grid
                .into_iter()
                .flat_map(|p: Vec<f64>| search.grid_levels.iter().map(move |&v| [p.as_slice(), &[v]].concat()))
                .collect();
        }
        candidates.extend(grid);
    }
    for _ in 0..search.samples {
        candidates.push((0..dim).map(|_| rng.gen_range(-search.alpha_max..=search.alpha_max)).collect());
    }
    if candidates.is_empty() {
        candidates.push(vec![0.0; dim]);
    }
    let mut scored: Vec<(f64, Vec<f64>)> = candidates.into_iter().map(|c| (objective.rate(&c), c)).collect();
    // stable sort: earlier candidates win ties
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut best = scored[0].clone();
    for (_, start) in scored.iter().take(search.restarts.max(1)) {
        let mut simplex = vec![start.clone()];
        for k in 0..dim {
            let mut p = start.clone();
            p[k] += if p[k] + search.step <= search.alpha_max { search.step } else { -search.step };
            simplex.push(p);
        }
        let solver = NelderMead::new(simplex)
            .with_sd_tolerance(1e-10)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let res = Executor::new(&objective, solver)
            .configure(|s| s.max_iters(search.max_iterations))
            .run()
            .map_err(|e| Error::Solver(e.to_string()))?;
        let state = res.state();
        if let Some(p) = state.get_best_param() {
            let r = -state.get_best_cost();
            if r > best.0 + 1e-9 {
                best = (r, p.clone());
            }
        }
    }
    let clipped: Vec<f64> = best.1.iter().map(|x| x.clamp(-search.alpha_max, search.alpha_max)).collect();
    let displacements = Displacements::from_reals(params.parties, &clipped)?;
    let report = scenario2_pipeline(params, &displacements, opts)?;
    Ok(OptimizedDisplacements { displacements, report, evaluations: objective.evaluations.get() })
}
