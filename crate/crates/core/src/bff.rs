//! Variational lower bound on `H(A|X=x*, E)` from a Gauss-Radau quadrature
//! of the logarithm.
//!
//! For nodes `t_1 < … < t_m = 1` and weights `w_i`,
//!
//! `H(A|E) ≥ c_m + Σ_{i<m} w_i/(t_i ln 2) · inf Σ_a ⟨M_a (Z_a + Z_a* + (1−t_i) Z_a*Z_a) + t_i Z_a Z_a*⟩`
//!
//! with `c_m = Σ_{i<m} w_i/(t_i ln 2)` and `‖Z_a‖ ≤ α_i`. Each node is
//! relaxed on its own, which can only lower the bound.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::measurements::BehaviorTable;
use crate::npa::{solve_relaxation, Alphabet, Field, Letter, MomentProblem, OperatorBound, Relaxation, Word};
use crate::sdp::SolverOptions;

/// `m`-point Gauss-Radau rule on `[0, 1]` with the endpoint `t_m = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub m: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `Σ_{i<m} w_i / (t_i ln 2)`.
    pub c_m: f64,
    /// `α_i = 3/2 · max(1/t_i, 1/(1 − t_i))` for `i < m`.
    pub alphas: Vec<f64>,
}

impl QuadratureRule {
    /// `w_i / (t_i ln 2)` for `i < m`.
    pub fn node_scale(&self, i: usize) -> f64 {
        self.weights[i] / (self.nodes[i] * std::f64::consts::LN_2)
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * f(t)).sum()
    }
}

/// Golub's construction: the Jacobi matrix of the shifted Legendre
/// polynomials with its last diagonal entry modified so that 1 is an
/// eigenvalue. Nodes are its eigenvalues, weights the squared first
/// eigenvector components.
pub fn gauss_radau(m: usize) -> Result<QuadratureRule> {
    if m < 2 {
        return Err(Error::OutOfRange { name: "m", value: m as f64 });
    }
    let beta = |k: usize| {
        let k = k as f64;
        k / (2.0 * (4.0 * k * k - 1.0).sqrt())
    };
    // δ solves (J_{m−1} − I) δ = β_{m−1}² e_{m−1}; tridiagonal sweep
    let n = m - 1;
    let mut diag = vec![0.5 - 1.0; n];
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = beta(n) * beta(n);
    for k in 1..n {
        let f = beta(k) / diag[k - 1];
        diag[k] -= f * beta(k);
        rhs[k] -= f * rhs[k - 1];
    }
    let mut delta = vec![0.0; n];
    delta[n - 1] = rhs[n - 1] / diag[n - 1];
    for k in (0..n - 1).rev() {
        delta[k] = (rhs[k] - beta(k + 1) * delta[k + 1]) / diag[k];
    }

    let mut j = DMatrix::<f64>::zeros(m, m);
    for k in 0..m {
        j[(k, k)] = 0.5;
        if k + 1 < m {
            j[(k, k + 1)] = beta(k + 1);
            j[(k + 1, k)] = beta(k + 1);
        }
    }
    j[(m - 1, m - 1)] = 1.0 + delta[n - 1];
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs[m - 1].0 = 1.0;
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let nodes: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let weights: Vec<f64> = pairs.iter().map(|p| p.1 / total).collect();
    let c_m = (0..m - 1).map(|i| weights[i] / (nodes[i] * std::f64::consts::LN_2)).sum();
    let alphas = nodes[..m - 1].iter().map(|&t| 1.5 * (1.0 / t).max(1.0 / (1.0 - t))).collect();
    Ok(QuadratureRule { m, nodes, weights, c_m, alphas })
}

/// Width of the band `|⟨w⟩ − P(w)| ≤ ε` imposed for every behavior
/// moment. A band keeps the moment side strictly feasible at extremal
/// behaviors, where exact equalities leave no interior, and absorbs
/// rounding in simulated data.
pub const DEFAULT_EQUALITY_SLACK: f64 = 1e-8;

/// One moment problem per quadrature node `t_i`, `i < m`. Eve's operators
/// are rescaled by `α_i`, so every node carries the bounds `‖Ẑ_a‖ ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BffProblem {
    pub rule: QuadratureRule,
    pub key_input: usize,
    pub nodes: Vec<MomentProblem>,
}

/// Fixed moments `⟨Π_{k∈S} P_{0|x_k}⟩` for every nonempty party subset and
/// input choice, read off the behavior.
pub fn behavior_equalities(behavior: &BehaviorTable) -> Vec<(Word, f64)> {
    let n = behavior.parties();
    let inputs = behavior.inputs();
    let mut out = Vec::new();
    for mask in 1usize..(1 << n) {
        let subset: Vec<usize> = (0..n).filter(|k| mask >> k & 1 == 1).collect();
        let mut choice = vec![0usize; subset.len()];
        loop {
            let mut x = vec![0usize; n];
            for (&p, &c) in subset.iter().zip(&choice) {
                x[p] = c;
            }
            let word = Word::new(subset.iter().zip(&choice).map(|(&p, &c)| Letter::proj(p, c)));
            let zeros = vec![0usize; subset.len()];
            out.push((word, behavior.marginal(&x, &subset, &zeros)));
            // odometer over the subset's inputs
            let mut k = 0;
            while k < subset.len() {
                choice[k] += 1;
                if choice[k] < inputs[subset[k]] {
                    break;
                }
                choice[k] = 0;
                k += 1;
            }
            if k == subset.len() {
                break;
            }
        }
    }
    out
}

/// Objective of node `t`: `Σ_a ⟨M_a (Z_a + Z_a* + (1−t) Z_a*Z_a) + t Z_a Z_a*⟩`
/// with `M_0 = P`, `M_1 = I − P`, written for `Ẑ_a = Z_a / α`.
fn node_objective(key: Letter, t: f64, alpha: f64) -> Vec<(Word, f64)> {
    let mut terms = Vec::new();
    for a in 0..2 {
        let (z, zs) = (Letter::z(a), Letter::z_star(a));
        let body = [
            (Word::letter(z), alpha),
            (Word::letter(zs), alpha),
            (Word::new([zs, z]), (1.0 - t) * alpha * alpha),
        ];
        for (w, c) in body {
            if a == 0 {
                terms.push((Word::letter(key).mul(&w), c));
            } else {
                terms.push((w.clone(), c));
                terms.push((Word::letter(key).mul(&w), -c));
            }
        }
        terms.push((Word::new([z, zs]), t * alpha * alpha));
    }
    terms
}

pub fn build_bff_problem(behavior: &BehaviorTable, rule: &QuadratureRule, key_input: usize) -> Result<BffProblem> {
    let equality_slack = DEFAULT_EQUALITY_SLACK;
    if behavior.parties() == 0 || key_input >= behavior.inputs()[0] {
        return Err(Error::MalformedBehavior(format!("key input {key_input} is not an input of party 0")));
    }
    behavior.check_normalized(1e-9)?;
    let alphabet = Alphabet::new(behavior.inputs().to_vec(), 2);
    let equalities = behavior_equalities(behavior);
    let key = Letter::proj(0, key_input);
    let nodes = (0..rule.m - 1)
        .map(|i| MomentProblem {
            alphabet: alphabet.clone(),
            objective: node_objective(key, rule.nodes[i], rule.alphas[i]),
            objective_constant: 0.0,
            equalities: equalities.clone(),
            equality_slack,
            bounds: (0..2).map(|a| OperatorBound { operator: a, alpha: 1.0 }).collect(),
        })
        .collect();
    Ok(BffProblem { rule: rule.clone(), key_input, nodes })
}

impl BffProblem {
    pub fn with_equality_slack(mut self, slack: f64) -> Self {
        for node in &mut self.nodes {
            node.equality_slack = slack;
        }
        self
    }
}

/// Solved entropy bound.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyBound {
    /// Clamped to `[0, 1]`.
    pub bits: f64,
    /// `c_m + Σ_i scale_i · value_i` before clamping.
    pub raw: f64,
    pub node_values: Vec<f64>,
    pub iterations: usize,
}

/// `c_m` plus the relaxed infimum of every node.
pub fn bff_entropy_bound(
    problem: &BffProblem,
    relaxation: &Relaxation,
    field: Field,
    options: &SolverOptions,
) -> Result<EntropyBound> {
    let mut raw = problem.rule.c_m;
    let mut node_values = Vec::with_capacity(problem.nodes.len());
    let mut iterations = 0;
    for (i, node) in problem.nodes.iter().enumerate() {
        let r = solve_relaxation(node, relaxation, field, options)?;
        raw += problem.rule.node_scale(i) * r.value;
        iterations += r.solution.iterations;
        node_values.push(r.value);
    }
    if raw < 0.0 {
        log::warn!("entropy bound {raw:.3e} below zero, clamped");
    }
    Ok(EntropyBound { bits: raw.clamp(0.0, 1.0), raw, node_values, iterations })
}
