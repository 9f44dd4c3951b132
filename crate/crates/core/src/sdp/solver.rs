use std::fmt;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use super::SdpProblem;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Target for the relative gap and both relative infeasibilities.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: f64,
    /// Relative threshold for accepting an infeasibility certificate.
    pub infeasibility_tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-7,
            max_iterations: 200,
            step_fraction: 0.95,
            infeasibility_tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverStatus {
    Optimal,
    /// Progress stalled with all measures below the square root of the
    /// tolerance.
    NearOptimal,
    /// No `x` with `F(x) ⪰ 0` exists (certified by the dual iterate).
    PrimalInfeasible,
    /// No feasible `Y` exists; the primal objective is unbounded below.
    DualInfeasible,
    MaxIterations,
    NumericalFailure,
}

impl SolverStatus {
    pub fn is_solved(&self) -> bool {
        matches!(self, Self::Optimal | Self::NearOptimal)
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, Self::PrimalInfeasible | Self::DualInfeasible)
    }
}

impl fmt::Display for SolverStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Optimal => "optimal",
            Self::NearOptimal => "near-optimal",
            Self::PrimalInfeasible => "primal-infeasible",
            Self::DualInfeasible => "dual-infeasible",
            Self::MaxIterations => "max-iterations",
            Self::NumericalFailure => "numerical-failure",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub status: SolverStatus,
    /// `cᵀx` plus the problem offset.
    pub primal_objective: f64,
    /// `⟨F_0, Y⟩` plus the problem offset.
    pub dual_objective: f64,
    pub x: Vec<f64>,
    pub y: Vec<DMatrix<f64>>,
    /// `‖F(x) − Z‖ / (1 + ‖F_0‖)`.
    pub primal_residual: f64,
    /// `‖⟨F_i, Y⟩ − c_i‖ / (1 + ‖c‖)`.
    pub dual_residual: f64,
    /// `|primal − dual| / (1 + |primal| + |dual|)`.
    pub relative_gap: f64,
    pub iterations: usize,
}

/// One constraint matrix split by block into full (both triangles) entries.
struct SparseBlocks {
    blocks: Vec<Vec<(usize, usize, f64)>>,
}

impl SparseBlocks {
    fn from(problem: &SdpProblem, m: &super::SparseSymMatrix) -> Self {
        let mut blocks = vec![Vec::new(); problem.blocks.len()];
        for (b, i, j, v) in m.entries() {
            blocks[b].push((i, j, v));
            if i != j {
                blocks[b].push((j, i, v));
            }
        }
        Self { blocks }
    }

    fn dense(&self, sizes: &[usize]) -> Vec<DMatrix<f64>> {
        self.blocks
            .iter()
            .zip(sizes)
            .map(|(e, &n)| {
                let mut d = DMatrix::zeros(n, n);
                for &(i, j, v) in e {
                    d[(i, j)] += v;
                }
                d
            })
            .collect()
    }

    fn inner(&self, w: &[DMatrix<f64>]) -> f64 {
        self.blocks
            .iter()
            .zip(w)
            .map(|(e, wb)| e.iter().map(|&(i, j, v)| v * wb[(i, j)]).sum::<f64>())
            .sum()
    }

    fn frobenius(&self) -> f64 {
        self.blocks.iter().flatten().map(|&(_, _, v)| v * v).sum::<f64>().sqrt()
    }
}

type Blocks = Vec<DMatrix<f64>>;

fn inner(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn norm(a: &[DMatrix<f64>]) -> f64 {
    inner(a, a).sqrt()
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let mut inv = Cholesky::new(m.clone())?.inverse();
    symmetrize(&mut inv);
    Some(inv)
}

/// Largest `α` with `X + α·dX ⪰ 0`, or `∞`.
fn max_step(x: &[DMatrix<f64>], dx: &[DMatrix<f64>]) -> f64 {
    let mut alpha = f64::INFINITY;
    for (xb, db) in x.iter().zip(dx) {
        let Some(chol) = Cholesky::new(xb.clone()) else {
            return 0.0;
        };
        let l = chol.l();
        let Some(a) = l.solve_lower_triangular(db) else {
            return 0.0;
        };
        let Some(mut s) = l.solve_lower_triangular(&a.transpose()) else {
            return 0.0;
        };
        symmetrize(&mut s);
        let lmin = SymmetricEigen::new(s).eigenvalues.min();
        if lmin < 0.0 {
            alpha = alpha.min(-1.0 / lmin);
        }
    }
    alpha
}

struct Workspace<'a> {
    sizes: Vec<usize>,
    a: Vec<SparseBlocks>,
    c: Blocks,
    b: DVector<f64>,
    /// Entries of every constraint in each block, ordered by constraint.
    by_block: Vec<Vec<(usize, usize, usize, f64)>>,
    /// Start of each constraint's run in `by_block`.
    starts: Vec<Vec<usize>>,
    problem: &'a SdpProblem,
}

impl<'a> Workspace<'a> {
    fn new(problem: &'a SdpProblem) -> Self {
        let sizes: Vec<usize> = problem.blocks.iter().map(|b| b.size).collect();
        let a: Vec<SparseBlocks> = problem.constraints.iter().map(|f| SparseBlocks::from(problem, f)).collect();
        let c = SparseBlocks::from(problem, &problem.constant).dense(&sizes);
        let mut by_block = vec![Vec::new(); sizes.len()];
        let mut starts = vec![Vec::with_capacity(a.len() + 1); sizes.len()];
        for (k, ak) in a.iter().enumerate() {
            for (blk, entries) in ak.blocks.iter().enumerate() {
                starts[blk].push(by_block[blk].len());
                by_block[blk].extend(entries.iter().map(|&(i, j, v)| (k, i, j, v)));
            }
        }
        for (blk, s) in starts.iter_mut().enumerate() {
            s.push(by_block[blk].len());
        }
        Self {
            sizes,
            a,
            c,
            b: DVector::from_vec(problem.objective.clone()),
            by_block,
            starts,
            problem,
        }
    }

    fn m(&self) -> usize {
        self.a.len()
    }

    fn op_a(&self, w: &[DMatrix<f64>]) -> DVector<f64> {
        DVector::from_iterator(self.m(), self.a.iter().map(|ak| ak.inner(w)))
    }

    fn op_at(&self, x: &DVector<f64>) -> Blocks {
        let mut out: Blocks = self.sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (k, ak) in self.a.iter().enumerate() {
            if x[k] == 0.0 {
                continue;
            }
            for (blk, entries) in ak.blocks.iter().enumerate() {
                for &(i, j, v) in entries {
                    out[blk][(i, j)] += x[k] * v;
                }
            }
        }
        out
    }

    /// `M_ij = Tr(A_i Y A_j Z⁻¹)`.
    fn schur(&self, y: &[DMatrix<f64>], zinv: &[DMatrix<f64>]) -> DMatrix<f64> {
        let m = self.m();
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for (blk, &n) in self.sizes.iter().enumerate() {
            let (yb, zb) = (&y[blk], &zinv[blk]);
            let entries = &self.by_block[blk];
            let starts = &self.starts[blk];
            let mut w = DMatrix::<f64>::zeros(n, n);
            for i in 0..m {
                let own = &entries[starts[i]..starts[i + 1]];
                if own.is_empty() {
                    continue;
                }
                // W = Y A_i Z⁻¹
                if own.len() <= n {
                    w.fill(0.0);
                    for &(_, p, q, v) in own {
                        w.ger(v, &yb.column(p), &zb.column(q), 1.0);
                    }
                } else {
                    let mut t = DMatrix::<f64>::zeros(n, n);
                    for &(_, p, q, v) in own {
                        let row = zb.row(q) * v;
                        let mut tr = t.row_mut(p);
                        tr += row;
                    }
                    w = yb * t;
                }
                for &(j, p, q, v) in &entries[starts[i]..] {
                    schur[(i, j)] += v * w[(p, q)];
                }
            }
        }
        for i in 0..m {
            for j in (i + 1)..m {
                schur[(j, i)] = schur[(i, j)];
            }
        }
        schur
    }
}

struct Direction {
    dx: DVector<f64>,
    dy: Blocks,
    dz: Blocks,
}

/// Interior-point iteration (HKM direction, Mehrotra predictor-corrector,
/// infeasible start).
pub fn solve_sdp(problem: &SdpProblem, options: &SolverOptions) -> Result<SdpSolution> {
    problem.validate()?;
    let ws = Workspace::new(problem);
    let m = ws.m();
    let n_total: usize = ws.sizes.iter().sum();
    let nf = n_total as f64;
    let norm_c = norm(&ws.c);
    let norm_b = ws.b.norm();

    // Starting point scaled to the data.
    let mut alpha0: f64 = 1.0;
    let mut beta0: f64 = 1.0 + norm_c;
    for (k, ak) in ws.a.iter().enumerate() {
        let fa = ak.frobenius();
        alpha0 = alpha0.max(nf * (1.0 + ws.b[k].abs()) / (1.0 + fa));
        beta0 = beta0.max(1.0 + fa);
    }
    beta0 /= nf.sqrt();
    let ident = |s: f64| -> Blocks { ws.sizes.iter().map(|&n| DMatrix::identity(n, n) * s).collect() };
    let mut y = ident(10.0 * alpha0);
    let mut z = ident(10.0 * beta0);
    let mut x = DVector::<f64>::zeros(m);

    let mut status = SolverStatus::MaxIterations;
    let mut iterations = 0;
    let mut measures = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut stalled = 0;

    for iter in 0..=options.max_iterations {
        iterations = iter;
        let pobj = ws.b.dot(&x);
        let dobj = inner(&ws.c, &y);
        let ay = ws.op_a(&y);
        let rp = &ws.b - &ay;
        let atx = ws.op_at(&x);
        let rd: Blocks = (0..ws.sizes.len()).map(|k| &atx[k] - &ws.c[k] - &z[k]).collect();
        let p_res = norm(&rd) / (1.0 + norm_c);
        let d_res = rp.norm() / (1.0 + norm_b);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        measures = (p_res, d_res, gap);
        log::trace!("sdp iter {iter}: p {pobj:.10e} d {dobj:.10e} pres {p_res:.2e} dres {d_res:.2e} gap {gap:.2e}");

        if p_res < options.tolerance && d_res < options.tolerance && gap < options.tolerance {
            status = SolverStatus::Optimal;
            break;
        }
        // Y with A(Y) ≈ 0 and ⟨F₀, Y⟩ > 0 certifies that F(x) ⪰ 0 is infeasible.
        if dobj > 0.0 && ay.norm() / dobj < options.infeasibility_tolerance {
            status = SolverStatus::PrimalInfeasible;
            break;
        }
        // x with Σ x_i F_i ⪰ −ε and cᵀx → −∞ certifies dual infeasibility.
        if -pobj > (1.0 + norm_c + norm(&rd)) / options.infeasibility_tolerance {
            status = SolverStatus::DualInfeasible;
            break;
        }
        if iter == options.max_iterations {
            break;
        }

        let zinv: Option<Blocks> = z.iter().map(spd_inverse).collect();
        let Some(zinv) = zinv else {
            status = SolverStatus::NumericalFailure;
            break;
        };
        let schur = ws.schur(&y, &zinv);
        let Some(chol) = regularized_cholesky(schur) else {
            status = SolverStatus::NumericalFailure;
            break;
        };
        let mu = inner(&y, &z) / nf;
        // Y·Rd·Z⁻¹ is shared by predictor and corrector.
        let y_rd_zinv: Blocks = (0..ws.sizes.len()).map(|k| &y[k] * &rd[k] * &zinv[k]).collect();

        let solve = |r: &Blocks| -> Direction {
            let lhs: Blocks = (0..r.len()).map(|k| &r[k] - &y_rd_zinv[k]).collect();
            let rhs = ws.op_a(&lhs) - &rp;
            let dx = chol.solve(&rhs);
            let adx = ws.op_at(&dx);
            let dz: Blocks = (0..r.len()).map(|k| &adx[k] + &rd[k]).collect();
            let dy: Blocks = (0..r.len())
                .map(|k| {
                    let mut d = &r[k] - &y[k] * &dz[k] * &zinv[k];
                    symmetrize(&mut d);
                    d
                })
                .collect();
            Direction { dx, dy, dz }
        };

        // predictor
        let r_aff: Blocks = y.iter().map(|yb| -yb).collect();
        let aff = solve(&r_aff);
        let ap = max_step(&y, &aff.dy).min(1.0);
        let ad = max_step(&z, &aff.dz).min(1.0);
        let y_aff: Blocks = (0..y.len()).map(|k| &y[k] + &aff.dy[k] * ap).collect();
        let z_aff: Blocks = (0..z.len()).map(|k| &z[k] + &aff.dz[k] * ad).collect();
        let mu_aff = inner(&y_aff, &z_aff) / nf;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // corrector
        let r_cor: Blocks = (0..y.len())
            .map(|k| &zinv[k] * (sigma * mu) - &y[k] - &aff.dy[k] * &aff.dz[k] * &zinv[k])
            .collect();
        let dir = solve(&r_cor);
        let tau = if mu < 1e-4 { options.step_fraction.max(0.98) } else { options.step_fraction };
        let ap = (tau * max_step(&y, &dir.dy)).min(1.0);
        let ad = (tau * max_step(&z, &dir.dz)).min(1.0);
        if ap < 1e-10 && ad < 1e-10 {
            stalled += 1;
            if stalled >= 3 {
                status = SolverStatus::NumericalFailure;
                break;
            }
        } else {
            stalled = 0;
        }
        for k in 0..y.len() {
            y[k] += &dir.dy[k] * ap;
            z[k] += &dir.dz[k] * ad;
        }
        x += &dir.dx * ad;
    }

    let near = options.tolerance.sqrt();
    if matches!(status, SolverStatus::MaxIterations | SolverStatus::NumericalFailure)
        && measures.0 < near
        && measures.1 < near
        && measures.2 < near
    {
        status = SolverStatus::NearOptimal;
    }
    if !status.is_solved() {
        log::debug!(
            "sdp finished with status {status} after {iterations} iterations (pres {:.2e}, dres {:.2e}, gap {:.2e})",
            measures.0,
            measures.1,
            measures.2
        );
    }
    let offset = ws.problem.objective_offset;
    Ok(SdpSolution {
        status,
        primal_objective: ws.b.dot(&x) + offset,
        dual_objective: inner(&ws.c, &y) + offset,
        x: x.iter().copied().collect(),
        y,
        primal_residual: measures.0,
        dual_residual: measures.1,
        relative_gap: measures.2,
        iterations,
    })
}

fn regularized_cholesky(mut schur: DMatrix<f64>) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    let m = schur.nrows();
    if m == 0 {
        return Cholesky::new(schur);
    }
    let scale = (0..m).map(|i| schur[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut shift = 0.0;
    for _ in 0..8 {
        if let Some(c) = Cholesky::new(schur.clone()) {
            return Some(c);
        }
        let next = if shift == 0.0 { scale * 1e-14 } else { shift * 100.0 };
        for i in 0..m {
            schur[(i, i)] += next - shift;
        }
        shift = next;
    }
    None
}

/// Convenience: solve and fail unless the status is optimal or near-optimal.
pub fn solve_checked(problem: &SdpProblem, options: &SolverOptions) -> Result<SdpSolution> {
    let sol = solve_sdp(problem, options)?;
    if !sol.status.is_solved() {
        return Err(Error::Solver(format!(
            "status {} after {} iterations (primal residual {:.2e}, dual residual {:.2e}, gap {:.2e})",
            sol.status, sol.iterations, sol.primal_residual, sol.dual_residual, sol.relative_gap
        )));
    }
    Ok(sol)
}
