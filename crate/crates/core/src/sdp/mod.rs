//! Block-diagonal semidefinite programs in SDPA form and a dense primal-dual
//! interior-point solver.
//!
//! The problem is `min cᵀx` subject to `F(x) = Σ_i x_i F_i − F_0 ⪰ 0`, with
//! dual `max ⟨F_0, Y⟩` subject to `⟨F_i, Y⟩ = c_i`, `Y ⪰ 0`. Following SDPA,
//! the x-problem is called primal. The dual objective of a dual-feasible `Y`
//! is a lower bound on the primal optimum.

mod sdpa;
mod solver;

use std::collections::BTreeMap;

pub use sdpa::{parse_sdpa, read_sdpa, sdpa_string, write_sdpa};
pub use solver::{solve_checked, solve_sdp, SdpSolution, SolverOptions, SolverStatus};

use crate::error::{Error, Result};

/// One diagonal block of the matrix variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub size: usize,
    /// Written with a negative size in SDPA files.
    pub diagonal: bool,
}

impl Block {
    pub fn dense(size: usize) -> Self {
        Self { size, diagonal: false }
    }

    pub fn diagonal(size: usize) -> Self {
        Self { size, diagonal: true }
    }
}

/// Symmetric block-diagonal matrix stored by its upper-triangle entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseSymMatrix {
    entries: BTreeMap<(usize, usize, usize), f64>,
}

impl SparseSymMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `value` at `(row, col)` of `block` and, implicitly, at the
    /// mirrored position.
    pub fn add(&mut self, block: usize, row: usize, col: usize, value: f64) {
        let (i, j) = if row <= col { (row, col) } else { (col, row) };
        let slot = self.entries.entry((block, i, j)).or_insert(0.0);
        *slot += value;
        if *slot == 0.0 {
            self.entries.remove(&(block, i, j));
        }
    }

    /// Upper-triangle entries `(block, row, col, value)` with `row ≤ col`,
    /// skipping exact zeros.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        self.entries
            .iter()
            .filter(|(_, &v)| v != 0.0)
            .map(|(&(b, i, j), &v)| (b, i, j, v))
    }

    pub fn nnz(&self) -> usize {
        self.entries().count()
    }

    pub fn is_empty(&self) -> bool {
        self.nnz() == 0
    }

    pub fn scale(&mut self, factor: f64) {
        for v in self.entries.values_mut() {
            *v *= factor;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub blocks: Vec<Block>,
    /// `c`, one coefficient per variable.
    pub objective: Vec<f64>,
    /// Constant added to both objectives when reporting.
    pub objective_offset: f64,
    /// `F_0`.
    pub constant: SparseSymMatrix,
    /// `F_1 … F_m`.
    pub constraints: Vec<SparseSymMatrix>,
}

impl SdpProblem {
    pub fn new(blocks: Vec<Block>) -> Self {
        Self {
            blocks,
            objective: Vec::new(),
            objective_offset: 0.0,
            constant: SparseSymMatrix::new(),
            constraints: Vec::new(),
        }
    }

    /// Appends a variable with objective coefficient `c` and matrix `f`.
    pub fn add_variable(&mut self, c: f64, f: SparseSymMatrix) -> usize {
        self.objective.push(c);
        self.constraints.push(f);
        self.objective.len() - 1
    }

    pub fn num_variables(&self) -> usize {
        self.objective.len()
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.size).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.constraints.len() {
            return Err(Error::DimensionMismatch {
                expected: self.objective.len(),
                found: self.constraints.len(),
            });
        }
        if self.blocks.is_empty() || self.blocks.iter().any(|b| b.size == 0) {
            return Err(Error::InvalidConfig("SDP needs nonempty blocks".into()));
        }
        for m in std::iter::once(&self.constant).chain(&self.constraints) {
            for (b, i, j, v) in m.entries() {
                let blk = self.blocks.get(b).ok_or_else(|| Error::InvalidConfig(format!("block {b} out of range")))?;
                if j >= blk.size || (blk.diagonal && i != j) || !v.is_finite() {
                    return Err(Error::InvalidConfig(format!("bad entry ({b}, {i}, {j}) = {v}")));
                }
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidConfig("non-finite objective".into()));
        }
        Ok(())
    }

    /// `F(x) = Σ x_i F_i − F_0` as dense blocks.
    pub fn evaluate(&self, x: &[f64]) -> Vec<nalgebra::DMatrix<f64>> {
        let mut out: Vec<_> = self.blocks.iter().map(|b| nalgebra::DMatrix::zeros(b.size, b.size)).collect();
        let mut put = |m: &SparseSymMatrix, s: f64| {
            for (b, i, j, v) in m.entries() {
                out[b][(i, j)] += s * v;
                if i != j {
                    out[b][(j, i)] += s * v;
                }
            }
        };
        put(&self.constant, -1.0);
        for (k, f) in self.constraints.iter().enumerate() {
            if x[k] != 0.0 {
                put(f, x[k]);
            }
        }
        out
    }
}
