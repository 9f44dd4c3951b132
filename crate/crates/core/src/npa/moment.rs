use std::collections::{HashMap, HashSet};

use super::basis::{Alphabet, Relaxation};
use super::word::{real_class, Letter, Word};
use crate::error::{Error, Result};
use crate::sdp::{solve_sdp, Block, SdpProblem, SdpSolution, SolverOptions, SparseSymMatrix};

/// Scalar field of the moment variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Field {
    /// `⟨w⟩` and `⟨w†⟩` share one real variable. Exact whenever all data
    /// are real: averaging a solution with its complex conjugate keeps
    /// feasibility and the objective.
    #[default]
    Real,
    /// Complex moments, with each PSD block realified as `[[Re, −Im], [Im, Re]]`.
    Complex,
}

/// `Z_k*Z_k ≤ α²` and `Z_k Z_k* ≤ α²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorBound {
    pub operator: usize,
    pub alpha: f64,
}

/// Noncommutative polynomial program: minimize `Σ c_w Re⟨w⟩ + constant`
/// over states and operators obeying the alphabet's relations, fixed
/// moments and operator bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentProblem {
    pub alphabet: Alphabet,
    pub objective: Vec<(Word, f64)>,
    pub objective_constant: f64,
    pub equalities: Vec<(Word, f64)>,
    /// Equalities hold up to `±equality_slack`; zero pins them exactly.
    pub equality_slack: f64,
    pub bounds: Vec<OperatorBound>,
}

impl MomentProblem {
    pub fn validate(&self) -> Result<()> {
        let words = self.objective.iter().chain(&self.equalities);
        for (w, c) in words {
            if !c.is_finite() {
                return Err(Error::Relaxation(format!("non-finite coefficient on {w}")));
            }
            if let Some(l) = w.letters().iter().find(|l| !self.alphabet.contains(**l)) {
                return Err(Error::Relaxation(format!("letter {l} of {w} is not in the alphabet")));
            }
        }
        if !(self.equality_slack >= 0.0 && self.equality_slack.is_finite()) {
            return Err(Error::Relaxation(format!("bad equality slack {}", self.equality_slack)));
        }
        for b in &self.bounds {
            if b.operator >= self.alphabet.eve || !(b.alpha > 0.0) {
                return Err(Error::Relaxation(format!("bad operator bound {b:?}")));
            }
        }
        Ok(())
    }
}

/// Upper-triangle cell of the moment matrix and its moment class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
    pub class: usize,
    /// The cell holds the conjugate of the class representative.
    pub conjugate: bool,
}

/// Moment matrix `Γ_ij = ⟨b_i† b_j⟩` with cells grouped into classes of
/// words equal after canonicalization (`w` and `w†` share a class).
#[derive(Debug, Clone)]
pub struct MomentMatrixSpec {
    pub basis: Vec<Word>,
    pub cells: Vec<Cell>,
    /// Equalities whose word does not occur in the matrix.
    pub dropped: Vec<(Word, f64)>,
    classes: Vec<Word>,
    index: HashMap<Word, usize>,
    fixed: Vec<Option<f64>>,
}

impl MomentMatrixSpec {
    pub fn size(&self) -> usize {
        self.basis.len()
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class_word(&self, class: usize) -> &Word {
        &self.classes[class]
    }

    pub fn fixed_value(&self, class: usize) -> Option<f64> {
        self.fixed[class]
    }

    pub fn num_fixed(&self) -> usize {
        self.fixed.iter().filter(|f| f.is_some()).count()
    }

    /// Class of a word and whether the word is the conjugate of its
    /// representative.
    pub fn class_of(&self, w: &Word) -> Option<(usize, bool)> {
        let rep = real_class(w);
        self.index.get(&rep).map(|&c| (c, rep != *w))
    }

    /// First cell holding the moment of `w`.
    pub fn position(&self, w: &Word) -> Option<(usize, usize)> {
        let (c, _) = self.class_of(w)?;
        self.cells.iter().find(|cell| cell.class == c).map(|cell| (cell.row, cell.col))
    }

    fn class_or_insert(&mut self, w: &Word) -> (usize, bool) {
        let rep = real_class(w);
        let conj = rep != *w;
        if let Some(&c) = self.index.get(&rep) {
            return (c, conj);
        }
        let c = self.classes.len();
        self.index.insert(rep.clone(), c);
        self.classes.push(rep);
        self.fixed.push(None);
        (c, conj)
    }
}

/// Builds the moment matrix of `basis` and pins the classes named by
/// `equalities`; `⟨1⟩ = 1` always.
pub fn moment_matrix(basis: &[Word], equalities: &[(Word, f64)]) -> Result<MomentMatrixSpec> {
    if basis.first().map_or(true, |w| !w.is_empty()) {
        return Err(Error::Relaxation("the basis must start with the identity".into()));
    }
    let mut spec = MomentMatrixSpec {
        basis: basis.to_vec(),
        cells: Vec::with_capacity(basis.len() * (basis.len() + 1) / 2),
        dropped: Vec::new(),
        classes: Vec::new(),
        index: HashMap::new(),
        fixed: Vec::new(),
    };
    let adj: Vec<Word> = basis.iter().map(Word::adjoint).collect();
    for i in 0..basis.len() {
        for j in i..basis.len() {
            let (class, conjugate) = spec.class_or_insert(&adj[i].mul(&basis[j]));
            spec.cells.push(Cell { row: i, col: j, class, conjugate });
        }
    }
    spec.fixed[0] = Some(1.0);
    for (w, v) in equalities {
        match spec.class_of(w) {
            Some((c, _)) => {
                if let Some(old) = spec.fixed[c] {
                    if (old - v).abs() > 1e-12 {
                        return Err(Error::Relaxation(format!("conflicting values {old} and {v} for {w}")));
                    }
                }
                spec.fixed[c] = Some(*v);
            }
            None => {
                log::warn!("equality on {w} is outside the moment matrix and was dropped");
                spec.dropped.push((w.clone(), *v));
            }
        }
    }
    Ok(spec)
}

/// Hermitian block whose entries are linear in the moments.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizingBlock {
    pub size: usize,
    /// `(i, j, terms)` for `i ≤ j`; entry = `Σ c⟨w⟩`.
    pub entries: Vec<(usize, usize, Vec<(Word, f64)>)>,
}

/// Localizing matrices of `α² − Z*Z` and `α² − ZZ*` over the basis words
/// of length at most `depth`.
pub fn localizing_constraints(spec: &MomentMatrixSpec, bounds: &[OperatorBound], depth: usize) -> Vec<LocalizingBlock> {
    let words: Vec<&Word> = spec.basis.iter().filter(|w| w.len() <= depth).collect();
    let mut out = Vec::new();
    for b in bounds {
        let z = Letter::z(b.operator);
        let zs = Letter::z_star(b.operator);
        for poly in [Word::new([zs, z]), Word::new([z, zs])] {
            let mut entries = Vec::new();
            for (i, u) in words.iter().enumerate() {
                let ua = u.adjoint();
                for (j, v) in words.iter().enumerate().skip(i) {
                    let plain = ua.mul(v);
                    let inner = ua.mul(&poly).mul(v);
                    entries.push((i, j, vec![(plain, b.alpha * b.alpha), (inner, -1.0)]));
                }
            }
            out.push(LocalizingBlock { size: words.len(), entries });
        }
    }
    out
}

/// A moment problem relaxed to SDPA form.
#[derive(Debug, Clone)]
pub struct Relaxed {
    pub spec: MomentMatrixSpec,
    pub localizing: Vec<LocalizingBlock>,
    pub field: Field,
    pub sdp: SdpProblem,
    /// Per variable: moment class and whether it is the imaginary part.
    pub variables: Vec<(usize, bool)>,
}

struct Assembler {
    /// Moments substituted as constants.
    pinned: Vec<Option<f64>>,
    re: Vec<Option<usize>>,
    im: Vec<Option<usize>>,
    f: Vec<SparseSymMatrix>,
    constant: SparseSymMatrix,
}

impl Assembler {
    /// `coef·v` at `(r, s)`: into `F_k` for a variable, else into `−F_0`.
    fn put(&mut self, target: Option<usize>, blk: usize, r: usize, s: usize, v: f64) {
        let (r, s) = if r <= s { (r, s) } else { (s, r) };
        match target {
            Some(k) => self.f[k].add(blk, r, s, v),
            None => self.constant.add(blk, r, s, -v),
        }
    }

    /// Adds `coef·⟨w⟩` at cell `(i, j)`, `i ≤ j`, of a Hermitian block of
    /// size `n` stored in SDP block `blk`; `realify` doubles the block.
    #[allow(clippy::too_many_arguments)]
    fn term(&mut self, spec: &MomentMatrixSpec, blk: usize, n: usize, realify: bool, i: usize, j: usize, w: &Word, coef: f64) {
        let (c, conj) = spec.class_of(w).expect("word registered before assembly");
        let (target, value) = match self.pinned[c] {
            Some(v) => (None, coef * v),
            None => (self.re[c], coef),
        };
        self.put(target, blk, i, j, value);
        if !realify {
            return;
        }
        self.put(target, blk, n + i, n + j, value);
        // Im parts of a Hermitian diagonal cancel
        if i != j {
            if let Some(k) = self.im[c] {
                let s = if conj { -coef } else { coef };
                self.put(Some(k), blk, i, n + j, -s);
                self.put(Some(k), blk, j, n + i, s);
            }
        }
    }
}

impl Relaxed {
    /// Lower bound from a dual solution, including the objective constant.
    pub fn bound(&self, solution: &SdpSolution) -> f64 {
        solution.dual_objective
    }
}

/// Adds `u, v` with `u†v = w` for objective words `w` missing from the
/// moment matrix of `basis`.
fn complete_basis(basis: &mut Vec<Word>, objective: &[(Word, f64)]) {
    let mut present: HashSet<Word> = HashSet::new();
    for u in basis.iter() {
        let ua = u.adjoint();
        for v in basis.iter() {
            present.insert(real_class(&ua.mul(v)));
        }
    }
    for (w, _) in objective {
        if present.contains(&real_class(w)) {
            continue;
        }
        let (head, tail) = w.letters().split_at(w.len().div_ceil(2));
        let u = Word::new(head.iter().copied()).adjoint();
        let v = Word::new(tail.iter().copied());
        log::debug!("objective word {w} added to the monomial set as {u}, {v}");
        for x in [u, v] {
            if !basis.contains(&x) {
                basis.push(x);
            }
        }
        for u in basis.iter() {
            let ua = u.adjoint();
            for v in basis.iter() {
                present.insert(real_class(&ua.mul(v)));
            }
        }
    }
}

/// Relaxes `problem` with the monomial set `relaxation`, extended where
/// needed so that every objective word is a moment-matrix entry.
pub fn relax(problem: &MomentProblem, relaxation: &Relaxation, field: Field) -> Result<Relaxed> {
    problem.validate()?;
    let mut basis = relaxation.basis(&problem.alphabet);
    complete_basis(&mut basis, &problem.objective);
    let mut spec = moment_matrix(&basis, &problem.equalities)?;
    let localizing = localizing_constraints(&spec, &problem.bounds, relaxation.localizing_depth());
    for blk in &localizing {
        for (_, _, terms) in &blk.entries {
            for (w, _) in terms {
                spec.class_or_insert(w);
            }
        }
    }
    let nc = spec.num_classes();
    let slack = problem.equality_slack;
    let pinned: Vec<Option<f64>> = (0..nc)
        .map(|c| if c == 0 || slack == 0.0 { spec.fixed_value(c) } else { None })
        .collect();
    let boxed: Vec<(usize, f64)> = (1..nc)
        .filter_map(|c| if slack > 0.0 { spec.fixed_value(c).map(|v| (c, v)) } else { None })
        .collect();
    let mut variables = Vec::new();
    let mut re = vec![None; nc];
    let mut im = vec![None; nc];
    for c in 0..nc {
        if pinned[c].is_some() {
            continue;
        }
        re[c] = Some(variables.len());
        variables.push((c, false));
        if field == Field::Complex && !spec.class_word(c).is_self_adjoint() {
            im[c] = Some(variables.len());
            variables.push((c, true));
        }
    }

    let realify = field == Field::Complex;
    let n = spec.size();
    let mut blocks = vec![Block::dense(if realify { 2 * n } else { n })];
    let scalars = localizing.iter().filter(|b| b.size == 1).count() + 2 * boxed.len();
    let scalar_block = if scalars > 0 {
        blocks.push(Block::diagonal(scalars));
        Some(blocks.len() - 1)
    } else {
        None
    };
    let mut asm = Assembler {
        pinned,
        re,
        im,
        f: vec![SparseSymMatrix::new(); variables.len()],
        constant: SparseSymMatrix::new(),
    };

    for cell in &spec.cells {
        let w = spec.class_word(cell.class).clone();
        let w = if cell.conjugate { w.adjoint() } else { w };
        asm.term(&spec, 0, n, realify, cell.row, cell.col, &w, 1.0);
    }
    let mut next_scalar = 0;
    for blk in &localizing {
        // scalar blocks are real and share one diagonal SDP block
        let (index, shift, doubled) = if blk.size == 1 {
            next_scalar += 1;
            (scalar_block.expect("scalar block exists"), next_scalar - 1, false)
        } else {
            blocks.push(Block::dense(if realify { 2 * blk.size } else { blk.size }));
            (blocks.len() - 1, 0, realify)
        };
        for (i, j, terms) in &blk.entries {
            for (w, coef) in terms {
                asm.term(&spec, index, blk.size, doubled, i + shift, j + shift, w, *coef);
            }
        }
    }

    // |⟨w⟩ − v| ≤ slack as two diagonal entries
    for &(c, v) in &boxed {
        let blk = scalar_block.expect("scalar block exists");
        let k = asm.re[c];
        asm.put(k, blk, next_scalar, next_scalar, 1.0);
        asm.put(None, blk, next_scalar, next_scalar, -(v - slack));
        asm.put(k, blk, next_scalar + 1, next_scalar + 1, -1.0);
        asm.put(None, blk, next_scalar + 1, next_scalar + 1, v + slack);
        next_scalar += 2;
    }

    let mut sdp = SdpProblem::new(blocks);
    let mut objective = vec![0.0; variables.len()];
    let mut offset = problem.objective_constant;
    for (w, coef) in &problem.objective {
        let (c, _) = spec.class_of(w).expect("objective covered by the completed basis");
        match asm.pinned[c] {
            Some(v) => offset += coef * v,
            None => objective[asm.re[c].expect("free class has a variable")] += coef,
        }
    }
    sdp.objective_offset = offset;
    sdp.constant = asm.constant;
    for (c, f) in objective.into_iter().zip(asm.f) {
        sdp.add_variable(c, f);
    }
    Ok(Relaxed { spec, localizing, field, sdp, variables })
}

/// Solved relaxation.
#[derive(Debug, Clone)]
pub struct RelaxationBound {
    /// Certified lower bound on the infimum (dual objective).
    pub value: f64,
    pub solution: SdpSolution,
}

/// Relaxes and solves; errors unless the solver reports a usable optimum.
pub fn solve_relaxation(
    problem: &MomentProblem,
    relaxation: &Relaxation,
    field: Field,
    options: &SolverOptions,
) -> Result<RelaxationBound> {
    let relaxed = relax(problem, relaxation, field)?;
    let solution = solve_sdp(&relaxed.sdp, options)?;
    if !solution.status.is_solved() {
        return Err(Error::Solver(format!(
            "relaxation ({}, {} variables, matrix {}) ended with status {} after {} iterations \
             (primal residual {:.2e}, dual residual {:.2e}, gap {:.2e})",
            relaxation.label(),
            relaxed.sdp.num_variables(),
            relaxed.spec.size(),
            solution.status,
            solution.iterations,
            solution.primal_residual,
            solution.dual_residual,
            solution.relative_gap
        )));
    }
    Ok(RelaxationBound { value: relaxed.bound(&solution), solution })
}
