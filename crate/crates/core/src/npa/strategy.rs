use nalgebra::DVector;
use num_complex::Complex64;

use super::word::{Letter, Word};
use crate::error::{Error, Result};
use crate::quantum::CMatrix;

/// Explicit finite-dimensional realization of an alphabet: a pure state
/// and operators on one common space. Evaluating words against it gives
/// moments that any valid relaxation must admit.
#[derive(Debug, Clone)]
pub struct Strategy {
    pub state: DVector<Complex64>,
    /// `projectors[party][input]`, the outcome-0 projector.
    pub projectors: Vec<Vec<CMatrix>>,
    pub eve: Vec<CMatrix>,
}

impl Strategy {
    pub fn new(state: DVector<Complex64>, projectors: Vec<Vec<CMatrix>>, eve: Vec<CMatrix>) -> Result<Self> {
        let d = state.len();
        let all = projectors.iter().flatten().chain(&eve);
        if let Some(m) = all.clone().find(|m| m.nrows() != d || m.ncols() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: m.nrows() });
        }
        Ok(Self { state, projectors, eve })
    }

    pub fn operator(&self, letter: Letter) -> CMatrix {
        match letter {
            Letter::Proj { party, input } => self.projectors[party as usize][input as usize].clone(),
            Letter::Eve { index, dagger } => {
                let z = &self.eve[index as usize];
                if dagger {
                    z.adjoint()
                } else {
                    z.clone()
                }
            }
        }
    }

    /// `⟨ψ|w|ψ⟩`.
    pub fn moment(&self, word: &Word) -> Complex64 {
        let mut v = self.state.clone();
        for &l in word.letters().iter().rev() {
            v = self.operator(l) * v;
        }
        self.state.dotc(&v)
    }

    /// `Γ_ij = ⟨b_i† b_j⟩` evaluated letter by letter, without
    /// canonicalization.
    pub fn gamma(&self, basis: &[Word]) -> CMatrix {
        let d = self.state.len();
        let vecs: Vec<DVector<Complex64>> = basis
            .iter()
            .map(|w| {
                let mut v = self.state.clone();
                for &l in w.letters().iter().rev() {
                    v = self.operator(l) * v;
                }
                debug_assert_eq!(v.len(), d);
                v
            })
            .collect();
        CMatrix::from_fn(basis.len(), basis.len(), |i, j| vecs[i].dotc(&vecs[j]))
    }
}
