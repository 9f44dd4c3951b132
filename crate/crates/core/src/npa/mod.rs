//! Moment relaxations of noncommutative polynomial programs.
//!
//! Words over party projectors and Eve's operators are canonicalized
//! ([`Word`]), collected into monomial sets ([`Relaxation`]), and turned into
//! moment and localizing matrices assembled as an [`SdpProblem`](crate::sdp::SdpProblem).

mod basis;
mod moment;
mod strategy;
mod word;

pub use basis::{monomial_basis, Alphabet, Family, LetterGroup, Relaxation};
pub use moment::{
    localizing_constraints, moment_matrix, relax, solve_relaxation, Cell, Field, LocalizingBlock, MomentMatrixSpec,
    MomentProblem, OperatorBound, RelaxationBound, Relaxed,
};
pub use strategy::Strategy;
pub use word::{real_class, Letter, Word};
