//! Exact linear algebra over truncated multimode bosonic Fock spaces.
//!
//! Beamsplitters follow the convention of the matrix
//! `u = (1/√2) [[1, 1], [-1, 1]]` applied to creation operators by columns:
//! `a†_i → √T a†_i − √(1−T) a†_j` and `a†_j → √(1−T) a†_i + √T a†_j`.
//! Every operation checks the occupation cutoffs instead of truncating.

mod coherent;
mod entropy;
mod operator;
mod registry;
mod state;
mod tensor;

pub use coherent::coherent_overlap_gram;
pub use entropy::{binary_entropy, conditional_shannon_entropy, shannon_entropy, JointTable};
pub use operator::{CMatrix, DensityOperator, LinearOperator};
pub use registry::{ModeLabel, ModeRegistry};
pub use state::{beamsplitter_matrix, ModeMatrix2, StateVector};
pub use tensor::{tensor_product, TensorProduct};
