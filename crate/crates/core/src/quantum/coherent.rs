use num_complex::Complex64;

use super::operator::{CMatrix, LinearOperator};
use super::registry::ModeRegistry;

/// Truncation of `|α⟩⟨α|` to occupations `0..=cutoff`, with
/// `|α⟩ = e^{−|α|²/2} Σ αⁿ/√n! |n⟩`.
pub fn coherent_overlap_gram(alpha: Complex64, cutoff: usize) -> LinearOperator {
    let cutoff = cutoff.max(1);
    let mut amp = Vec::with_capacity(cutoff + 1);
    let mut term = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..=cutoff {
        if n > 0 {
            term = term * alpha / (n as f64).sqrt();
        }
        amp.push(term);
    }
    let m = CMatrix::from_fn(cutoff + 1, cutoff + 1, |i, j| amp[i] * amp[j].conj());
    let registry = ModeRegistry::new([("coherent", cutoff)]).expect("cutoff ≥ 1");
    LinearOperator::new(registry, m).expect("dimensions match")
}
