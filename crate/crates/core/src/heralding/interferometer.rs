use std::collections::BTreeSet;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quantum::{LinearOperator, ModeMatrix2, ModeRegistry};

/// Real matrix `U` on creation operators of a linear-optical network:
/// output `b†_j = Σ_k U[j][k] a†_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeTransform(pub DMatrix<f64>);

impl ModeTransform {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn compose(&self, earlier: &ModeTransform) -> ModeTransform {
        ModeTransform(&self.0 * &earlier.0)
    }
}

/// The station's four-mode interferometer,
/// `½ [[1,1,1,1],[1,−1,1,−1],[1,1,−1,−1],[1,−1,−1,1]]`.
///
/// This is `u⊗u` with `u = (1/√2)[[1,1],[−1,1]]` up to a π phase on the
/// second and third outputs, which photon counting cannot see; the sign
/// choice here reproduces the heralded GHZ states with a relative minus sign.
pub fn interferometer_unitary(modes: usize) -> Result<ModeTransform> {
    if modes != 4 {
        return Err(Error::UnsupportedParties(modes));
    }
    let h = hadamard_block();
    Ok(ModeTransform(h.kronecker(&h)))
}

fn hadamard_block() -> DMatrix<f64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_row_slice(2, 2, &[s, s, s, -s])
}

/// Beamsplitter network realizing [`interferometer_unitary`], as a list of
/// `(port_i, port_j, matrix)` steps applied in order.
pub fn interferometer_network() -> Vec<(usize, usize, ModeMatrix2)> {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let h: ModeMatrix2 = [[s, s], [s, -s]];
    vec![(0, 1, h), (2, 3, h), (0, 2, h), (1, 3, h)]
}

/// Detectors of one interferometer that reacted, 1-based (`D1..D4`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClickPattern {
    clicked: BTreeSet<usize>,
}

impl ClickPattern {
    pub fn new(detectors: &[usize]) -> Result<Self> {
        let clicked: BTreeSet<usize> = detectors.iter().copied().collect();
        if clicked.len() != 2 || detectors.len() != 2 {
            return Err(Error::InvalidPattern(format!(
                "exactly two distinct detectors must click, got {detectors:?}"
            )));
        }
        if clicked.iter().any(|&d| !(1..=4).contains(&d)) {
            return Err(Error::InvalidPattern(format!("detector index out of 1..=4 in {detectors:?}")));
        }
        Ok(Self { clicked })
    }

    /// All six two-click patterns.
    pub fn all() -> Vec<Self> {
        let mut out = Vec::new();
        for i in 1..=4 {
            for j in (i + 1)..=4 {
                out.push(Self::new(&[i, j]).expect("valid pattern"));
            }
        }
        out
    }

    /// Zero-based indices of the clicking detectors.
    pub fn clicked(&self) -> Vec<usize> {
        self.clicked.iter().map(|d| d - 1).collect()
    }

    pub fn is_clicked(&self, detector: usize) -> bool {
        self.clicked.contains(&(detector + 1))
    }
}

impl Default for ClickPattern {
    fn default() -> Self {
        Self::new(&[1, 2]).expect("valid pattern")
    }
}

impl fmt::Display for ClickPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.clicked.iter().map(|d| format!("D{d}")).collect();
        f.write_str(&names.join(","))
    }
}

/// Click POVM element of the station for one pattern, with photon-number
/// resolving detectors: `|1⟩⟨1| + p|0⟩⟨0|` on clicking detectors and
/// `(1−p)|0⟩⟨0|` on silent ones. It is diagonal in the Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StationPovm {
    pattern: ClickPattern,
    p_dc: f64,
}

impl StationPovm {
    pub fn new(pattern: ClickPattern, p_dc: f64) -> Result<Self> {
        crate::error::check_unit_interval("p_dc", p_dc)?;
        Ok(Self { pattern, p_dc })
    }

    pub fn pattern(&self) -> &ClickPattern {
        &self.pattern
    }

    /// Diagonal weight of the Fock state with the given detector occupations.
    pub fn weight(&self, occupation: &[usize]) -> f64 {
        occupation
            .iter()
            .enumerate()
            .map(|(d, &n)| match (self.pattern.is_clicked(d), n) {
                (true, 1) => 1.0,
                (true, 0) => self.p_dc,
                (false, 0) => 1.0 - self.p_dc,
                _ => 0.0,
            })
            .product()
    }

    /// Nonzero diagonal terms: `(weight, occupation of D1..D4)`. For a
    /// two-click pattern these are the four dark-count branches.
    pub fn branches(&self) -> Vec<(f64, Vec<usize>)> {
        let clicked = self.pattern.clicked();
        let mut out = Vec::new();
        // photons present on both, first only, second only, neither
        for mask in [0b11usize, 0b01, 0b10, 0b00] {
            let mut occ = vec![0; 4];
            for (k, &d) in clicked.iter().enumerate() {
                if mask & (1 << k) != 0 {
                    occ[d] = 1;
                }
            }
            let w = self.weight(&occ);
            if w > 0.0 {
                out.push((w, occ));
            }
        }
        out
    }

    /// Dense operator on four detector modes with the given cutoff.
    pub fn operator(&self, cutoff: usize) -> Result<LinearOperator> {
        let reg = ModeRegistry::uniform("D", 4, cutoff)?;
        let diag: Vec<f64> = (0..reg.dim()).map(|i| self.weight(&reg.occupation(i))).collect();
        LinearOperator::from_real(reg, &DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)))
    }
}

/// Coefficient of `a†_k a†_l` (`k ≠ l`) in `b†_i b†_j`.
pub(crate) fn pair_coefficient(u: &ModeTransform, i: usize, j: usize, k: usize, l: usize) -> f64 {
    let m = u.matrix();
    m[(i, k)] * m[(j, l)] + m[(i, l)] * m[(j, k)]
}
