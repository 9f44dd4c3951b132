use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::registry::{ModeLabel, ModeRegistry};
use super::state::StateVector;
use super::tensor::TensorProduct;
use crate::error::{Error, Result};
use crate::numeric::NumericPolicy;

pub type CMatrix = DMatrix<Complex64>;

fn check_square(registry: &ModeRegistry, m: &CMatrix) -> Result<()> {
    if m.nrows() != registry.dim() || m.ncols() != registry.dim() {
        return Err(Error::DimensionMismatch {
            expected: registry.dim(),
            found: m.nrows().max(m.ncols()),
        });
    }
    Ok(())
}

pub(crate) fn hermiticity_defect(m: &CMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub(crate) fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// General (not necessarily Hermitian) operator on a mode registry.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperator {
    registry: ModeRegistry,
    matrix: CMatrix,
}

impl LinearOperator {
    pub fn new(registry: ModeRegistry, matrix: CMatrix) -> Result<Self> {
        check_square(&registry, &matrix)?;
        Ok(Self { registry, matrix })
    }

    pub fn identity(registry: ModeRegistry) -> Self {
        let d = registry.dim();
        Self {
            registry,
            matrix: CMatrix::identity(d, d),
        }
    }

    /// Real matrix convenience constructor.
    pub fn from_real(registry: ModeRegistry, matrix: &DMatrix<f64>) -> Result<Self> {
        Self::new(registry, matrix.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn registry(&self) -> &ModeRegistry {
        &self.registry
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            registry: self.registry.clone(),
            matrix: &self.matrix * Complex64::new(factor, 0.0),
        }
    }

    fn same_space(&self, other: &Self) -> Result<()> {
        if self.registry != other.registry {
            return Err(Error::DimensionMismatch {
                expected: self.registry.dim(),
                found: other.registry.dim(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        Ok(Self {
            registry: self.registry.clone(),
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        Ok(Self {
            registry: self.registry.clone(),
            matrix: &self.matrix - &other.matrix,
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        Ok(Self {
            registry: self.registry.clone(),
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn adjoint(&self) -> Self {
        Self {
            registry: self.registry.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn is_hermitian(&self, policy: &NumericPolicy) -> bool {
        hermiticity_defect(&self.matrix) <= policy.hermiticity
    }

    /// Ascending eigenvalues of the Hermitian part.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub fn is_psd(&self, policy: &NumericPolicy) -> bool {
        self.is_hermitian(policy) && self.eigenvalues().first().map_or(true, |&e| e >= policy.psd_floor)
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.registry() != &self.registry {
            return Err(Error::DimensionMismatch {
                expected: self.registry.dim(),
                found: state.registry().dim(),
            });
        }
        StateVector::new(self.registry.clone(), &self.matrix * state.amplitudes())
    }
}

impl TensorProduct for LinearOperator {
    fn tensor(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            registry: self.registry.concat(&other.registry)?,
            matrix: self.matrix.kronecker(&other.matrix),
        })
    }
}

/// Density operator: Hermitian and positive semidefinite. Normalization is
/// not enforced so that unnormalized conditional states can be carried around.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    registry: ModeRegistry,
    matrix: CMatrix,
}

impl DensityOperator {
    /// Validates Hermiticity and positivity against `policy`.
    pub fn new(registry: ModeRegistry, matrix: CMatrix, policy: &NumericPolicy) -> Result<Self> {
        check_square(&registry, &matrix)?;
        let defect = hermiticity_defect(&matrix);
        if defect > policy.hermiticity {
            return Err(Error::OutOfRange {
                name: "hermiticity defect",
                value: defect,
            });
        }
        let min_ev = hermitian_eigenvalues(&matrix).first().copied().unwrap_or(0.0);
        if min_ev < policy.psd_floor {
            return Err(Error::OutOfRange {
                name: "minimum eigenvalue",
                value: min_ev,
            });
        }
        Ok(Self { registry, matrix })
    }

    pub(crate) fn from_matrix_unchecked(registry: ModeRegistry, matrix: CMatrix) -> Self {
        debug_assert_eq!(matrix.nrows(), registry.dim());
        Self { registry, matrix }
    }

    pub fn registry(&self) -> &ModeRegistry {
        &self.registry
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn normalized(&self) -> Result<Self> {
        let t = self.trace();
        if t <= 0.0 {
            return Err(Error::ZeroProbability);
        }
        Ok(self.scaled(1.0 / t))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            registry: self.registry.clone(),
            matrix: &self.matrix * Complex64::new(factor, 0.0),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.registry != other.registry {
            return Err(Error::DimensionMismatch {
                expected: self.registry.dim(),
                found: other.registry.dim(),
            });
        }
        Ok(Self {
            registry: self.registry.clone(),
            matrix: &self.matrix + &other.matrix,
        })
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub fn is_valid(&self, policy: &NumericPolicy) -> bool {
        hermiticity_defect(&self.matrix) <= policy.hermiticity
            && self.eigenvalues().first().map_or(true, |&e| e >= policy.psd_floor)
    }

    /// Traces out `modes`; the remaining modes keep their order.
    pub fn partial_trace(&self, modes: &[ModeLabel]) -> Result<Self> {
        let traced = self.registry.positions(modes)?;
        let keep: Vec<usize> = (0..self.registry.len()).filter(|p| !traced.contains(p)).collect();
        let kreg = self.registry.select(&keep);
        let treg = self.registry.select(&traced);
        let strides = self.registry.strides();
        let full_index = |ko: &[usize], to: &[usize]| -> usize {
            keep.iter().zip(ko).map(|(&p, &n)| strides[p] * n).sum::<usize>()
                + traced.iter().zip(to).map(|(&p, &n)| strides[p] * n).sum::<usize>()
        };
        let kd = kreg.dim();
        let mut out = CMatrix::zeros(kd, kd);
        let t_occ: Vec<Vec<usize>> = (0..treg.dim()).map(|t| treg.occupation(t)).collect();
        let k_occ: Vec<Vec<usize>> = (0..kd).map(|k| kreg.occupation(k)).collect();
        for r in 0..kd {
            for c in 0..kd {
                let mut acc = Complex64::new(0.0, 0.0);
                for to in &t_occ {
                    acc += self.matrix[(full_index(&k_occ[r], to), full_index(&k_occ[c], to))];
                }
                out[(r, c)] = acc;
            }
        }
        Ok(Self {
            registry: kreg,
            matrix: out,
        })
    }

    /// `(⟨β| ⊗ I) ρ (|β⟩ ⊗ I)` where `β` lives on `modes` (given by its own
    /// registry, whose labels must be modes of `self`). The result is the
    /// unnormalized conditional state on the remaining modes; its trace is
    /// the projection probability.
    pub fn project_onto(&self, beta: &StateVector) -> Result<Self> {
        let blabels = beta.registry().labels().to_vec();
        let bpos = self.registry.positions(&blabels)?;
        for (k, &p) in bpos.iter().enumerate() {
            if self.registry.cutoff(p) != beta.registry().cutoff(k) {
                return Err(Error::DimensionMismatch {
                    expected: self.registry.cutoff(p) + 1,
                    found: beta.registry().cutoff(k) + 1,
                });
            }
        }
        let keep: Vec<usize> = (0..self.registry.len()).filter(|p| !bpos.contains(p)).collect();
        let kreg = self.registry.select(&keep);
        let strides = self.registry.strides();
        let kd = kreg.dim();
        // V maps kept-space vectors into the full space: V = |β⟩ ⊗ I_keep (with reordering)
        let mut v = CMatrix::zeros(self.registry.dim(), kd);
        for b in 0..beta.registry().dim() {
            let amp = beta.amplitudes()[b];
            if amp.re == 0.0 && amp.im == 0.0 {
                continue;
            }
            let bo = beta.registry().occupation(b);
            let boff: usize = bpos.iter().zip(&bo).map(|(&p, &n)| strides[p] * n).sum();
            for k in 0..kd {
                let ko = kreg.occupation(k);
                let idx = boff + keep.iter().zip(&ko).map(|(&p, &n)| strides[p] * n).sum::<usize>();
                v[(idx, k)] = amp;
            }
        }
        let out = v.adjoint() * &self.matrix * v;
        Ok(Self {
            registry: kreg,
            matrix: out,
        })
    }

    /// `⟨ψ|ρ|ψ⟩`; the fidelity when `ψ` is normalized.
    pub fn fidelity_with_pure(&self, psi: &StateVector) -> Result<f64> {
        if psi.registry() != &self.registry {
            return Err(Error::DimensionMismatch {
                expected: self.registry.dim(),
                found: psi.registry().dim(),
            });
        }
        let a = psi.amplitudes();
        Ok((a.adjoint() * &self.matrix * a)[(0, 0)].re)
    }

    /// `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        if self.registry.dim() != other.registry.dim() || self.registry.cutoffs() != other.registry.cutoffs() {
            return Err(Error::DimensionMismatch {
                expected: self.registry.dim(),
                found: other.registry.dim(),
            });
        }
        let diff = &self.matrix - &other.matrix;
        Ok(0.5 * hermitian_eigenvalues(&diff).iter().map(|e| e.abs()).sum::<f64>())
    }

    /// `Tr[ρ O]`.
    pub fn expectation(&self, op: &LinearOperator) -> Result<Complex64> {
        if op.registry().dim() != self.registry.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.registry.dim(),
                found: op.registry().dim(),
            });
        }
        Ok((&self.matrix * op.matrix()).trace())
    }

    pub fn relabel(&self, f: impl FnMut(&ModeLabel) -> ModeLabel) -> Result<Self> {
        Ok(Self {
            registry: self.registry.relabel(f)?,
            matrix: self.matrix.clone(),
        })
    }
}

impl TensorProduct for DensityOperator {
    fn tensor(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            registry: self.registry.concat(&other.registry)?,
            matrix: self.matrix.kronecker(&other.matrix),
        })
    }
}
