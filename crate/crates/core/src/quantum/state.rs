use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::operator::DensityOperator;
use super::registry::{ModeLabel, ModeRegistry};
use super::tensor::TensorProduct;
use crate::error::{check_unit_interval, Error, Result};

/// 2×2 matrix `B` acting on creation operators by columns:
/// `a†_i → B[0][0] a†_i + B[1][0] a†_j`, `a†_j → B[0][1] a†_i + B[1][1] a†_j`.
pub type ModeMatrix2 = [[Complex64; 2]; 2];

/// Beamsplitter of transmissivity `t` in the convention of
/// `u = (1/√2) [[1, 1], [-1, 1]]` (which it equals at `t = 1/2`).
pub fn beamsplitter_matrix(t: f64) -> ModeMatrix2 {
    let a = Complex64::new(t.sqrt(), 0.0);
    let b = Complex64::new((1.0 - t).sqrt(), 0.0);
    [[a, b], [-b, a]]
}

/// Pure state over a truncated multimode Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    registry: ModeRegistry,
    amplitudes: DVector<Complex64>,
}

impl StateVector {
    pub fn new(registry: ModeRegistry, amplitudes: DVector<Complex64>) -> Result<Self> {
        if amplitudes.len() != registry.dim() {
            return Err(Error::DimensionMismatch {
                expected: registry.dim(),
                found: amplitudes.len(),
            });
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::Solver("non-finite amplitude".into()));
        }
        Ok(Self {
            registry,
            amplitudes,
        })
    }

    pub fn zero(registry: ModeRegistry) -> Self {
        let dim = registry.dim();
        Self {
            registry,
            amplitudes: DVector::zeros(dim),
        }
    }

    pub fn vacuum(registry: ModeRegistry) -> Self {
        Self::fock(registry, &[]).expect("vacuum is always representable")
    }

    /// Occupation-number basis state; a short `occupation` is padded with zeros.
    pub fn fock(registry: ModeRegistry, occupation: &[usize]) -> Result<Self> {
        let mut occ = occupation.to_vec();
        occ.resize(registry.len(), 0);
        let idx = registry.index(&occ)?;
        let mut out = Self::zero(registry);
        out.amplitudes[idx] = Complex64::new(1.0, 0.0);
        Ok(out)
    }

    /// Sum of `(amplitude, occupation)` terms.
    pub fn from_terms(registry: ModeRegistry, terms: &[(Complex64, &[usize])]) -> Result<Self> {
        let mut out = Self::zero(registry);
        for (amp, occ) in terms {
            let idx = out.registry.index(occ)?;
            out.amplitudes[idx] += amp;
        }
        Ok(out)
    }

    pub fn registry(&self) -> &ModeRegistry {
        &self.registry
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, occupation: &[usize]) -> Result<Complex64> {
        Ok(self.amplitudes[self.registry.index(occupation)?])
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroProbability);
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            registry: self.registry.clone(),
            amplitudes: &self.amplitudes * factor,
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if self.registry != other.registry {
            return Err(Error::DimensionMismatch {
                expected: self.registry.dim(),
                found: other.registry.dim(),
            });
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
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
            amplitudes: &self.amplitudes + &other.amplitudes,
        })
    }

    pub fn relabel(&self, f: impl FnMut(&ModeLabel) -> ModeLabel) -> Result<Self> {
        Ok(Self {
            registry: self.registry.relabel(f)?,
            amplitudes: self.amplitudes.clone(),
        })
    }

    fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.re != 0.0 || a.im != 0.0)
            .map(|(i, _)| i)
    }

    /// Largest photon number found in `mode` among nonzero amplitudes.
    pub fn max_occupation(&self, mode: &ModeLabel) -> Result<usize> {
        let pos = self.registry.position(mode)?;
        Ok(self
            .support()
            .map(|i| self.registry.occupation(i)[pos])
            .max()
            .unwrap_or(0))
    }

    /// Re-embeds the state with a different cutoff on `mode`. Lowering the
    /// cutoff below an occupied level is an error.
    pub fn with_cutoff(&self, mode: &ModeLabel, cutoff: usize) -> Result<Self> {
        let pos = self.registry.position(mode)?;
        if self.max_occupation(mode)? > cutoff {
            return Err(Error::CutoffOverflow(mode.to_string(), mode.to_string()));
        }
        let target = self.registry.with_cutoff(pos, cutoff)?;
        let mut out = Self::zero(target);
        for i in self.support() {
            let occ = self.registry.occupation(i);
            let j = out.registry.index(&occ)?;
            out.amplitudes[j] = self.amplitudes[i];
        }
        Ok(out)
    }

    /// Applies a general two-mode linear transformation of the creation
    /// operators (see [`ModeMatrix2`]). Fails instead of truncating.
    pub fn apply_two_mode(&self, mode_i: &ModeLabel, mode_j: &ModeLabel, b: &ModeMatrix2) -> Result<Self> {
        let pi = self.registry.position(mode_i)?;
        let pj = self.registry.position(mode_j)?;
        if pi == pj {
            return Err(Error::DuplicateMode(mode_i.to_string()));
        }
        let (ci, cj) = (self.registry.cutoff(pi), self.registry.cutoff(pj));
        let strides = self.registry.strides();
        let (si, sj) = (strides[pi], strides[pj]);
        let max_total = ci + cj;
        // coefficient table indexed by (n_i, n_j) -> amplitudes over m_i
        let mut table: Vec<Vec<Complex64>> = Vec::with_capacity((ci + 1) * (cj + 1));
        for ni in 0..=ci {
            for nj in 0..=cj {
                table.push(two_mode_coefficients(b, ni, nj));
            }
        }
        let mut out = DVector::<Complex64>::zeros(self.amplitudes.len());
        for idx in self.support() {
            let amp = self.amplitudes[idx];
            let ni = (idx / si) % (ci + 1);
            let nj = (idx / sj) % (cj + 1);
            let rest = idx - ni * si - nj * sj;
            let total = ni + nj;
            debug_assert!(total <= max_total);
            for (mi, coeff) in table[ni * (cj + 1) + nj].iter().enumerate() {
                if coeff.re == 0.0 && coeff.im == 0.0 {
                    continue;
                }
                let mj = total - mi;
                if mi > ci || mj > cj {
                    return Err(Error::CutoffOverflow(mode_i.to_string(), mode_j.to_string()));
                }
                out[rest + mi * si + mj * sj] += amp * coeff;
            }
        }
        Ok(Self {
            registry: self.registry.clone(),
            amplitudes: out,
        })
    }

    /// Beamsplitter of transmissivity `t` between two modes; norm preserving.
    pub fn apply_beamsplitter(&self, mode_i: &ModeLabel, mode_j: &ModeLabel, t: f64) -> Result<Self> {
        check_unit_interval("transmissivity", t)?;
        self.apply_two_mode(mode_i, mode_j, &beamsplitter_matrix(t))
    }

    /// Pure-loss channel of transmissivity `eta` on `mode`, dilated into a
    /// fresh vacuum environment mode `env` that is appended to the registry.
    /// A photon kept in `mode` picks up amplitude `√η`, one lost to `env`
    /// amplitude `+√(1-η)`.
    pub fn pure_loss_channel(&self, mode: &ModeLabel, eta: f64, env: impl Into<ModeLabel>) -> Result<Self> {
        check_unit_interval("eta", eta)?;
        let env = env.into();
        let photons = self.max_occupation(mode)?.max(1);
        let env_state = StateVector::vacuum(ModeRegistry::new([(env.clone(), photons)])?);
        let joint = self.tensor(&env_state)?;
        // env sits in the first slot so that a†_mode → √η a†_mode + √(1-η) a†_env
        joint.apply_beamsplitter(&env, mode, eta)
    }

    /// `(⟨n| ⊗ I)|ψ⟩` for the given occupations of `modes`; the result lives on
    /// the remaining modes.
    pub fn project(&self, modes: &[ModeLabel], occupation: &[usize]) -> Result<Self> {
        if modes.len() != occupation.len() {
            return Err(Error::DimensionMismatch {
                expected: modes.len(),
                found: occupation.len(),
            });
        }
        let positions = self.registry.positions(modes)?;
        for (k, &p) in positions.iter().enumerate() {
            if occupation[k] > self.registry.cutoff(p) {
                return Err(Error::InvalidCutoff {
                    mode: modes[k].to_string(),
                    cutoff: occupation[k],
                });
            }
        }
        let keep: Vec<usize> = (0..self.registry.len()).filter(|p| !positions.contains(p)).collect();
        let target = self.registry.select(&keep);
        let mut out = Self::zero(target);
        let strides = self.registry.strides();
        let offset: usize = positions.iter().zip(occupation).map(|(&p, &n)| strides[p] * n).sum();
        for j in 0..out.amplitudes.len() {
            let occ = out.registry.occupation(j);
            let idx: usize = offset + keep.iter().zip(&occ).map(|(&p, &n)| strides[p] * n).sum::<usize>();
            out.amplitudes[j] = self.amplitudes[idx];
        }
        Ok(out)
    }

    pub fn density(&self) -> DensityOperator {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityOperator::from_matrix_unchecked(self.registry.clone(), m)
    }

    /// Reduced density operator on `keep`, tracing every other mode. The
    /// kept modes stay in registry order. Avoids forming the full projector.
    pub fn reduced_density(&self, keep: &[ModeLabel]) -> Result<DensityOperator> {
        let mut keep_pos = self.registry.positions(keep)?;
        keep_pos.sort_unstable();
        let trace_pos: Vec<usize> = (0..self.registry.len()).filter(|p| !keep_pos.contains(p)).collect();
        let kreg = self.registry.select(&keep_pos);
        let treg = self.registry.select(&trace_pos);
        let mut psi = DMatrix::<Complex64>::zeros(kreg.dim(), treg.dim());
        for idx in self.support() {
            let occ = self.registry.occupation(idx);
            let ko: Vec<usize> = keep_pos.iter().map(|&p| occ[p]).collect();
            let to: Vec<usize> = trace_pos.iter().map(|&p| occ[p]).collect();
            psi[(kreg.index(&ko)?, treg.index(&to)?)] = self.amplitudes[idx];
        }
        let rho = &psi * psi.adjoint();
        Ok(DensityOperator::from_matrix_unchecked(kreg, rho))
    }
}

impl TensorProduct for StateVector {
    fn tensor(&self, other: &Self) -> Result<Self> {
        let registry = self.registry.concat(&other.registry)?;
        let amplitudes = self.amplitudes.kronecker(&other.amplitudes);
        Ok(Self {
            registry,
            amplitudes,
        })
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Output amplitudes over `m_i = 0..=n_i+n_j` of `|n_i, n_j⟩` under `b`.
fn two_mode_coefficients(b: &ModeMatrix2, ni: usize, nj: usize) -> Vec<Complex64> {
    let total = ni + nj;
    let mut out = vec![Complex64::new(0.0, 0.0); total + 1];
    for k in 0..=ni {
        let ck = b[0][0].powu(k as u32) * b[1][0].powu((ni - k) as u32) * binomial(ni, k);
        if ck.re == 0.0 && ck.im == 0.0 {
            continue;
        }
        for l in 0..=nj {
            let cl = b[0][1].powu(l as u32) * b[1][1].powu((nj - l) as u32) * binomial(nj, l);
            if cl.re == 0.0 && cl.im == 0.0 {
                continue;
            }
            let mi = k + l;
            let norm = (factorial(mi) * factorial(total - mi) / (factorial(ni) * factorial(nj))).sqrt();
            out[mi] += ck * cl * norm;
        }
    }
    out
}
