//! Binary measurements of the parties and the behaviors they produce on a
//! heralded state.
//!
//! Party qubits use the photon-number encoding `|0⟩, |1⟩` with
//! `σ_Z = diag(1, −1)`. Outcome 0 always belongs to the POVM element `M₀`.
//! Local detector loss is already part of the heralded state, so none of the
//! constructors here apply `η_e` again.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{check_unit_interval, Error, Result};
use crate::quantum::{coherent_overlap_gram, CMatrix, DensityOperator, JointTable, LinearOperator, ModeRegistry};

/// `Π(θ) = cos θ σ_Z + sin θ σ_X`.
fn pauli_plane(theta: f64) -> CMatrix {
    let (s, c) = theta.sin_cos();
    CMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(c, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(-c, 0.0),
        ],
    )
}

fn complete(m0: CMatrix) -> (LinearOperator, LinearOperator) {
    let reg = ModeRegistry::new([("X", m0.nrows() - 1)]).expect("cutoff ≥ 1");
    let m1 = CMatrix::identity(m0.nrows(), m0.nrows()) - &m0;
    (
        LinearOperator::new(reg.clone(), m0).expect("square"),
        LinearOperator::new(reg, m1).expect("square"),
    )
}

/// `M₀ = (1−p)(I + Π(θ))/2`, `M₁ = I − M₀`.
pub fn pauli_povm(theta: f64, p_dc_e: f64) -> (LinearOperator, LinearOperator) {
    let id = CMatrix::identity(2, 2);
    complete((id + pauli_plane(theta)).scale(0.5 * (1.0 - p_dc_e)))
}

/// `M₀ = (1−p)|α⟩⟨α|` truncated to photon numbers `0..=cutoff`.
pub fn displaced_povm(alpha: Complex64, p_dc_e: f64, cutoff: usize) -> (LinearOperator, LinearOperator) {
    let gram = coherent_overlap_gram(alpha, cutoff);
    complete(gram.matrix().scale(1.0 - p_dc_e))
}

/// Lossy, noisy Pauli-plane measurement used by the direct-transmission
/// baseline: `M₀ = {1 − (1−p)(1−η)}(I+Π)/2 + p(I−Π)/2`.
pub fn direct_povm(theta: f64, eta_eff: f64, p_dc: f64) -> (LinearOperator, LinearOperator) {
    let id = CMatrix::identity(2, 2);
    let pi = pauli_plane(theta);
    let keep = 1.0 - (1.0 - p_dc) * (1.0 - eta_eff);
    complete((&id + &pi).scale(0.5 * keep) + (&id - &pi).scale(0.5 * p_dc))
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SettingKind {
    PauliPlane { theta: f64 },
    Displaced { alpha: Complex64 },
    DirectTransmission { theta: f64, eta_eff: f64 },
}

/// One binary measurement of a party, including its detector dark counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementSetting {
    pub kind: SettingKind,
    pub p_dc: f64,
}

impl MeasurementSetting {
    pub fn pauli(theta: f64, p_dc: f64) -> Self {
        Self {
            kind: SettingKind::PauliPlane { theta: wrap_angle(theta) },
            p_dc,
        }
    }

    pub fn displaced(alpha: Complex64, p_dc: f64) -> Self {
        Self {
            kind: SettingKind::Displaced { alpha },
            p_dc,
        }
    }

    pub fn direct(theta: f64, eta_eff: f64, p_dc: f64) -> Self {
        Self {
            kind: SettingKind::DirectTransmission {
                theta: wrap_angle(theta),
                eta_eff,
            },
            p_dc,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_unit_interval("p_dc", self.p_dc)?;
        match self.kind {
            SettingKind::PauliPlane { theta } | SettingKind::DirectTransmission { theta, .. } => {
                if !(theta > -PI && theta <= PI) {
                    return Err(Error::OutOfRange { name: "theta", value: theta });
                }
            }
            SettingKind::Displaced { alpha } => {
                if !alpha.re.is_finite() || !alpha.im.is_finite() {
                    return Err(Error::OutOfRange { name: "alpha", value: alpha.norm() });
                }
            }
        }
        if let SettingKind::DirectTransmission { eta_eff, .. } = self.kind {
            check_unit_interval("eta_eff", eta_eff)?;
        }
        Ok(())
    }

    /// POVM on the party qubit.
    pub fn povm(&self) -> (LinearOperator, LinearOperator) {
        match self.kind {
            SettingKind::PauliPlane { theta } => pauli_povm(theta, self.p_dc),
            SettingKind::Displaced { alpha } => displaced_povm(alpha, self.p_dc, 1),
            SettingKind::DirectTransmission { theta, eta_eff } => direct_povm(theta, eta_eff, self.p_dc),
        }
    }

    fn m0(&self) -> CMatrix {
        self.povm().0.matrix().clone()
    }
}

/// Key-generation setting and the two Bell-test settings of one party.
#[derive(Debug, Clone, PartialEq)]
pub struct PartySettings {
    pub key: MeasurementSetting,
    pub bell: [MeasurementSetting; 2],
}

impl PartySettings {
    /// A party whose two Bell settings coincide has a fixed input.
    pub fn fixed_input(&self) -> bool {
        self.bell[0] == self.bell[1]
    }
}

/// Settings of all parties, Alice first.
#[derive(Debug, Clone, PartialEq)]
pub struct PartyConfig {
    pub parties: Vec<PartySettings>,
}

/// Displacement amplitudes for the displaced-detection scenario. Alice's
/// first setting is pinned to zero, which is also the key setting of every
/// party.
#[derive(Debug, Clone, PartialEq)]
pub struct Displacements {
    pub alice_a1: Complex64,
    /// Two settings for each Bob, `Bob₁` first. Equal entries mean a fixed
    /// input.
    pub bobs: Vec<[Complex64; 2]>,
}

impl Displacements {
    /// Real displacements with one fixed setting for `Bob₂..Bob_{N−1}`:
    /// `[A₁, B₀¹, B₁¹, β₂, …, β_{N−1}]`.
    pub fn from_reals(parties: usize, values: &[f64]) -> Result<Self> {
        if parties < 2 || values.len() != parties + 1 {
            return Err(Error::DimensionMismatch {
                expected: parties + 1,
                found: values.len(),
            });
        }
        let c = |x: f64| Complex64::new(x, 0.0);
        let mut bobs = vec![[c(values[1]), c(values[2])]];
        for &v in &values[3..] {
            bobs.push([c(v), c(v)]);
        }
        Ok(Self {
            alice_a1: c(values[0]),
            bobs,
        })
    }

    pub fn zeros(parties: usize) -> Self {
        Self::from_reals(parties, &vec![0.0; parties + 1]).expect("length matches")
    }

    pub fn parties(&self) -> usize {
        self.bobs.len() + 1
    }

    /// Real parts, flattened in the `from_reals` layout when every Bob beyond
    /// the first has a fixed input.
    pub fn to_reals(&self) -> Vec<f64> {
        let mut out = vec![self.alice_a1.re, self.bobs[0][0].re, self.bobs[0][1].re];
        for b in &self.bobs[1..] {
            out.push(b[0].re);
        }
        out
    }
}

impl PartyConfig {
    pub fn parties(&self) -> usize {
        self.parties.len()
    }

    /// Pauli-plane settings: `A = M(0), M(π/2)`, `B¹ = M(−3π/4), M(3π/4)`,
    /// the other Bobs `M(π/2)`; key round `M(0)` everywhere.
    pub fn scenario1(parties: usize, p_dc_e: f64) -> Self {
        let m = |t: f64| MeasurementSetting::pauli(t, p_dc_e);
        let mut out = vec![
            PartySettings {
                key: m(0.0),
                bell: [m(0.0), m(PI / 2.0)],
            },
            PartySettings {
                key: m(0.0),
                bell: [m(-3.0 * PI / 4.0), m(3.0 * PI / 4.0)],
            },
        ];
        for _ in 2..parties {
            out.push(PartySettings {
                key: m(0.0),
                bell: [m(PI / 2.0), m(PI / 2.0)],
            });
        }
        Self { parties: out }
    }

    /// Displaced photon detection; the key round uses `α = 0` everywhere.
    pub fn scenario2(displacements: &Displacements, p_dc_e: f64) -> Self {
        let m = |a: Complex64| MeasurementSetting::displaced(a, p_dc_e);
        let zero = Complex64::new(0.0, 0.0);
        let mut out = vec![PartySettings {
            key: m(zero),
            bell: [m(zero), m(displacements.alice_a1)],
        }];
        for b in &displacements.bobs {
            out.push(PartySettings {
                key: m(zero),
                bell: [m(b[0]), m(b[1])],
            });
        }
        Self { parties: out }
    }

    /// Direct-transmission baseline: `A = M^d(0), M^d(π/2)`,
    /// `B¹ = M^d(π/4), M^d(−π/4)`, the other Bobs `M^d(π/2)`.
    pub fn direct(parties: usize, eta_eff: f64, p_dc: f64) -> Self {
        let m = |t: f64| MeasurementSetting::direct(t, eta_eff, p_dc);
        let mut out = vec![
            PartySettings {
                key: m(0.0),
                bell: [m(0.0), m(PI / 2.0)],
            },
            PartySettings {
                key: m(0.0),
                bell: [m(PI / 4.0), m(-PI / 4.0)],
            },
        ];
        for _ in 2..parties {
            out.push(PartySettings {
                key: m(0.0),
                bell: [m(PI / 2.0), m(PI / 2.0)],
            });
        }
        Self { parties: out }
    }

    pub fn validate(&self) -> Result<()> {
        if self.parties.len() < 2 {
            return Err(Error::UnsupportedParties(self.parties.len()));
        }
        for p in &self.parties {
            p.key.validate()?;
            p.bell[0].validate()?;
            p.bell[1].validate()?;
        }
        Ok(())
    }

    /// Number of Bell-test inputs per party (1 for fixed-input parties).
    pub fn input_counts(&self) -> Vec<usize> {
        self.parties.iter().map(|p| if p.fixed_input() { 1 } else { 2 }).collect()
    }
}

/// `P(a, b₁ … b_{N−1} | x, y₁ … y_{N−1})` for binary outcomes. Parties with
/// a fixed input carry a single input value `0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorTable {
    inputs: Vec<usize>,
    data: Vec<f64>,
}

impl BehaviorTable {
    /// `data` is indexed by input tuple (mixed radix, first party most
    /// significant) times `2^N` plus the outcome string with party 1 as
    /// the most significant bit.
    pub fn new(inputs: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n = inputs.len();
        if n == 0 || inputs.iter().any(|&k| k == 0) {
            return Err(Error::MalformedBehavior("every party needs at least one input".into()));
        }
        let expected = inputs.iter().product::<usize>() << n;
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: data.len(),
            });
        }
        Ok(Self { inputs, data })
    }

    /// Builds a table from a closure over `(inputs, outcomes)`.
    pub fn from_fn(inputs: Vec<usize>, mut f: impl FnMut(&[usize], &[usize]) -> f64) -> Result<Self> {
        let n = inputs.len();
        let mut data = Vec::new();
        for xi in 0..inputs.iter().product::<usize>() {
            let x = unrank(xi, &inputs);
            for o in 0..(1usize << n) {
                data.push(f(&x, &bits(o, n)));
            }
        }
        Self::new(inputs, data)
    }

    pub fn parties(&self) -> usize {
        self.inputs.len()
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn input_tuples(&self) -> Vec<Vec<usize>> {
        (0..self.inputs.iter().product::<usize>()).map(|i| unrank(i, &self.inputs)).collect()
    }

    fn offset(&self, x: &[usize]) -> usize {
        let mut idx = 0;
        for (k, &xi) in x.iter().enumerate() {
            idx = idx * self.inputs[k] + xi.min(self.inputs[k] - 1);
        }
        idx << self.parties()
    }

    /// Probability of an outcome string. Inputs beyond a party's range are
    /// read as its last input, so a fixed-input party accepts `y = 1` too.
    pub fn prob(&self, x: &[usize], outcomes: &[usize]) -> f64 {
        let o = outcomes.iter().fold(0usize, |acc, &b| (acc << 1) | b);
        self.data[self.offset(x) + o]
    }

    /// Marginal of the `subset` parties with the given outcomes.
    pub fn marginal(&self, x: &[usize], subset: &[usize], outcomes: &[usize]) -> f64 {
        let n = self.parties();
        let base = self.offset(x);
        (0..(1usize << n))
            .filter(|&o| subset.iter().zip(outcomes).all(|(&p, &b)| (o >> (n - 1 - p)) & 1 == b))
            .map(|o| self.data[base + o])
            .sum()
    }

    /// `⟨Π_{k∈subset} (−1)^{o_k}⟩` at inputs `x`.
    pub fn correlator(&self, x: &[usize], subset: &[usize]) -> f64 {
        let n = self.parties();
        let base = self.offset(x);
        (0..(1usize << n))
            .map(|o| {
                let parity = subset.iter().map(|&p| (o >> (n - 1 - p)) & 1).sum::<usize>() % 2;
                if parity == 0 {
                    self.data[base + o]
                } else {
                    -self.data[base + o]
                }
            })
            .sum()
    }

    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let block = 1usize << self.parties();
        for chunk in self.data.chunks(block) {
            if chunk.iter().any(|&p| p < -tol || !p.is_finite()) {
                return Err(Error::MalformedBehavior("negative or non-finite probability".into()));
            }
            let s: f64 = chunk.iter().sum();
            if (s - 1.0).abs() > tol {
                return Err(Error::NotNormalized(s));
            }
        }
        Ok(())
    }

    /// Largest violation of no-signaling: every single-party marginal must
    /// be independent of the other parties' inputs.
    pub fn signaling_defect(&self) -> f64 {
        let tuples = self.input_tuples();
        let mut worst: f64 = 0.0;
        for p in 0..self.parties() {
            for x in &tuples {
                for y in &tuples {
                    if x[p] != y[p] {
                        continue;
                    }
                    let d = self.marginal(x, &[p], &[0]) - self.marginal(y, &[p], &[0]);
                    worst = worst.max(d.abs());
                }
            }
        }
        worst
    }

    pub fn check_no_signaling(&self, tol: f64) -> Result<()> {
        let d = self.signaling_defect();
        if d > tol {
            return Err(Error::MalformedBehavior(format!("signaling defect {d:e}")));
        }
        Ok(())
    }
}

pub(crate) fn bits(value: usize, n: usize) -> Vec<usize> {
    (0..n).map(|k| (value >> (n - 1 - k)) & 1).collect()
}

fn unrank(mut index: usize, radix: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radix.len()];
    for k in (0..radix.len()).rev() {
        out[k] = index % radix[k];
        index /= radix[k];
    }
    out
}

/// `Tr[ρ ⊗_k E_k]` for single-qubit operators `E_k`, without forming the
/// product operator.
fn product_expectation(rho: &CMatrix, factors: &[&CMatrix]) -> f64 {
    let n = factors.len();
    let dim = 1usize << n;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..dim {
        for j in 0..dim {
            let r = rho[(i, j)];
            if r.re == 0.0 && r.im == 0.0 {
                continue;
            }
            // Tr[ρ E] = Σ ρ_ij E_ji
            let mut e = Complex64::new(1.0, 0.0);
            for (k, f) in factors.iter().enumerate() {
                let (bi, bj) = ((i >> (n - 1 - k)) & 1, (j >> (n - 1 - k)) & 1);
                e *= f[(bj, bi)];
                if e.re == 0.0 && e.im == 0.0 {
                    break;
                }
            }
            acc += r * e;
        }
    }
    acc.re
}

fn check_qubits(rho: &DensityOperator, parties: usize) -> Result<()> {
    if rho.registry().len() != parties || rho.registry().cutoffs().iter().any(|&c| c != 1) {
        return Err(Error::DimensionMismatch {
            expected: 1 << parties,
            found: rho.registry().dim(),
        });
    }
    Ok(())
}

/// Bell-test behavior of `rho` under `config`.
pub fn behavior(rho: &DensityOperator, config: &PartyConfig) -> Result<BehaviorTable> {
    config.validate()?;
    let n = config.parties();
    check_qubits(rho, n)?;
    let elements: Vec<[CMatrix; 2]> = config
        .parties
        .iter()
        .flat_map(|p| {
            p.bell.iter().map(|s| {
                let m0 = s.m0();
                let m1 = CMatrix::identity(2, 2) - &m0;
                [m0, m1]
            })
        })
        .collect();
    BehaviorTable::from_fn(config.input_counts(), |x, o| {
        let factors: Vec<&CMatrix> = (0..n).map(|k| &elements[2 * k + x[k]][o[k]]).collect();
        product_expectation(rho.matrix(), &factors)
    })
}

/// Joint outcome distribution of a key-generation round.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    parties: usize,
    probs: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn new(parties: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != 1 << parties {
            return Err(Error::DimensionMismatch {
                expected: 1 << parties,
                found: probs.len(),
            });
        }
        Ok(Self { parties, probs })
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn prob(&self, outcomes: &[usize]) -> f64 {
        self.probs[outcomes.iter().fold(0usize, |acc, &b| (acc << 1) | b)]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Joint table of Alice (rows) and party `k` (columns).
    pub fn pair_with_alice(&self, k: usize) -> Result<JointTable> {
        if k == 0 || k >= self.parties {
            return Err(Error::MalformedBehavior(format!("no party {k} to pair with Alice")));
        }
        let n = self.parties;
        let mut t = [0.0; 4];
        for (o, &p) in self.probs.iter().enumerate() {
            let a = (o >> (n - 1)) & 1;
            let b = (o >> (n - 1 - k)) & 1;
            t[2 * a + b] += p;
        }
        JointTable::new(2, 2, t.to_vec())
    }
}

/// Outcome distribution when every party uses its key setting.
pub fn keygen_distribution(rho: &DensityOperator, config: &PartyConfig) -> Result<OutcomeDistribution> {
    config.validate()?;
    let n = config.parties();
    check_qubits(rho, n)?;
    let elements: Vec<[CMatrix; 2]> = config
        .parties
        .iter()
        .map(|p| {
            let m0 = p.key.m0();
            let m1 = CMatrix::identity(2, 2) - &m0;
            [m0, m1]
        })
        .collect();
    let probs = (0..(1usize << n))
        .map(|o| {
            let ob = bits(o, n);
            let factors: Vec<&CMatrix> = (0..n).map(|k| &elements[k][ob[k]]).collect();
            product_expectation(rho.matrix(), &factors)
        })
        .collect();
    OutcomeDistribution::new(n, probs)
}

/// `(|0…0⟩ + |1…1⟩)/√2` as a density operator on `X1..XN`.
pub fn standard_ghz(parties: usize) -> Result<DensityOperator> {
    let reg = ModeRegistry::new((1..=parties).map(|k| (format!("X{k}"), 1)))?;
    let dim = reg.dim();
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for &i in &[0, dim - 1] {
        for &j in &[0, dim - 1] {
            m[(i, j)] = 0.5;
        }
    }
    DensityOperator::new(reg, m.map(|v| Complex64::new(v, 0.0)), &Default::default())
}
