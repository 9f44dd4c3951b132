use std::f64::consts::{FRAC_PI_2, PI};

use approx::assert_abs_diff_eq;
use dicka_core::heralding::{alternating_ghz, heralded_ensemble, HeraldingOptions, ProtocolParams};
use dicka_core::measurements::{
    behavior, direct_povm, displaced_povm, keygen_distribution, pauli_povm, BehaviorTable, Displacements,
    MeasurementSetting, PartyConfig,
};
use dicka_core::quantum::{
    conditional_shannon_entropy, shannon_entropy, CMatrix, DensityOperator, LinearOperator, ModeRegistry,
};
use dicka_core::NumericPolicy;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn close(a: &CMatrix, b: &[f64], tol: f64) {
    for i in 0..2 {
        for j in 0..2 {
            assert!((a[(i, j)] - c(b[2 * i + j])).norm() < tol, "{a} vs {b:?}");
        }
    }
}

fn ghz4() -> DensityOperator {
    alternating_ghz(4).unwrap().density()
}

fn mixed(n: usize) -> DensityOperator {
    let reg = ModeRegistry::new((1..=n).map(|k| (format!("X{k}"), 1))).unwrap();
    let d = reg.dim();
    DensityOperator::new(reg, CMatrix::identity(d, d).scale(1.0 / d as f64), &NumericPolicy::default()).unwrap()
}

#[test]
fn pauli_povm_examples() {
    let (m0, m1) = pauli_povm(0.0, 0.0);
    close(m0.matrix(), &[1.0, 0.0, 0.0, 0.0], 1e-15);
    close(m1.matrix(), &[0.0, 0.0, 0.0, 1.0], 1e-15);
    let (m0, m1) = pauli_povm(0.3, 1.0);
    close(m0.matrix(), &[0.0; 4], 1e-15);
    close(m1.matrix(), &[1.0, 0.0, 0.0, 1.0], 1e-15);
    let p = 0.2;
    let (m0, _) = pauli_povm(FRAC_PI_2, p);
    close(m0.matrix(), &[0.5 * (1.0 - p), 0.5 * (1.0 - p), 0.5 * (1.0 - p), 0.5 * (1.0 - p)], 1e-15);
}

#[test]
fn displaced_povm_examples() {
    let (m0, _) = displaced_povm(c(0.0), 0.0, 1);
    close(m0.matrix(), &[1.0, 0.0, 0.0, 0.0], 1e-15);
    let (m0, _) = displaced_povm(c(0.0), 0.1, 1);
    close(m0.matrix(), &[0.9, 0.0, 0.0, 0.0], 1e-15);
    let p = 0.05;
    let e = (1.0 - p) * (-1.0f64).exp();
    let (m0, _) = displaced_povm(c(1.0), p, 1);
    close(m0.matrix(), &[e, e, e, e], 1e-15);
}

#[test]
fn direct_povm_examples() {
    let theta = PI / 4.0;
    let (m0, _) = direct_povm(theta, 1.0, 0.0);
    let (s, co) = theta.sin_cos();
    close(m0.matrix(), &[(1.0 + co) / 2.0, s / 2.0, s / 2.0, (1.0 - co) / 2.0], 1e-15);
    let (m0, m1) = direct_povm(0.7, 0.0, 0.0);
    close(m0.matrix(), &[0.0; 4], 1e-15);
    close(m1.matrix(), &[1.0, 0.0, 0.0, 1.0], 1e-15);
    let cfg = PartyConfig::direct(4, 0.9, 1e-3);
    assert_eq!(cfg.parties[1].bell[0], MeasurementSetting::direct(PI / 4.0, 0.9, 1e-3));
}

#[test]
fn key_settings_agree_between_scenarios() {
    for &p in &[0.0, 1e-6, 0.3] {
        let (a, _) = pauli_povm(0.0, p);
        let (b, _) = displaced_povm(c(0.0), p, 1);
        assert!((a.matrix() - b.matrix()).norm() < 1e-15);
    }
}

#[test]
fn ghz_key_round_outcomes() {
    let cfg = PartyConfig::scenario1(4, 0.0);
    let d = keygen_distribution(&ghz4(), &cfg).unwrap();
    for o in 0..16usize {
        let bits: Vec<usize> = (0..4).map(|k| (o >> (3 - k)) & 1).collect();
        let expect = if bits == [0, 1, 0, 1] || bits == [1, 0, 1, 0] { 0.5 } else { 0.0 };
        assert_abs_diff_eq!(d.prob(&bits), expect, epsilon = 1e-15);
    }
    // Bob₂ sits two positions from Alice: correlated; Bob₁ and Bob₃ anticorrelated.
    let t2 = d.pair_with_alice(2).unwrap();
    assert_abs_diff_eq!(t2.get(0, 0) + t2.get(1, 1), 1.0, epsilon = 1e-15);
    for k in [1, 3] {
        let t = d.pair_with_alice(k).unwrap();
        assert_abs_diff_eq!(t.get(0, 1) + t.get(1, 0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.row_marginal()[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(conditional_shannon_entropy(&t).unwrap(), 0.0, epsilon = 1e-12);
    }
}

#[test]
fn blinded_detectors_give_deterministic_keys() {
    let cfg = PartyConfig::scenario1(4, 1.0);
    let d = keygen_distribution(&ghz4(), &cfg).unwrap();
    assert_abs_diff_eq!(d.prob(&[1, 1, 1, 1]), 1.0, epsilon = 1e-15);
    for k in 1..4 {
        assert_abs_diff_eq!(conditional_shannon_entropy(&d.pair_with_alice(k).unwrap()).unwrap(), 0.0, epsilon = 1e-12);
    }
}

#[test]
fn lost_local_photons_decouple_alice() {
    let p = ProtocolParams::ideal(4, 0.6).with_eta_e(0.0);
    let rho = heralded_ensemble(&p, &HeraldingOptions::default()).unwrap();
    let d = keygen_distribution(rho.rho_x().unwrap(), &PartyConfig::scenario1(4, 0.0)).unwrap();
    for k in 1..4 {
        let t = d.pair_with_alice(k).unwrap();
        let h_a = shannon_entropy(&t.row_marginal());
        assert_abs_diff_eq!(conditional_shannon_entropy(&t).unwrap(), h_a, epsilon = 1e-12);
    }
}

#[test]
fn ghz_z_behavior_and_uniform_noise() {
    let mut cfg = PartyConfig::scenario1(4, 0.0);
    for p in &mut cfg.parties {
        p.bell = [MeasurementSetting::pauli(0.0, 0.0); 2];
    }
    let b = behavior(&ghz4(), &cfg).unwrap();
    assert_eq!(b.inputs(), &[1, 1, 1, 1]);
    assert_abs_diff_eq!(b.prob(&[0; 4], &[0, 1, 0, 1]), 0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(b.prob(&[0; 4], &[1, 0, 1, 0]), 0.5, epsilon = 1e-15);

    let b = behavior(&mixed(4), &PartyConfig::scenario1(4, 0.0)).unwrap();
    for x in b.input_tuples() {
        for o in 0..16usize {
            let bits: Vec<usize> = (0..4).map(|k| (o >> (3 - k)) & 1).collect();
            assert_abs_diff_eq!(b.prob(&x, &bits), 1.0 / 16.0, epsilon = 1e-15);
        }
    }
}

#[test]
fn behavior_table_shapes() {
    let cfg = PartyConfig::scenario1(6, 1e-3);
    assert_eq!(cfg.input_counts(), vec![2, 2, 1, 1, 1, 1]);
    let disp = Displacements::from_reals(4, &[0.5, 0.1, -0.4, 0.3, 0.2]).unwrap();
    assert_eq!(PartyConfig::scenario2(&disp, 0.0).input_counts(), vec![2, 2, 1, 1]);
    assert_eq!(disp.to_reals(), vec![0.5, 0.1, -0.4, 0.3, 0.2]);
    assert!(BehaviorTable::new(vec![2, 2], vec![0.25; 15]).is_err());
    assert!(behavior(&mixed(3), &cfg).is_err());
}

/// Expectation through explicitly formed tensor-product operators.
fn explicit_probability(rho: &DensityOperator, cfg: &PartyConfig, x: &[usize], o: &[usize]) -> f64 {
    let mut op: Option<CMatrix> = None;
    for (k, party) in cfg.parties.iter().enumerate() {
        let (m0, m1) = party.bell[x[k]].povm();
        let f = if o[k] == 0 { m0 } else { m1 };
        op = Some(match op {
            None => f.matrix().clone(),
            Some(acc) => acc.kronecker(f.matrix()),
        });
    }
    let op = LinearOperator::new(rho.registry().clone(), op.unwrap()).unwrap();
    rho.expectation(&op).unwrap().re
}

fn random_density(seed: &[f64]) -> DensityOperator {
    let reg = ModeRegistry::new((1..=4).map(|k| (format!("X{k}"), 1))).unwrap();
    let a = CMatrix::from_fn(16, 16, |i, j| Complex64::new(seed[(3 * i + 5 * j) % seed.len()], seed[(7 * i + j) % seed.len()]));
    let rho = &a * a.adjoint();
    let tr = rho.trace().re;
    DensityOperator::new(reg, rho.unscale(tr), &NumericPolicy::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn povms_are_complete_and_positive(theta in -PI..PI, re in -2.0f64..2.0, im in -2.0f64..2.0, p in 0.0f64..1.0, eta in 0.0f64..1.0) {
        let policy = NumericPolicy::default();
        for (m0, m1) in [pauli_povm(theta, p), displaced_povm(Complex64::new(re, im), p, 1), direct_povm(theta, eta, p)] {
            let sum = m0.matrix() + m1.matrix();
            prop_assert!((sum - CMatrix::identity(2, 2)).norm() < 1e-14);
            prop_assert!(m0.is_psd(&policy) && m1.is_psd(&policy));
        }
    }

    #[test]
    fn behavior_is_normalized_and_non_signaling(seed in prop::collection::vec(-1.0f64..1.0, 11), a in -1.5f64..1.5, b in -1.5f64..1.5, c0 in -1.5f64..1.5, d in -1.5f64..1.5) {
        let rho = random_density(&seed);
        let disp = Displacements::from_reals(4, &[a, b, c0, d, -d]).unwrap();
        for cfg in [PartyConfig::scenario1(4, 0.01), PartyConfig::scenario2(&disp, 0.01)] {
            let t = behavior(&rho, &cfg).unwrap();
            prop_assert!(t.check_normalized(1e-9).is_ok());
            prop_assert!(t.signaling_defect() < 1e-9);
        }
    }

    #[test]
    fn behavior_matches_explicit_tensor_products(seed in prop::collection::vec(-1.0f64..1.0, 13), x0 in 0usize..2, x1 in 0usize..2, o in 0usize..16) {
        let rho = random_density(&seed);
        let disp = Displacements::from_reals(4, &[0.4, -0.2, 0.7, 0.1, 0.3]).unwrap();
        for cfg in [PartyConfig::scenario1(4, 0.02), PartyConfig::scenario2(&disp, 0.02), PartyConfig::direct(4, 0.8, 0.01)] {
            let t = behavior(&rho, &cfg).unwrap();
            let x = [x0, x1, 0, 0];
            let bits: Vec<usize> = (0..4).map(|k| (o >> (3 - k)) & 1).collect();
            let expect = explicit_probability(&rho, &cfg, &x, &bits);
            prop_assert!((t.prob(&x, &bits) - expect).abs() < 1e-13);
        }
    }
}
