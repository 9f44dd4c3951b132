use approx::assert_abs_diff_eq;
use dicka_core::heralding::{alternating_ghz, HeraldingOptions, ProtocolParams};
use dicka_core::keyrate::{
    direct_transmission_rate, ec_cost, entropy_bound_parity_chsh, find_threshold, max_secure_distance,
    parity_chsh_win, scenario1_pipeline, SearchOptions,
};
use dicka_core::measurements::{behavior, BehaviorTable, OutcomeDistribution, PartyConfig};
use dicka_core::quantum::{CMatrix, DensityOperator};
use proptest::prelude::*;

const TSIRELSON_WIN: f64 = 0.853_553_390_593_273_7;

fn s1(q: f64, l: f64, eta_e: f64, p_dc: f64) -> f64 {
    scenario1_pipeline(&ProtocolParams::at_distance(4, q, l, eta_e, p_dc), &HeraldingOptions::default())
        .unwrap()
        .raw_rate
}

/// `P_win = ½ + ⅛(⟨A₀B₀⟩ + ⟨A₀B₁⟩ + ⟨A₁B₀B̄⟩ − ⟨A₁B₁B̄⟩)` from ±1 observables.
fn correlator_win(rho: &DensityOperator, cfg: &PartyConfig) -> f64 {
    let obs = |party: usize, input: usize| -> CMatrix {
        let (m0, m1) = cfg.parties[party].bell[input].povm();
        m0.matrix() - m1.matrix()
    };
    let id = CMatrix::identity(2, 2);
    let n = cfg.parties();
    let expect = |x: usize, y: usize, with_rest: bool| -> f64 {
        let mut op = obs(0, x).kronecker(&obs(1, y));
        for k in 2..n {
            op = op.kronecker(&if with_rest { obs(k, 0) } else { id.clone() });
        }
        (rho.matrix() * op).trace().re
    };
    0.5 + (expect(0, 0, false) + expect(0, 1, false) + expect(1, 0, true) - expect(1, 1, true)) / 8.0
}

#[test]
fn ideal_ghz_reaches_tsirelson() {
    let rho = alternating_ghz(4).unwrap().density();
    let cfg = PartyConfig::scenario1(4, 0.0);
    let win = parity_chsh_win(&behavior(&rho, &cfg).unwrap()).unwrap();
    assert_abs_diff_eq!(win, TSIRELSON_WIN, epsilon = 1e-12);
    assert_abs_diff_eq!(correlator_win(&rho, &cfg), TSIRELSON_WIN, epsilon = 1e-12);
}

#[test]
fn win_probability_matches_correlator_oracle_on_noisy_states() {
    for &(q, eta, eta_e, p) in &[(0.9, 0.5, 0.97, 1e-3), (0.6, 0.2, 0.9, 0.01), (0.95, 1.0, 0.8, 0.0)] {
        let params = ProtocolParams {
            parties: 4,
            q,
            eta,
            eta_d: 1.0,
            eta_e,
            p_dc: p,
            p_dc_e: p,
        };
        let e = dicka_core::heralding::heralded_ensemble(&params, &HeraldingOptions::default()).unwrap();
        let cfg = PartyConfig::scenario1(4, p);
        let rho = e.rho_x().unwrap();
        let win = parity_chsh_win(&behavior(rho, &cfg).unwrap()).unwrap();
        assert_abs_diff_eq!(win, correlator_win(rho, &cfg), epsilon = 1e-12);
    }
    let rho = alternating_ghz(6).unwrap().density();
    let cfg = PartyConfig::scenario1(6, 0.0);
    let win = parity_chsh_win(&behavior(&rho, &cfg).unwrap()).unwrap();
    assert_abs_diff_eq!(win, correlator_win(&rho, &cfg), epsilon = 1e-12);
    assert_abs_diff_eq!(win, TSIRELSON_WIN, epsilon = 1e-12);
}

#[test]
fn classical_and_random_behaviors() {
    // a = b₁ = 0 and b̄ = 0: wins unless x = y = 1
    let det = BehaviorTable::from_fn(vec![2, 2, 1, 1], |_, o| if o.iter().all(|&b| b == 0) { 1.0 } else { 0.0 }).unwrap();
    assert_abs_diff_eq!(parity_chsh_win(&det).unwrap(), 0.75, epsilon = 1e-15);
    let uniform = BehaviorTable::from_fn(vec![2, 2, 1, 1], |_, _| 1.0 / 16.0).unwrap();
    assert_abs_diff_eq!(parity_chsh_win(&uniform).unwrap(), 0.5, epsilon = 1e-15);
    assert!(parity_chsh_win(&BehaviorTable::from_fn(vec![1, 2, 1], |_, _| 0.125).unwrap()).is_err());
}

#[test]
fn error_correction_cost_examples() {
    let ghz = OutcomeDistribution::new(
        4,
        (0..16).map(|o| if o == 0b0101 || o == 0b1010 { 0.5 } else { 0.0 }).collect(),
    )
    .unwrap();
    assert_abs_diff_eq!(ec_cost(&ghz).unwrap(), 0.0, epsilon = 1e-15);
    let independent = OutcomeDistribution::new(4, vec![1.0 / 16.0; 16]).unwrap();
    assert_abs_diff_eq!(ec_cost(&independent).unwrap(), 1.0, epsilon = 1e-15);
    // Bob₁ agrees with Alice 90% of the time, others perfectly
    let mut probs = vec![0.0; 8];
    probs[0b000] = 0.45;
    probs[0b111] = 0.45;
    probs[0b011] = 0.05;
    probs[0b100] = 0.05;
    let d = OutcomeDistribution::new(3, probs).unwrap();
    assert_abs_diff_eq!(ec_cost(&d).unwrap(), 0.468_995_593_589_281, epsilon = 1e-12);
}

#[test]
fn ideal_rate_equals_success_probability() {
    let r = scenario1_pipeline(&ProtocolParams::ideal(4, 0.5), &HeraldingOptions::default()).unwrap();
    assert_abs_diff_eq!(r.p_win.unwrap(), TSIRELSON_WIN, epsilon = 1e-9);
    assert!((r.key_rate() - r.p_success).abs() <= 1e-12 * r.p_success);
    assert_abs_diff_eq!(r.p_success, 0.5f64.powi(4) / 2.0, epsilon = 1e-15);
}

#[test]
fn scenario1_range() {
    assert!(s1(0.95, 10.0, 0.97, 1e-6) > 0.0);
    let d = max_secure_distance(|l| Ok(s1(0.95, l, 0.97, 1e-6)), 200.0, SearchOptions::distance()).unwrap();
    assert!((10.0..=100.0).contains(&d), "max distance {d}");
    let mut prev = f64::INFINITY;
    let mut l = 0.0;
    while l < d {
        let k = s1(0.95, l, 0.97, 1e-6);
        assert!(k < prev, "rate not decreasing at {l} km");
        prev = k;
        l += d / 12.0;
    }
}

#[test]
fn poor_local_detectors_give_no_key() {
    for &l in &[0.0, 5.0, 30.0] {
        assert!(s1(0.95, l, 0.90, 1e-6) <= 0.0);
    }
}

#[test]
fn q_trades_rate_against_distance() {
    assert!(s1(0.6, 0.0, 0.97, 1e-6) > s1(0.95, 0.0, 0.97, 1e-6));
    let range = |q: f64| max_secure_distance(|l| Ok(s1(q, l, 0.97, 1e-6)), 200.0, SearchOptions::distance()).unwrap();
    assert!(range(0.95) > range(0.6));
}

#[test]
fn direct_transmission_baseline() {
    let r = direct_transmission_rate(4, 0.0, 1.0, 0.0).unwrap();
    assert_abs_diff_eq!(r.key_rate(), 1.0, epsilon = 1e-7);
    assert!(direct_transmission_rate(4, 0.0, 0.97, 1e-6).unwrap().raw_rate > 0.0);
    assert!(direct_transmission_rate(4, 1.0, 0.97, 1e-6).unwrap().raw_rate <= 0.0);
    let d = max_secure_distance(
        |l| Ok(direct_transmission_rate(4, l, 0.97, 1e-6)?.raw_rate),
        10.0,
        SearchOptions { resolution: 0.01, scan_step: 0.1 },
    )
    .unwrap();
    assert!(d > 0.0 && d < 1.0, "direct range {d}");
}

#[test]
fn threshold_at_fixed_q() {
    let t = find_threshold(|e| Ok(s1(0.95, 0.0, e, 1e-6)), 0.85, 1.0, SearchOptions::threshold()).unwrap();
    assert!((0.92..=0.94).contains(&t), "threshold {t}");
    assert!(s1(0.95, 0.0, t, 1e-6) > 0.0);
    assert!(s1(0.95, 0.0, t - 1e-3, 1e-6) <= 0.0);
}

#[test]
fn six_parties_rate_below_four() {
    let opts = HeraldingOptions::default();
    let p4 = ProtocolParams::at_distance(4, 0.95, 0.0, 0.97, 1e-6);
    let p6 = ProtocolParams { parties: 6, ..p4 };
    let k4 = scenario1_pipeline(&p4, &opts).unwrap().raw_rate;
    let k6 = scenario1_pipeline(&p6, &opts).unwrap().raw_rate;
    assert!(k6 > 0.0 && k6 < k4, "k4 {k4} k6 {k6}");
}

#[test]
fn no_photons_sent_gives_no_key() {
    let r = scenario1_pipeline(&ProtocolParams::ideal(4, 1.0), &HeraldingOptions::default()).unwrap();
    assert_eq!(r.key_rate(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn entropy_bound_is_monotone(a in 0.75f64..TSIRELSON_WIN, b in 0.75f64..TSIRELSON_WIN) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(entropy_bound_parity_chsh(lo) <= entropy_bound_parity_chsh(hi) + 1e-15);
        prop_assert!((0.0..=1.0).contains(&entropy_bound_parity_chsh(hi)));
    }

    #[test]
    fn rate_falls_with_distance_noise_and_local_loss(l in 0.0f64..40.0, eta_e in 0.93f64..1.0, p in 1e-7f64..1e-4) {
        let k = s1(0.95, l, eta_e, p);
        prop_assert!(s1(0.95, l + 2.0, eta_e, p) <= k.max(0.0) + 1e-15);
        prop_assert!(s1(0.95, l, eta_e, p * 3.0) <= k.max(0.0) + 1e-15);
        prop_assert!(s1(0.95, l, eta_e - 0.005, p) <= k.max(0.0) + 1e-15);
    }

    #[test]
    fn reports_are_self_consistent(q in 0.5f64..0.99, l in 0.0f64..60.0) {
        let r = scenario1_pipeline(&ProtocolParams::at_distance(4, q, l, 0.97, 1e-6), &HeraldingOptions::default()).unwrap();
        prop_assert!((r.raw_rate - r.p_success * (r.entropy_bound - r.ec_cost)).abs() <= 1e-15);
        prop_assert!(r.key_rate() >= 0.0 && r.ec_cost >= 0.0);
        prop_assert!((0.0..=1.0).contains(&r.entropy_bound));
    }
}
