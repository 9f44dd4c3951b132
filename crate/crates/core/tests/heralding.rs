use approx::assert_abs_diff_eq;
use dicka_core::heralding::{
    alternating_ghz, brute_force_herald, compose_n6, heralded_ensemble, BellState, BellSuccess, ClickPattern,
    HeraldingOptions, ProtocolParams,
};
use dicka_core::quantum::{ModeRegistry, StateVector};
use dicka_core::NumericPolicy;
use num_complex::Complex64;
use proptest::prelude::*;

fn params(parties: usize, q: f64, eta: f64, eta_e: f64, p_dc: f64) -> ProtocolParams {
    ProtocolParams {
        parties,
        q,
        eta,
        eta_d: 1.0,
        eta_e,
        p_dc,
        p_dc_e: p_dc,
    }
}

fn assert_ensembles_agree(p: &ProtocolParams, options: &HeraldingOptions) {
    let closed = heralded_ensemble(p, options).unwrap();
    let brute = brute_force_herald(p, options).unwrap();
    let (a, b) = (closed.success_probability, brute.success_probability);
    assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-300), "P_success {a} vs {b} at {p:?}");
    let d = closed.rho_x().unwrap().trace_distance(brute.rho_x().unwrap()).unwrap();
    assert!(d <= 1e-10, "trace distance {d} at {p:?}");
}

#[test]
fn closed_form_matches_fock_simulation_on_grid() {
    let options = HeraldingOptions::default();
    for &q in &[0.3, 0.95] {
        for &eta in &[1.0, 0.4] {
            for &eta_e in &[1.0, 0.9] {
                for &p_dc in &[0.0, 1e-3, 0.05] {
                    assert_ensembles_agree(&params(4, q, eta, eta_e, p_dc), &options);
                }
            }
        }
    }
}

#[test]
fn closed_form_matches_fock_simulation_for_every_pattern() {
    for pattern in ClickPattern::all() {
        let options = HeraldingOptions {
            pattern,
            ..Default::default()
        };
        assert_ensembles_agree(&params(4, 0.6, 0.7, 0.85, 0.02), &options);
    }
}

#[test]
fn closed_form_matches_fock_simulation_for_six_parties() {
    assert_ensembles_agree(&params(6, 0.8, 0.6, 0.9, 0.01), &HeraldingOptions::default());
}

#[test]
fn branch_states_match_fock_simulation() {
    let p = params(4, 0.7, 0.5, 0.8, 0.1);
    let closed = heralded_ensemble(&p, &HeraldingOptions::default()).unwrap();
    let brute = brute_force_herald(&p, &HeraldingOptions::default()).unwrap();
    assert_eq!(closed.branches().len(), 4);
    assert_eq!(brute.branches().len(), 4);
    for b in closed.branches() {
        let matched = brute.branches().iter().find(|c| (c.weight - b.weight).abs() < 1e-15 && {
            let diff = c.state.add(&b.state.scaled(Complex64::new(-1.0, 0.0))).unwrap();
            diff.norm() < 1e-12
        });
        assert!(matched.is_some(), "branch with weight {} not reproduced", b.weight);
    }
}

#[test]
fn ideal_limit_gives_alternating_ghz() {
    let ghz = alternating_ghz(4).unwrap();
    for &q in &[0.05, 0.5, 0.95] {
        let e = heralded_ensemble(&ProtocolParams::ideal(4, q), &HeraldingOptions::default()).unwrap();
        let f = e.rho_x().unwrap().fidelity_with_pure(&ghz).unwrap();
        assert_abs_diff_eq!(f, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.success_probability, q * q * (1.0 - q) * (1.0 - q) / 2.0, epsilon = 1e-15);
    }
    let e = heralded_ensemble(&ProtocolParams::ideal(4, 0.95), &HeraldingOptions::default()).unwrap();
    assert_abs_diff_eq!(e.success_probability, 1.128125e-3, epsilon = 1e-9);
}

#[test]
fn no_photons_sent_gives_zero_probability() {
    let e = heralded_ensemble(&ProtocolParams::ideal(4, 1.0), &HeraldingOptions::default()).unwrap();
    assert_eq!(e.success_probability, 0.0);
    assert!(e.rho_x().is_err());
}

#[test]
fn pattern_d1_d3_heralds_paired_ghz() {
    let options = HeraldingOptions {
        pattern: ClickPattern::new(&[1, 3]).unwrap(),
        ..Default::default()
    };
    let e = brute_force_herald(&ProtocolParams::ideal(4, 0.5), &options).unwrap();
    let reg = ModeRegistry::new((1..=4).map(|k| (format!("X{k}"), 1))).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let target = StateVector::from_terms(
        reg,
        &[(Complex64::new(h, 0.0), &[0, 0, 1, 1]), (Complex64::new(-h, 0.0), &[1, 1, 0, 0])],
    )
    .unwrap();
    assert_abs_diff_eq!(e.rho_x().unwrap().fidelity_with_pure(&target).unwrap(), 1.0, epsilon = 1e-12);
}

#[test]
fn six_party_ideal_limit() {
    let p = ProtocolParams::ideal(6, 0.5);
    let e = compose_n6(&p, &HeraldingOptions::default()).unwrap();
    let ghz = alternating_ghz(6).unwrap();
    assert_abs_diff_eq!(e.rho_x().unwrap().fidelity_with_pure(&ghz).unwrap(), 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(e.bell_probability.unwrap(), 0.25, epsilon = 1e-12);
    let single = heralded_ensemble(&ProtocolParams::ideal(4, 0.5), &HeraldingOptions::default()).unwrap();
    assert_abs_diff_eq!(
        e.success_probability,
        single.success_probability.powi(2) * 0.25,
        epsilon = 1e-15
    );
    assert!(compose_n6(&ProtocolParams::ideal(4, 0.5), &HeraldingOptions::default()).is_err());
}

#[test]
fn six_parties_succeed_less_often() {
    let p4 = params(4, 0.9, 0.5, 0.95, 1e-4);
    let p6 = ProtocolParams { parties: 6, ..p4 };
    let e4 = heralded_ensemble(&p4, &HeraldingOptions::default()).unwrap();
    let e6 = heralded_ensemble(&p6, &HeraldingOptions::default()).unwrap();
    assert!(e6.success_probability < e4.success_probability);
}

#[test]
fn bell_conventions() {
    let p = params(6, 0.7, 0.8, 0.9, 1e-3);
    let all = HeraldingOptions {
        bell_success: BellSuccess::AllOutcomes,
        ..Default::default()
    };
    let single = heralded_ensemble(&p, &HeraldingOptions::default()).unwrap();
    let every = heralded_ensemble(&p, &all).unwrap();
    let clicks: f64 = single.interferometers.iter().map(|h| h.click_probability).product();
    assert_abs_diff_eq!(every.success_probability, clicks, epsilon = 1e-15);
    assert_abs_diff_eq!(
        single.success_probability,
        clicks * single.bell_probability.unwrap(),
        epsilon = 1e-18
    );
    let mut total = 0.0;
    for b in BellState::ALL {
        let o = HeraldingOptions {
            bell_state: b,
            ..Default::default()
        };
        total += heralded_ensemble(&p, &o).unwrap().bell_probability.unwrap();
    }
    assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
}

#[test]
fn all_patterns_are_equally_likely() {
    let p = params(4, 0.8, 0.6, 0.9, 1e-3);
    let one = heralded_ensemble(&p, &HeraldingOptions::default()).unwrap();
    let agg = HeraldingOptions {
        all_click_patterns: true,
        ..Default::default()
    };
    let all = heralded_ensemble(&p, &agg).unwrap();
    assert_abs_diff_eq!(all.success_probability, 6.0 * one.success_probability, epsilon = 1e-15);
}

#[test]
fn station_detector_efficiency_composes_with_fiber_loss() {
    let mut a = params(4, 0.8, 0.5, 0.9, 1e-3);
    a.eta_d = 0.6;
    let b = params(4, 0.8, 0.3, 0.9, 1e-3);
    let ea = heralded_ensemble(&a, &HeraldingOptions::default()).unwrap();
    let eb = heralded_ensemble(&b, &HeraldingOptions::default()).unwrap();
    assert_abs_diff_eq!(ea.success_probability, eb.success_probability, epsilon = 1e-18);
}

#[test]
fn low_q_success_probability_peaks_at_half_arrival() {
    let at = |q: f64, l: f64| {
        let p = ProtocolParams::at_distance(4, q, l, 0.5, 0.0);
        heralded_ensemble(&p, &HeraldingOptions::default()).unwrap().success_probability
    };
    assert_abs_diff_eq!(at(0.05, 0.0), at(0.95, 0.0), epsilon = 1e-15);
    assert!(at(0.05, 5.0) > at(0.05, 0.0));
    assert!(at(0.05, 60.0) < at(0.05, 20.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ensemble_is_a_valid_state(q in 0.01f64..0.99, eta in 0.01f64..1.0, eta_e in 0.5f64..1.0, p_dc in 0.0f64..0.1) {
        let e = heralded_ensemble(&params(4, q, eta, eta_e, p_dc), &HeraldingOptions::default()).unwrap();
        prop_assert!((0.0..=1.0).contains(&e.success_probability));
        let rho = e.rho_x().unwrap();
        prop_assert!(rho.is_valid(&NumericPolicy::default()));
        for b in e.branches() {
            prop_assert!(b.weight >= 0.0);
        }
    }

    // monotone only once the arrival probability (1 - q)·η is at most 1/2
    #[test]
    fn success_probability_falls_with_distance(q in 0.5f64..0.95, eta_e in 0.5f64..1.0, l in 0.0f64..100.0, dl in 0.1f64..20.0) {
        let near = ProtocolParams::at_distance(4, q, l, eta_e, 0.0);
        let far = near.with_distance(l + dl);
        let pn = heralded_ensemble(&near, &HeraldingOptions::default()).unwrap().success_probability;
        let pf = heralded_ensemble(&far, &HeraldingOptions::default()).unwrap().success_probability;
        prop_assert!(pf <= pn * (1.0 + 1e-12));
    }

    #[test]
    fn party_relabeling_symmetry(q in 0.05f64..0.95, eta in 0.05f64..1.0, eta_e in 0.5f64..1.0, p_dc in 0.0f64..0.05) {
        let e = heralded_ensemble(&params(4, q, eta, eta_e, p_dc), &HeraldingOptions::default()).unwrap();
        let rho = e.rho_x().unwrap();
        let swapped = rho.relabel(|l| {
            let s = match l.as_str() { "X1" => "X3", "X3" => "X1", "X2" => "X4", "X4" => "X2", o => o };
            s.into()
        }).unwrap();
        let target = rho.registry().labels().to_vec();
        let permuted = permute(&swapped, &target);
        prop_assert!(permuted.trace_distance(rho).unwrap() < 1e-12);
    }
}

fn permute(
    rho: &dicka_core::quantum::DensityOperator,
    order: &[dicka_core::quantum::ModeLabel],
) -> dicka_core::quantum::DensityOperator {
    let reg = rho.registry();
    let target = ModeRegistry::new(order.iter().map(|l| (l.clone(), 1))).unwrap();
    let pos = reg.positions(order).unwrap();
    let dim = reg.dim();
    let mut m = nalgebra::DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let oi = target.occupation(i);
            let oj = target.occupation(j);
            let mut si = vec![0; oi.len()];
            let mut sj = vec![0; oj.len()];
            for (k, &p) in pos.iter().enumerate() {
                si[p] = oi[k];
                sj[p] = oj[k];
            }
            m[(i, j)] = rho.matrix()[(reg.index(&si).unwrap(), reg.index(&sj).unwrap())];
        }
    }
    dicka_core::quantum::DensityOperator::new(target, m, &NumericPolicy::default()).unwrap()
}
