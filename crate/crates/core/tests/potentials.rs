mod common;

use cbce::potentials::{BettorState, PotentialKind};
use proptest::prelude::*;

fn history() -> impl Strategy<Value = Vec<(bool, f64)>> {
    prop::collection::vec((any::<bool>(), -1.0f64..=1.0), 0..64)
        .prop_map(|h| h.into_iter().map(|(a, z)| (a, if a { z } else { 0.0 })).collect())
}

fn awake_flips(h: &[(bool, f64)]) -> Vec<f64> {
    h.iter().filter(|(a, _)| *a).map(|&(_, z)| z).collect()
}

fn kinds() -> impl Strategy<Value = PotentialKind> {
    prop_oneof![Just(PotentialKind::kt()), Just(PotentialKind::an())]
}

#[test]
fn lanczos_oracle_matches_known_values() {
    let sqrt_pi = std::f64::consts::PI.sqrt();
    assert!((common::ln_gamma(0.5) - sqrt_pi.ln()).abs() < 1e-14);
    assert!(common::ln_gamma(1.0).abs() < 1e-14);
    assert!((common::ln_gamma(5.0) - 24f64.ln()).abs() < 1e-13);
    assert!((common::ln_gamma(1.5) - (0.5 * sqrt_pi).ln()).abs() < 1e-14);
}

#[test]
fn potential_examples_against_oracle() {
    let kt = PotentialKind::kt();
    let s = BettorState::replay(&[(true, 1.0)], kt).unwrap();
    assert!((s.potential_value(kt).unwrap() - 1.0).abs() < 1e-12);
    assert!(common::log_potential(&[1.0], kt).abs() < 1e-13);
    let an = PotentialKind::an();
    assert!(common::log_potential(&[1.0], an).abs() < 1e-15);
}

#[test]
fn kt_fraction_example_matches_ratio() {
    let kt = PotentialKind::kt();
    let s = BettorState::replay(&[(true, 1.0), (true, 1.0)], kt).unwrap();
    assert!((s.betting_fraction(kt) - 2.0 / 3.0).abs() < 1e-15);
    assert!((common::ratio_fraction(&[1.0, 1.0], kt) - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn an_fraction_example_matches_ratio() {
    let an = PotentialKind::an();
    let s = BettorState::replay(&[(true, 1.0)], an).unwrap();
    let sigmoid = 1.0 / (1.0 + (-2.0f64 / 3.0).exp());
    assert!((s.betting_fraction(an) - (2.0 * sigmoid - 1.0)).abs() < 1e-15);
    assert!((s.betting_fraction(an) - 0.32151).abs() < 1e-5);
    assert!((common::ratio_fraction(&[1.0], an) - s.betting_fraction(an)).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn wealth_dominates_potential(h in history(), kind in kinds()) {
        let s = BettorState::replay(&h, kind).unwrap();
        let f = common::log_potential(&awake_flips(&h), kind).exp();
        prop_assert!(s.wealth() >= f - 1e-9, "wealth {} < F {}", s.wealth(), f);
    }

    #[test]
    fn fraction_matches_ratio_oracle(h in history(), kind in kinds()) {
        let s = BettorState::replay(&h, kind).unwrap();
        let oracle = common::ratio_fraction(&awake_flips(&h), kind);
        prop_assert!((s.betting_fraction(kind) - oracle).abs() <= 1e-8);
    }

    #[test]
    fn library_potential_matches_oracle(h in history(), kind in kinds()) {
        let s = BettorState::replay(&h, kind).unwrap();
        let oracle = common::log_potential(&awake_flips(&h), kind);
        prop_assert!((s.log_potential(kind) - oracle).abs() <= 1e-9 * (1.0 + oracle.abs()));
    }

    #[test]
    fn negated_history_negates_fraction(h in history(), kind in kinds()) {
        let neg: Vec<_> = h.iter().map(|&(a, z)| (a, -z)).collect();
        let b = BettorState::replay(&h, kind).unwrap().betting_fraction(kind);
        let nb = BettorState::replay(&neg, kind).unwrap().betting_fraction(kind);
        prop_assert_eq!(b, -nb);
    }

    #[test]
    fn state_invariants(h in history(), kind in kinds()) {
        let s = BettorState::replay(&h, kind).unwrap();
        prop_assert!(s.sum_z().abs() <= s.abs_sum_z() + 1e-12);
        prop_assert!(s.abs_sum_z() <= s.awake_count() as f64 + 1e-12);
        prop_assert!(s.betting_fraction(kind).abs() < 1.0);
        if s.awake_count() == 0 {
            prop_assert_eq!(s.wealth(), 1.0);
        }
    }

    #[test]
    fn zero_flips_keep_unit_wealth(mask in prop::collection::vec(any::<bool>(), 0..64), kind in kinds()) {
        let h: Vec<_> = mask.into_iter().map(|a| (a, 0.0)).collect();
        prop_assert_eq!(BettorState::replay(&h, kind).unwrap().wealth(), 1.0);
    }
}
