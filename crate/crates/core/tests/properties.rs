use proptest::prelude::*;

use reset_ldp::dist::WaitingTimeModel;
use reset_ldp::functionals::FunctionalModel;
use reset_ldp::phi::{PhiRegime, ResetModel};
use reset_ldp::rate::{RateRegime, RateSolver};

fn occupation(d: WaitingTimeModel) -> ResetModel {
    ResetModel::new(FunctionalModel::occupation(), d)
}

fn dist_strategy() -> impl Strategy<Value = WaitingTimeModel> {
    prop_oneof![
        (0.2f64..3.0).prop_map(|r| WaitingTimeModel::exponential(r).unwrap()),
        (0.2f64..3.0).prop_map(|r| WaitingTimeModel::cubic(r).unwrap()),
        (1.2f64..3.0).prop_map(|a| WaitingTimeModel::exp_poly(a).unwrap()),
        (0.2f64..0.9).prop_map(|b| WaitingTimeModel::stretched(b).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn phi_is_concave(d in dist_strategy(), k1 in -4.0f64..4.0, k2 in -4.0f64..4.0, t in 0.05f64..0.95) {
        let m = occupation(d);
        let mid = t * k1 + (1.0 - t) * k2;
        let chord = t * m.phi(k1).unwrap().value + (1.0 - t) * m.phi(k2).unwrap().value;
        prop_assert!(m.phi(mid).unwrap().value >= chord - 1e-9);
    }

    #[test]
    fn area_phi_is_concave(r in 0.2f64..3.0, k1 in -2.0f64..2.0, k2 in -2.0f64..2.0, t in 0.05f64..0.95) {
        let m = ResetModel::new(FunctionalModel::area(), WaitingTimeModel::cubic(r).unwrap());
        let mid = t * k1 + (1.0 - t) * k2;
        let chord = t * m.phi(k1).unwrap().value + (1.0 - t) * m.phi(k2).unwrap().value;
        prop_assert!(m.phi(mid).unwrap().value >= chord - 1e-9);
    }

    #[test]
    fn occupation_phi_symmetry(d in dist_strategy(), k in -5.0f64..5.0) {
        let m = occupation(d);
        let (a, b) = (m.phi(-k).unwrap(), m.phi(k).unwrap());
        prop_assert!((a.value - b.value - k).abs() < 1e-9, "{a:?} {b:?}");
    }

    #[test]
    fn interior_roots_have_small_residual(d in dist_strategy(), k in -5.0f64..5.0) {
        let p = occupation(d).phi(k).unwrap();
        if p.regime == PhiRegime::InteriorRoot {
            prop_assert!(p.residual.unwrap() < 1e-9);
        }
    }

    #[test]
    fn varpi_dominates_phi(d in dist_strategy(), k in -5.0f64..5.0) {
        let m = occupation(d);
        let phi = m.phi(k).unwrap().value;
        prop_assert!(m.varpi(k).value >= phi - 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn occupation_rate_reflection(r in 0.3f64..3.0, w in 0.01f64..0.49) {
        let m = occupation(WaitingTimeModel::exponential(r).unwrap());
        let s = RateSolver::new(&m).unwrap();
        let (a, b) = (s.rate_at(0.5 - w).unwrap().value, s.rate_at(0.5 + w).unwrap().value);
        prop_assert!((a - b).abs() < 1e-8);
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn area_rate_is_even(r in 0.3f64..3.0, w in 0.05f64..10.0) {
        let m = ResetModel::new(FunctionalModel::area(), WaitingTimeModel::cubic(r).unwrap());
        let s = RateSolver::new(&m).unwrap();
        prop_assert!((s.rate_at(-w).unwrap().value - s.rate_at(w).unwrap().value).abs() < 1e-8);
    }

    #[test]
    fn subgradient_consistency(d in dist_strategy(), w in 0.03f64..0.97) {
        let m = occupation(d);
        let s = RateSolver::new(&m).unwrap();
        let p = s.rate_at(w).unwrap();
        if p.regime == RateRegime::Interior {
            prop_assert!((w + m.phi_prime(p.k_star).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn duality_round_trip(k in -2.4f64..2.4) {
        let m = ResetModel::new(FunctionalModel::area(), WaitingTimeModel::cubic(1.0).unwrap());
        let s = RateSolver::new(&m).unwrap();
        let phi = m.phi(k).unwrap().value;
        let w0 = -m.phi_prime(k).unwrap();
        let best = (-40..=40)
            .map(|j| {
                let w = w0 + j as f64 * 2.5e-4;
                k * w - s.rate_at(w).unwrap().value
            })
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((best + phi).abs() < 1e-5);
    }

    #[test]
    fn rate_is_monotone_away_from_mean(d in dist_strategy(), a in 0.0f64..0.5, b in 0.0f64..0.5) {
        let m = occupation(d);
        let s = RateSolver::new(&m).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(s.rate_at(0.5 + hi).unwrap().value >= s.rate_at(0.5 + lo).unwrap().value - 1e-10);
        prop_assert!(s.rate_at(0.5 - hi).unwrap().value >= s.rate_at(0.5 - lo).unwrap().value - 1e-10);
    }

    #[test]
    fn extended_real_text_round_trip(x in prop_oneof![any::<f64>().prop_filter("finite", |v| v.is_finite()), Just(f64::INFINITY), Just(f64::NEG_INFINITY)]) {
        prop_assert_eq!(reset_ldp::ext::parse(&reset_ldp::ext::fmt(x)), Some(x));
    }

    #[test]
    fn survival_is_monotone(d in dist_strategy(), a in 0.0f64..4.0, b in 0.0f64..4.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(d.survival(hi).unwrap() <= d.survival(lo).unwrap());
        let u = d.survival(hi).unwrap();
        if u > 1e-12 && u < 1.0 - 1e-12 {
            prop_assert!((d.sample_from_uniform(u).unwrap() - hi).abs() < 1e-8 * hi.max(1.0));
        }
    }
}

#[test]
fn rate_profile_is_convex_with_zero_at_mean() {
    let m = occupation(WaitingTimeModel::exp_poly(2.0).unwrap());
    let s = RateSolver::new(&m).unwrap();
    let grid: Vec<f64> = (1..50).map(|i| i as f64 / 50.0).collect();
    let p = s.rate_profile(&grid).unwrap();
    let v = p.values();
    for w in v.windows(3) {
        assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-10);
    }
    let (imin, _) = v.iter().enumerate().fold((0, f64::INFINITY), |a, (i, &x)| if x < a.1 { (i, x) } else { a });
    assert_eq!(grid[imin], 0.5);
    assert!(v[imin].abs() < 1e-12);
    assert_eq!(p.stretches.len(), 2);
}
