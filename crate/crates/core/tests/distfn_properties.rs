mod common;

use dchaos::distfn::{estimate_mu, profile, profile_exact, EngineParams, PairStrategy, ProfileParams, ThresholdGrid};
use dchaos::{builtin, pow_rational, rat, Builtin, Interval, PiecewiseLinearMap, Rational, Scalar, SystemConfig};
use num_traits::Zero;
use proptest::prelude::*;

fn exact_profile(config: &SystemConfig, a: i64, b: i64, window: Rational) -> dchaos::ExactProfile {
    let grid = ThresholdGrid::uniform(&config.interval, 12).unwrap();
    profile_exact(config, &rat(a, 12), &rat(b, 12), &grid, 9, &window, 0, 100_000, &Rational::zero()).unwrap()
}

fn nondecreasing(v: &[Rational]) -> bool {
    v.windows(2).all(|w| w[0] <= w[1])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn profiles_are_ordered_monotone_and_bounded(config in common::system(12, 12, 4), a in 0i64..=12, b in 0i64..=12) {
        let prof = exact_profile(&config, a, b, rat(1, 1));
        let (zero, one) = (rat(0, 1), rat(1, 1));
        for row in &prof.f_n {
            prop_assert!(nondecreasing(row));
            prop_assert!(row.iter().all(|v| *v >= zero && *v <= one));
        }
        prop_assert!(nondecreasing(&prof.lower));
        prop_assert!(nondecreasing(&prof.upper));
        prop_assert!(prof.lower.iter().zip(&prof.upper).all(|(l, u)| l <= u));
        let gap = prof.gap_area(&config.interval);
        prop_assert!(gap >= zero && gap <= one);
    }

    #[test]
    fn narrower_windows_give_tighter_envelopes(config in common::system(12, 12, 4), a in 0i64..=12, b in 0i64..=12) {
        let wide = exact_profile(&config, a, b, rat(1, 1));
        for w in [rat(3, 4), rat(1, 2), rat(1, 5)] {
            let narrow = wide.rewindow(&w).unwrap();
            prop_assert!(narrow.lower.iter().zip(&wide.lower).all(|(n, w)| n >= w));
            prop_assert!(narrow.upper.iter().zip(&wide.upper).all(|(n, w)| n <= w));
            prop_assert_eq!(narrow.clone(), exact_profile(&config, a, b, w.clone()));
        }
    }

    #[test]
    fn static_systems_have_no_gap(a in 0i64..=12, b in 0i64..=12, k in 0i64..=10) {
        let id = PiecewiseLinearMap::identity(&Interval::unit());
        let config = SystemConfig::new(id.clone(), id, rat(k, 10)).unwrap();
        let prof = exact_profile(&config, a, b, rat(1, 2));
        prop_assert_eq!(prof.gap_area(&config.interval), rat(0, 1));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn estimates_lie_in_the_unit_interval(config in common::system(12, 12, 4), seed in any::<u64>()) {
        let strategy = PairStrategy { grid_points: 4, ..PairStrategy::default() };
        let params = ProfileParams::new(EngineParams::monte_carlo(200, seed)).with_n_hi(60);
        let grid = ThresholdGrid::triadic(&config.interval);
        let est = estimate_mu(&config, &strategy, &grid, &params).unwrap();
        prop_assert!((0.0..=1.0).contains(&est.mu_hat));
        prop_assert!(est.per_pair.iter().all(|p| (0.0..=1.0).contains(&p.area)));
        prop_assert_eq!(est.mu_hat, est.best().area);
    }
}

/// Smallest `k >= 1` with `3^-k < t`.
fn triadic_level(t: &Rational) -> u32 {
    let mut k = 1;
    while pow_rational(&rat(1, 3), k) >= *t {
        k += 1;
    }
    k
}

// At p = 1/2 the bound is 1 but the walk is null recurrent, so finite
// horizons stay far below it; the check starts above one half.
#[test]
fn example1_lower_envelope_respects_the_walk_bound() {
    for p in [rat(3, 5), rat(2, 3), rat(3, 4), rat(9, 10)] {
        let config = builtin(Builtin::Example1, p.clone()).unwrap();
        let q = (rat(1, 1) - &p) / &p;
        let grid = ThresholdGrid::triadic(&config.interval);
        let samples = 2000;
        let params = ProfileParams::new(EngineParams::monte_carlo(samples, 7)).with_n_hi(1000);
        // The normal half-width vanishes at frequency 0; a zero count still
        // allows a true value up to about 3/samples.
        let floor = 3.0 / samples as f64;
        for (x, y) in [(rat(0, 1), rat(1, 1)), (rat(1, 3), rat(0, 1)), (rat(1, 7), rat(5, 6)), (rat(2, 9), rat(1, 2))] {
            let prof = profile(&config, &x, &y, &grid, &params).unwrap();
            for (j, t) in grid.values().iter().enumerate() {
                let bound = pow_rational(&q, triadic_level(t)).to_f64();
                assert!(
                    prof.lower[j] >= bound - prof.error[j] - floor,
                    "p = {p}, pair ({x}, {y}), t = {t}: {} < {bound} - {} - {floor}",
                    prof.lower[j],
                    prof.error[j]
                );
            }
        }
    }
}
