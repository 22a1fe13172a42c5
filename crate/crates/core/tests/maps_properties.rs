mod common;

use dchaos::{builtin, rat, zero_chaos_certificate, Builtin, Rational, Verdict};
use num_traits::Signed;
use proptest::prelude::*;

fn builtin_index() -> impl Strategy<Value = Builtin> {
    (0..Builtin::ALL.len()).prop_map(|i| Builtin::ALL[i])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn builtin_maps_stay_in_the_interval(
        which in builtin_index(),
        (num, den) in (1i64..=1000).prop_flat_map(|d| (0..=d, Just(d))),
    ) {
        let config = builtin(which, rat(1, 2)).unwrap();
        let x = rat(num, den);
        for map in [&config.f, &config.g] {
            let y = map.eval(&x).unwrap();
            prop_assert!(config.interval.contains(&y));
        }
    }
}

proptest! {
    #[test]
    fn lipschitz_constant_bounds_every_pair(
        map in common::pl_map(24, 12, 6),
        a in 0i64..=1000,
        b in 0i64..=1000,
    ) {
        let m = map.lipschitz_constant();
        let (x, y) = (rat(a, 1000), rat(b, 1000));
        let dy = (map.eval(&x).unwrap() - map.eval(&y).unwrap()).abs();
        prop_assert!(dy <= &m * (x - y).abs());
    }

    #[test]
    fn lipschitz_constant_is_attained_inside_a_segment(map in common::pl_map(24, 12, 6), u in 1i64..100, v in 1i64..100) {
        prop_assume!(u != v);
        let m = map.lipschitz_constant();
        let slopes = map.slopes();
        let s = slopes.iter().position(|k| k.abs() == m).unwrap();
        let (lo, hi) = (&map.xs()[s], &map.xs()[s + 1]);
        let at = |w: i64| lo + (hi - lo) * rat(w, 100);
        let (x, y) = (at(u), at(v));
        let dy = (map.eval(&x).unwrap() - map.eval(&y).unwrap()).abs();
        prop_assert_eq!(dy, m * (x - y).abs());
    }

    #[test]
    fn certificate_is_symmetric_under_swapping_the_maps(config in common::system(12, 12, 4)) {
        let direct = zero_chaos_certificate(&config);
        let swapped = zero_chaos_certificate(&config.swapped());
        prop_assert_eq!(direct.verdict.is_zero(), swapped.verdict.is_zero());
        prop_assert_eq!(
            direct.verdict == Verdict::ZeroByContraction,
            swapped.verdict == Verdict::ZeroByContraction
        );
    }
}

#[test]
fn example1_certificate_fires_exactly_below_one_half() {
    for k in 0..=100 {
        let p: Rational = rat(k, 100);
        let cert = zero_chaos_certificate(&builtin(Builtin::Example1, p.clone()).unwrap());
        assert_eq!(cert.verdict.is_zero(), p < rat(1, 2), "p = {k}/100: {}", cert.summary());
    }
}
