use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::engine::RandomSelection;
use crate::maps::Branch;
use crate::scalar::{pow_rational, rat, Rational};

/// Probability that a simple random walk with up-probability `p` ever hits
/// `-k`: one for `p < 1/2`, `((1 - p) / p)^k` otherwise.
pub fn rw_hitting(p: &Rational, k: u32) -> Rational {
    if *p < rat(1, 2) {
        return Rational::one();
    }
    if p.is_zero() {
        return Rational::one();
    }
    pow_rational(&((Rational::one() - p) / p), k)
}

/// Fraction of `walks` simulated walks that reach `-k` within `max_steps`
/// steps. Walk `i` uses the random stream `(seed, i)`.
pub fn rw_hitting_empirical(p: f64, k: u32, max_steps: u64, walks: u64, seed: u64) -> f64 {
    let selection = RandomSelection::new(p, seed);
    let target = -i64::from(k);
    let hits: u64 = (0..walks)
        .into_par_iter()
        .map(|w| {
            let mut rng = selection.rng(w);
            let mut pos = 0i64;
            for _ in 0..max_steps {
                pos += match selection.draw(&mut rng) {
                    Branch::F => 1,
                    Branch::G => -1,
                };
                if pos == target {
                    return 1;
                }
            }
            0
        })
        .sum();
    hits as f64 / walks as f64
}

/// Measure of chaos of the first builtin system: `0` for `p < 1/2` and
/// `(6p - 3) / (4p - 1)` otherwise.
pub fn mu_theoretical_ex1(p: &Rational) -> Rational {
    if *p < rat(1, 2) {
        return Rational::zero();
    }
    (p * rat(6, 1) - rat(3, 1)) / (p * rat(4, 1) - rat(1, 1))
}
