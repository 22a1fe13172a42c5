use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::scalar::{Rational, Scalar};

/// Exact tail `P(X >= k_min)` for `X ~ Binomial(n, p)`.
pub fn binomial_tail_exact(n: u64, p: &Rational, k_min: u64) -> Rational {
    if k_min > n {
        return Rational::zero();
    }
    let q = Rational::one() - p;
    let mut total = Rational::zero();
    let mut coeff = BigInt::one();
    for k in 0..=n {
        if k >= k_min {
            let term = num_traits::pow(p.clone(), k as usize) * num_traits::pow(q.clone(), (n - k) as usize);
            total += term * Rational::from_integer(coeff.clone());
        }
        coeff = coeff * BigInt::from(n - k) / BigInt::from(k + 1);
    }
    total
}

/// Smallest integer `k` with `k >= a*n + b`, computed exactly from the
/// binary values of `a` and `b`.
pub fn tail_start(n: u64, a: f64, b: f64) -> Option<u64> {
    let a = Rational::from_float(a)?;
    let b = Rational::from_float(b)?;
    let bound = a * Rational::from_integer(BigInt::from(n)) + b;
    let k = bound.ceil().to_integer();
    Some(if k.is_negative() { 0 } else { u64::try_from(k).unwrap_or(u64::MAX) })
}

/// `P(X_n >= a*n + b)` for `X_n ~ Binomial(n, p)`, summed term by term:
/// exactly for moderate `n`, in log space beyond.
pub fn binomial_tail(n: u64, p: &Rational, a: f64, b: f64) -> f64 {
    let Some(k_min) = tail_start(n, a, b) else {
        return f64::NAN;
    };
    if k_min > n {
        return 0.0;
    }
    if n <= 2048 {
        return binomial_tail_exact(n, p, k_min).to_f64();
    }
    let pf = p.to_f64();
    if pf <= 0.0 {
        return if k_min == 0 { 1.0 } else { 0.0 };
    }
    if pf >= 1.0 {
        return 1.0;
    }
    let (lp, lq) = (pf.ln(), (1.0 - pf).ln());
    let mut log_fact = Vec::with_capacity(n as usize + 1);
    log_fact.push(0.0f64);
    for i in 1..=n {
        log_fact.push(log_fact[i as usize - 1] + (i as f64).ln());
    }
    let term = |k: u64| {
        log_fact[n as usize] - log_fact[k as usize] - log_fact[(n - k) as usize]
            + k as f64 * lp
            + (n - k) as f64 * lq
    };
    let logs: Vec<f64> = (k_min..=n).map(term).collect();
    let peak = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logs.iter().map(|l| (l - peak).exp()).sum();
    (peak + sum.ln()).exp().min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn small_cases() {
        let half = rat(1, 2);
        assert_eq!(binomial_tail(10, &half, 0.0, 0.0), 1.0);
        assert_eq!(binomial_tail(10, &half, 0.5, 0.0), 0.623046875);
        assert_eq!(binomial_tail_exact(10, &half, 5), rat(638, 1024));
        assert_eq!(binomial_tail(10, &half, 2.0, 0.0), 0.0);
        assert_eq!(binomial_tail(4, &rat(0, 1), 0.0, 0.0), 1.0);
        assert_eq!(binomial_tail(4, &rat(0, 1), 0.25, 0.0), 0.0);
    }

    #[test]
    fn boundary_uses_exact_arithmetic() {
        assert_eq!(tail_start(1000, 0.6, 0.0), Some(600));
        assert_eq!(tail_start(10, 0.5, 0.5), Some(6));
        assert_eq!(tail_start(10, -1.0, 0.0), Some(0));
        assert_eq!(tail_start(10, f64::NAN, 0.0), None);
    }

    #[test]
    fn log_space_agrees_with_exact() {
        let p = rat(1, 3);
        let n = 3000;
        let k = tail_start(n, 0.35, 0.0).unwrap();
        let exact = binomial_tail_exact(n, &p, k).to_f64();
        let approx = binomial_tail(n, &p, 0.35, 0.0);
        assert!((exact - approx).abs() < 1e-10 * exact.max(1e-300), "{exact} {approx}");
    }
}
