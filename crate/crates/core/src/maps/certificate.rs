use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::maps::config::SystemConfig;
use crate::maps::pl::{Branch, PiecewiseLinearMap};
use crate::scalar::{format_rational, serde_rational, Rational};

/// Outcome of the zero-chaos checks. `NoGuarantee` says nothing about chaos.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    ZeroByContraction,
    #[serde(rename = "ZeroByLipschitzSmall_cM≥1")]
    ZeroByLipschitzSmallCmAtLeastOne,
    #[serde(rename = "ZeroByLipschitzSmall_cM≤1")]
    ZeroByLipschitzSmallCmAtMostOne,
    NoGuarantee,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::ZeroByContraction => "ZeroByContraction",
            Verdict::ZeroByLipschitzSmallCmAtLeastOne => "ZeroByLipschitzSmall_cM≥1",
            Verdict::ZeroByLipschitzSmallCmAtMostOne => "ZeroByLipschitzSmall_cM≤1",
            Verdict::NoGuarantee => "NoGuarantee",
        }
    }

    pub fn is_zero(self) -> bool {
        self != Verdict::NoGuarantee
    }
}

/// A zero-chaos verdict together with the constants that justify it.
///
/// For the Lipschitz verdicts, `lipschitz_map` names the map with constant
/// `m` (chosen with probability `probability`), the other map contracts with
/// constant `c`, and `probability < threshold`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lipschitz_map: Option<Branch>,
    #[serde(with = "serde_rational::option", skip_serializing_if = "Option::is_none", default)]
    pub m: Option<Rational>,
    #[serde(with = "serde_rational::option", skip_serializing_if = "Option::is_none", default)]
    pub c: Option<Rational>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub r: Option<u64>,
    #[serde(with = "serde_rational::option", skip_serializing_if = "Option::is_none", default)]
    pub threshold: Option<Rational>,
    #[serde(with = "serde_rational::option", skip_serializing_if = "Option::is_none", default)]
    pub probability: Option<Rational>,
}

impl Certificate {
    fn bare(verdict: Verdict) -> Self {
        Self {
            verdict,
            lipschitz_map: None,
            m: None,
            c: None,
            r: None,
            threshold: None,
            probability: None,
        }
    }

    pub fn summary(&self) -> String {
        match (&self.m, &self.c, &self.r, &self.threshold, &self.probability) {
            (Some(m), Some(c), Some(r), Some(t), Some(p)) => format!(
                "{} (M={}, c={}, r={}, P({})={} < {})",
                self.verdict.label(),
                format_rational(m),
                format_rational(c),
                r,
                self.lipschitz_map.map_or("?", Branch::name),
                format_rational(p),
                format_rational(t)
            ),
            _ => self.verdict.label().to_string(),
        }
    }
}

/// Smallest positive `r` with `c^r * m <= 1`, for `0 <= c < 1`.
fn smallest_r(m: &Rational, c: &Rational) -> u64 {
    let mut r = 1;
    let mut value = c * m;
    while value > Rational::one() {
        value *= c;
        r += 1;
    }
    r
}

/// Greatest positive `r` with `c * m^r <= 1`, or `None` when every `r` works
/// (`m <= 1` or `c = 0`). Requires `c * m <= 1`.
fn greatest_r(m: &Rational, c: &Rational) -> Option<u64> {
    if c.is_zero() || *m <= Rational::one() {
        return None;
    }
    let mut r = 1;
    let mut value = c * m * m;
    while value <= Rational::one() {
        value *= m;
        r += 1;
    }
    Some(r)
}

/// Threshold `r / (1 + r)` or `1 / (1 + r)` as a rational.
fn ratio(num: u64, r: u64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(r + 1))
}

fn lipschitz_orientation(
    lip: &PiecewiseLinearMap<Rational>,
    lip_branch: Branch,
    lip_probability: &Rational,
    contraction: &PiecewiseLinearMap<Rational>,
) -> Option<Certificate> {
    let c = contraction.contraction_constant()?;
    let m = lip.lipschitz_constant();
    let cm = &c * &m;
    let make = |verdict, r: u64, threshold: Rational| Certificate {
        verdict,
        lipschitz_map: Some(lip_branch),
        m: Some(m.clone()),
        c: Some(c.clone()),
        r: Some(r),
        threshold: Some(threshold),
        probability: Some(lip_probability.clone()),
    };
    if cm >= Rational::one() {
        let r = smallest_r(&m, &c);
        let threshold = ratio(1, r);
        if *lip_probability < threshold {
            return Some(make(Verdict::ZeroByLipschitzSmallCmAtLeastOne, r, threshold));
        }
    }
    if cm <= Rational::one() {
        let r = match greatest_r(&m, &c) {
            Some(r) => r,
            None => {
                // Every r is admissible; report the least one whose
                // threshold r/(1+r) exceeds the probability.
                if *lip_probability >= Rational::one() {
                    return None;
                }
                let q = lip_probability / (Rational::one() - lip_probability);
                let floor = q.floor().to_integer();
                u64::try_from(floor).ok()? + 1
            }
        };
        let threshold = ratio(r, r);
        if *lip_probability < threshold {
            return Some(make(Verdict::ZeroByLipschitzSmallCmAtMostOne, r, threshold));
        }
    }
    None
}

/// Checks the sufficient conditions for zero distributional chaos, in order:
/// both maps contractive; then, with either map in the Lipschitz role, the
/// `cM >= 1` rule followed by the `cM <= 1` rule.
pub fn zero_chaos_certificate(config: &SystemConfig) -> Certificate {
    if let (Some(cf), Some(cg)) = (config.f.contraction_constant(), config.g.contraction_constant()) {
        return Certificate {
            c: Some(if cf > cg { cf } else { cg }),
            ..Certificate::bare(Verdict::ZeroByContraction)
        };
    }
    let q = Rational::one() - &config.p;
    lipschitz_orientation(&config.f, Branch::F, &config.p, &config.g)
        .or_else(|| lipschitz_orientation(&config.g, Branch::G, &q, &config.f))
        .unwrap_or_else(|| Certificate::bare(Verdict::NoGuarantee))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::builtin::{builtin, Builtin};
    use crate::scalar::rat;

    fn tent_and_quarter(p: Rational) -> SystemConfig {
        let tent = PiecewiseLinearMap::new(vec![
            (rat(0, 1), rat(0, 1)),
            (rat(1, 2), rat(1, 1)),
            (rat(1, 1), rat(0, 1)),
        ])
        .unwrap();
        let quarter = PiecewiseLinearMap::new(vec![(rat(0, 1), rat(0, 1)), (rat(1, 1), rat(1, 4))]).unwrap();
        SystemConfig::new(tent, quarter, p).unwrap()
    }

    #[test]
    fn example1_low_p_uses_first_rule() {
        let cert = zero_chaos_certificate(&builtin(Builtin::Example1, rat(3, 10)).unwrap());
        assert_eq!(cert.verdict, Verdict::ZeroByLipschitzSmallCmAtLeastOne);
        assert_eq!(cert.m, Some(rat(3, 1)));
        assert_eq!(cert.c, Some(rat(1, 3)));
        assert_eq!(cert.r, Some(1));
        assert_eq!(cert.threshold, Some(rat(1, 2)));
        assert_eq!(cert.lipschitz_map, Some(Branch::F));
    }

    #[test]
    fn example1_high_p_has_no_guarantee() {
        for p in [rat(1, 2), rat(7, 10), rat(1, 1)] {
            let cert = zero_chaos_certificate(&builtin(Builtin::Example1, p).unwrap());
            assert_eq!(cert.verdict, Verdict::NoGuarantee);
        }
    }

    #[test]
    fn both_contractive() {
        let cert = zero_chaos_certificate(&builtin(Builtin::HalvingPair, rat(9, 10)).unwrap());
        assert_eq!(cert.verdict, Verdict::ZeroByContraction);
    }

    #[test]
    fn second_rule_picks_greatest_r() {
        let cert = zero_chaos_certificate(&tent_and_quarter(rat(1, 2)));
        assert_eq!(cert.verdict, Verdict::ZeroByLipschitzSmallCmAtMostOne);
        assert_eq!(cert.r, Some(2));
        assert_eq!(cert.threshold, Some(rat(2, 3)));
        let cert = zero_chaos_certificate(&tent_and_quarter(rat(2, 3)));
        assert_eq!(cert.verdict, Verdict::NoGuarantee);
    }

    #[test]
    fn r_helpers_match_direct_enumeration() {
        for (m, c) in [(rat(3, 1), rat(1, 3)), (rat(5, 1), rat(1, 2)), (rat(10, 1), rat(9, 10))] {
            let r = smallest_r(&m, &c);
            assert!(pow(&c, r) * &m <= Rational::one());
            assert!(r == 1 || pow(&c, r - 1) * &m > Rational::one());
        }
        for (m, c) in [(rat(2, 1), rat(1, 4)), (rat(3, 1), rat(1, 30)), (rat(3, 2), rat(1, 2))] {
            let r = greatest_r(&m, &c).unwrap();
            assert!(&c * pow(&m, r) <= Rational::one());
            assert!(&c * pow(&m, r + 1) > Rational::one());
        }
        assert_eq!(greatest_r(&rat(1, 1), &rat(1, 2)), None);
    }

    fn pow(x: &Rational, e: u64) -> Rational {
        (0..e).fold(Rational::one(), |acc, _| acc * x)
    }

    #[test]
    fn unbounded_r_reports_least_sufficient_value() {
        // M = 1 (identity) with a contraction: any probability below one works.
        let id = PiecewiseLinearMap::identity(&crate::maps::pl::Interval::unit());
        let half = PiecewiseLinearMap::new(vec![(rat(0, 1), rat(0, 1)), (rat(1, 1), rat(1, 2))]).unwrap();
        let config = SystemConfig::new(id, half, rat(9, 10)).unwrap();
        let cert = zero_chaos_certificate(&config);
        assert_eq!(cert.verdict, Verdict::ZeroByLipschitzSmallCmAtMostOne);
        assert_eq!(cert.r, Some(10));
        assert!(cert.probability.unwrap() < cert.threshold.unwrap());
        let stuck = config.with_p(rat(1, 1)).unwrap();
        assert_eq!(zero_chaos_certificate(&stuck).verdict, Verdict::NoGuarantee);
    }

    #[test]
    fn serializes_with_unicode_verdicts() {
        let cert = zero_chaos_certificate(&builtin(Builtin::Example1, rat(3, 10)).unwrap());
        let json = serde_json::to_string(&cert).unwrap();
        assert!(json.contains("ZeroByLipschitzSmall_cM≥1"));
        assert!(json.contains("\"threshold\":\"1/2\""));
        let back: Certificate = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cert);
    }
}
