use num_traits::One;
use rayon::prelude::*;
use serde::Serialize;

use crate::engine::RandomSelection;
use crate::error::{Error, Result};
use crate::maps::{covering_gaps, Branch, FiniteSet, SystemConfig, Uncovered};
use crate::markov::chain::check_invariant;
use crate::scalar::{format_rational, rat, Rational, Scalar};

/// Monte Carlo estimate of `P(x_n ∈ A)`.
#[derive(Clone, Debug, Serialize)]
pub struct EmpiricalAbsorption {
    pub n: usize,
    pub samples: u64,
    pub seed: u64,
    /// Starting points used in rotation.
    pub starts: Vec<String>,
    pub fraction_in_set: f64,
    pub ci_halfwidth: f64,
}

/// Whether orbits are absorbed by a finite invariant set.
#[derive(Clone, Debug, Serialize)]
pub struct AbsorptionReport {
    pub set_size: usize,
    pub invariant: bool,
    /// One-step covering: `f(x) ∈ A` or `g(x) ∈ A` for every `x`.
    pub covering: bool,
    pub uncovered: Vec<String>,
    /// `max(p, 1 - p)`; under covering `P(x_n ∉ A) <= base^n`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_base: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_at_probe: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub empirical: Option<EmpiricalAbsorption>,
    /// `"covering"` when absorption is proved, `"empirical"` otherwise.
    pub method: String,
}

/// Sampling settings for the fallback probe.
#[derive(Clone, Copy, Debug)]
pub struct ProbeParams {
    pub n: usize,
    pub samples: u64,
    pub seed: u64,
}

impl Default for ProbeParams {
    fn default() -> Self {
        Self {
            n: 64,
            samples: 4096,
            seed: 0,
        }
    }
}

fn describe_gap(g: &Uncovered<Rational>) -> String {
    match g {
        Uncovered::Point(x) => format!("x = {}", format_rational(x)),
        Uncovered::Open(a, b) => format!("({}, {})", format_rational(a), format_rational(b)),
    }
}

/// Checks invariance of `A` exactly, then the covering property; proves
/// `P(x_n ∈ A) -> 1` with the geometric bound when covering holds and
/// otherwise estimates `P(x_n ∈ A)` by exact-arithmetic sampling.
pub fn check_absorption(config: &SystemConfig, points: &[Rational], probe: ProbeParams) -> Result<AbsorptionReport> {
    let set = FiniteSet::new(points.to_vec());
    if set.is_empty() {
        return Err(Error::InvalidArgument("the invariant set is empty".into()));
    }
    check_invariant(&config.f, Branch::F, &set)?;
    check_invariant(&config.g, Branch::G, &set)?;
    let gaps = covering_gaps(&config.f, &config.g, &set);
    let covering = gaps.is_empty();
    let mut report = AbsorptionReport {
        set_size: set.len(),
        invariant: true,
        covering,
        uncovered: gaps.iter().map(describe_gap).collect(),
        bound_base: None,
        bound_at_probe: None,
        empirical: None,
        method: String::new(),
    };
    if covering {
        let q = Rational::one() - &config.p;
        let base = if config.p > q { config.p.clone() } else { q };
        report.bound_at_probe = Some(base.to_f64().powi(probe.n.min(i32::MAX as usize) as i32));
        report.bound_base = Some(format_rational(&base));
        report.method = "covering".into();
    } else {
        report.empirical = Some(probe_absorption(config, &set, probe)?);
        report.method = "empirical".into();
    }
    Ok(report)
}

/// Fraction of sampled orbits inside `A` after `n` steps. Orbits are
/// followed in exact arithmetic; once in the invariant set they stay there.
pub fn probe_absorption(config: &SystemConfig, set: &FiniteSet<Rational>, probe: ProbeParams) -> Result<EmpiricalAbsorption> {
    if probe.samples == 0 {
        return Err(Error::InvalidArgument("at least one sample is required".into()));
    }
    const STARTS: i64 = 16;
    let lo = config.interval.lo().clone();
    let len = config.interval.length();
    let starts: Vec<Rational> = (0..STARTS).map(|j| &lo + &len * rat(2 * j + 1, 2 * STARTS)).collect();
    let selection = RandomSelection::from_rational(&config.p, probe.seed);
    let hits: u64 = (0..probe.samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = selection.rng(s);
            let mut x = starts[(s % STARTS as u64) as usize].clone();
            for _ in 0..probe.n {
                if set.contains(&x) {
                    return 1;
                }
                x = match selection.draw(&mut rng) {
                    Branch::F => config.f.eval_in_domain(&x),
                    Branch::G => config.g.eval_in_domain(&x),
                };
            }
            u64::from(set.contains(&x))
        })
        .sum();
    let frac = hits as f64 / probe.samples as f64;
    Ok(EmpiricalAbsorption {
        n: probe.n,
        samples: probe.samples,
        seed: probe.seed,
        starts: starts.iter().map(format_rational).collect(),
        fraction_in_set: frac,
        ci_halfwidth: crate::engine::probs::ci_halfwidth(frac, probe.samples),
    })
}
