//! Measuring distributional chaos of random dynamical systems on an interval.
//!
//! A system applies `f` with probability `p` and `g` with probability `1 - p`
//! at every step. Two trajectories started at `x` and `y` share the random
//! choices, and the library studies the Cesàro averages
//! `F^(n)(t) = (1/n) sum_{i<n} P(|x_i - y_i| < t)`, their lower and upper
//! limits, and the normalized area between them.

pub mod distfn;
pub mod engine;
pub mod linalg;
pub mod markov;
pub mod perturb;
pub mod error;
pub mod maps;
pub mod scalar;
pub mod symbolic;

pub use error::{Error, Result};
pub use maps::{
    builtin, zero_chaos_certificate, Branch, Builtin, Certificate, Interval, PiecewiseLinearMap,
    SystemConfig, Verdict,
};
pub use scalar::{format_rational, parse_rational, pow_rational, rat, Rational, Scalar};

/// Exact rational map.
pub type ExactMap = PiecewiseLinearMap<Rational>;
/// Double-precision map for simulation.
pub type FloatMap = PiecewiseLinearMap<f64>;
/// Interval with rational endpoints.
pub type ExactInterval = Interval<Rational>;
/// Exact law of a pair of trajectories.
pub type ExactPairLaw = engine::PairLaw<Rational>;
/// Exact step probabilities.
pub type ExactSteps = engine::StepProbabilities<Rational>;
/// Sampled or rounded step probabilities.
pub type FloatSteps = engine::StepProbabilities<f64>;
/// Envelopes with exact rational values.
pub type ExactProfile = distfn::DistributionProfile<Rational>;
/// Envelopes in double precision.
pub type FloatProfile = distfn::DistributionProfile<f64>;
