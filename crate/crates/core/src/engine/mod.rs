//! Law of the coupled pair `(x_i, y_i)`: exact propagation, Monte Carlo
//! estimation, and binomial tails.

pub mod binomial;
pub mod exact;
pub mod montecarlo;
pub mod probs;

pub use binomial::{binomial_tail, binomial_tail_exact};
pub use exact::{
    exact_step_probabilities, propagate, propagate_exact, step_probabilities_exact, Atom,
    ExactParams, LawPropagator, PairLaw,
};
pub use montecarlo::{
    bucket_counts, monte_carlo, monte_carlo_dynamics, CoupledDynamics, FloatPair, McParams,
    RandomSelection,
};
pub use probs::{ci_halfwidth, Mode, StepProbabilities};
