use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::engine::probs::{ci_halfwidth, Mode, StepProbabilities};
use crate::error::{Error, Result};
use crate::maps::{Branch, PiecewiseLinearMap, SystemConfig};
use crate::scalar::{Rational, Scalar};

/// I.i.d. choice of `f` (probability `p`) or `g` at every step, with one
/// reproducible random stream per sample.
#[derive(Clone, Copy, Debug)]
pub struct RandomSelection {
    cutoff: Option<u64>,
    always_f: bool,
    seed: u64,
}

impl RandomSelection {
    pub fn new(p: f64, seed: u64) -> Self {
        let always_f = p >= 1.0;
        let cutoff = (!always_f).then(|| (p.max(0.0) * 2f64.powi(64)) as u64);
        Self { cutoff, always_f, seed }
    }

    pub fn from_rational(p: &Rational, seed: u64) -> Self {
        Self::new(p.to_f64(), seed)
    }

    /// Stream for one sample. Depends only on `(seed, sample)`.
    pub fn rng(&self, sample: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(sample);
        rng
    }

    #[inline]
    pub fn draw(&self, rng: &mut ChaCha8Rng) -> Branch {
        match self.cutoff {
            _ if self.always_f => Branch::F,
            Some(c) if rng.random::<u64>() < c => Branch::F,
            _ => Branch::G,
        }
    }
}

/// A pair of trajectories driven by common map choices, observed through
/// the threshold grid.
pub trait CoupledDynamics: Sync {
    type State: Send;

    fn initial(&self) -> Self::State;

    fn advance(&self, state: &mut Self::State, branch: Branch);

    /// Index of the first threshold strictly above the current distance,
    /// or the number of thresholds when there is none.
    fn bucket(&self, state: &Self::State) -> usize;

    fn threshold_count(&self) -> usize;
}

/// Two points moved by floating-point copies of the maps.
pub struct FloatPair<T> {
    f: PiecewiseLinearMap<T>,
    g: PiecewiseLinearMap<T>,
    x0: T,
    y0: T,
    thresholds: Vec<T>,
}

impl<T: Scalar + Copy> FloatPair<T> {
    pub fn new(config: &SystemConfig, x0: T, y0: T, thresholds: Vec<T>) -> Result<Self> {
        let domain = config.interval.to_scalar::<T>();
        for v in [&x0, &y0] {
            if !domain.contains(v) {
                return Err(Error::Domain {
                    point: format!("{v:?}"),
                    lo: format!("{:?}", domain.lo()),
                    hi: format!("{:?}", domain.hi()),
                });
            }
        }
        Ok(Self {
            f: config.f.to_scalar(),
            g: config.g.to_scalar(),
            x0,
            y0,
            thresholds,
        })
    }
}

impl<T: Scalar + Copy> CoupledDynamics for FloatPair<T> {
    type State = (T, T);

    fn initial(&self) -> (T, T) {
        (self.x0, self.y0)
    }

    #[inline]
    fn advance(&self, state: &mut (T, T), branch: Branch) {
        let m = match branch {
            Branch::F => &self.f,
            Branch::G => &self.g,
        };
        *state = (m.eval_in_domain(&state.0), m.eval_in_domain(&state.1));
    }

    #[inline]
    fn bucket(&self, state: &(T, T)) -> usize {
        let d = (state.0 - state.1).abs();
        self.thresholds.partition_point(|t| *t <= d)
    }

    fn threshold_count(&self) -> usize {
        self.thresholds.len()
    }
}

/// Sampling budget and seed.
#[derive(Clone, Copy, Debug)]
pub struct McParams {
    pub samples: u64,
    pub seed: u64,
}

const BATCH: u64 = 64;

/// Runs `samples` coupled trajectories for steps `0..=n_max` and returns,
/// per step, how many samples fell in each threshold bucket. Counts are
/// summed as integers, so the result does not depend on scheduling.
pub fn bucket_counts<D: CoupledDynamics>(
    dynamics: &D,
    selection: RandomSelection,
    n_max: usize,
    samples: u64,
) -> Vec<Vec<u64>> {
    let width = dynamics.threshold_count() + 1;
    let batches = samples.div_ceil(BATCH);
    let zero = || vec![0u64; (n_max + 1) * width];
    let flat = (0..batches)
        .into_par_iter()
        .fold(zero, |mut acc, b| {
            for sample in b * BATCH..((b + 1) * BATCH).min(samples) {
                let mut rng = selection.rng(sample);
                let mut state = dynamics.initial();
                acc[dynamics.bucket(&state)] += 1;
                for i in 1..=n_max {
                    dynamics.advance(&mut state, selection.draw(&mut rng));
                    acc[i * width + dynamics.bucket(&state)] += 1;
                }
            }
            acc
        })
        .reduce(zero, |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        });
    flat.chunks(width).map(<[u64]>::to_vec).collect()
}

/// Converts bucket counts into cumulative frequencies with confidence
/// half-widths.
pub fn table_from_counts(
    counts: &[Vec<u64>],
    samples: u64,
    x0: f64,
    y0: f64,
    thresholds: Vec<f64>,
) -> StepProbabilities<f64> {
    let k = thresholds.len();
    let mut values = Vec::with_capacity(counts.len());
    let mut err = Vec::with_capacity(counts.len());
    for row in counts {
        let mut acc = 0u64;
        let freq: Vec<f64> = row[..k]
            .iter()
            .map(|c| {
                acc += c;
                acc as f64 / samples as f64
            })
            .collect();
        err.push(freq.iter().map(|&v| ci_halfwidth(v, samples)).collect());
        values.push(freq);
    }
    StepProbabilities {
        x0,
        y0,
        thresholds,
        values,
        err,
        mode: Mode::MonteCarlo,
    }
}

/// Generic Monte Carlo estimate of the step probabilities of any coupled
/// dynamics.
pub fn monte_carlo_dynamics<D: CoupledDynamics>(
    dynamics: &D,
    p: f64,
    n_max: usize,
    params: McParams,
    x0: f64,
    y0: f64,
    thresholds: Vec<f64>,
) -> Result<StepProbabilities<f64>> {
    if params.samples == 0 {
        return Err(Error::InvalidArgument("at least one sample is required".into()));
    }
    let counts = bucket_counts(dynamics, RandomSelection::new(p, params.seed), n_max, params.samples);
    Ok(table_from_counts(&counts, params.samples, x0, y0, thresholds))
}

/// Monte Carlo estimate of `P(|x_i - y_i| < t)` in double precision.
pub fn monte_carlo(
    config: &SystemConfig,
    x: f64,
    y: f64,
    n_max: usize,
    samples: u64,
    thresholds: &[f64],
    seed: u64,
) -> Result<StepProbabilities<f64>> {
    let dynamics = FloatPair::new(config, x, y, thresholds.to_vec())?;
    monte_carlo_dynamics(
        &dynamics,
        config.p.to_f64(),
        n_max,
        McParams { samples, seed },
        x,
        y,
        thresholds.to_vec(),
    )
}
