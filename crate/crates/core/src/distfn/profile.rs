use std::io::Write;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::distfn::grid::ThresholdGrid;
use crate::engine::{exact_step_probabilities, monte_carlo, ExactParams, Mode, StepProbabilities};
use crate::error::{Error, Result};
use crate::maps::{Interval, SystemConfig};
use crate::scalar::{format_rational, rat, Rational, Scalar};

/// Where the values of a profile come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Exact,
    MonteCarlo,
    /// Exact long-run limit (both envelopes equal it).
    Limit,
}

impl From<Mode> for Source {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Exact => Source::Exact,
            Mode::MonteCarlo => Source::MonteCarlo,
        }
    }
}

/// Which engine computes step probabilities.
#[derive(Clone, Debug, PartialEq)]
pub enum EngineParams {
    Exact { max_atoms: usize, prune_eps: Rational },
    MonteCarlo { samples: u64, seed: u64 },
}

impl EngineParams {
    pub fn exact() -> Self {
        EngineParams::Exact {
            max_atoms: ExactParams::<Rational>::default().max_atoms,
            prune_eps: Rational::zero(),
        }
    }

    pub fn monte_carlo(samples: u64, seed: u64) -> Self {
        EngineParams::MonteCarlo { samples, seed }
    }

    pub fn source(&self) -> Source {
        match self {
            EngineParams::Exact { .. } => Source::Exact,
            EngineParams::MonteCarlo { .. } => Source::MonteCarlo,
        }
    }

    /// Default horizon: 20 steps exactly, 1000 by sampling.
    pub fn default_n_hi(&self) -> usize {
        match self {
            EngineParams::Exact { .. } => 20,
            EngineParams::MonteCarlo { .. } => 1000,
        }
    }
}

/// Sample count used when none is given.
pub const DEFAULT_SAMPLES: u64 = 4000;

/// Horizon and window of a profile.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileParams {
    pub n_hi: usize,
    /// Fraction of the horizon kept in the trailing window, in `(0, 1]`.
    pub window_frac: Rational,
    /// Steps discarded before the averages start.
    pub burn_in: usize,
    pub engine: EngineParams,
}

impl Default for ProfileParams {
    /// Monte Carlo with [`DEFAULT_SAMPLES`] and seed 0.
    fn default() -> Self {
        Self::new(EngineParams::monte_carlo(DEFAULT_SAMPLES, 0))
    }
}

impl ProfileParams {
    pub fn new(engine: EngineParams) -> Self {
        Self {
            n_hi: engine.default_n_hi(),
            window_frac: rat(1, 2),
            burn_in: 0,
            engine,
        }
    }

    pub fn with_n_hi(mut self, n_hi: usize) -> Self {
        self.n_hi = n_hi;
        self
    }

    pub fn with_window(mut self, window_frac: Rational) -> Self {
        self.window_frac = window_frac;
        self
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    /// Number of step probabilities needed, `burn_in + n_hi`.
    pub fn steps_needed(&self) -> usize {
        self.burn_in + self.n_hi
    }
}

/// `n_lo = ceil((1 - window_frac) * n_hi)`, at least 1.
pub fn window_start(n_hi: usize, window_frac: &Rational) -> Result<usize> {
    if *window_frac <= rat(0, 1) || *window_frac > rat(1, 1) {
        return Err(Error::InvalidArgument(format!(
            "window fraction {} is outside (0, 1]",
            format_rational(window_frac)
        )));
    }
    if n_hi == 0 {
        return Err(Error::InvalidArgument("horizon n_hi must be positive".into()));
    }
    let lo = ((rat(1, 1) - window_frac) * Rational::from_integer(n_hi.into())).ceil();
    Ok(num_traits::ToPrimitive::to_usize(&lo.to_integer()).expect("bounded by n_hi").max(1))
}

/// Cesàro averages `F^(n)(t)` for `n = 1..=n_hi` on a grid, with their
/// minimum and maximum over the trailing window `[n_lo, n_hi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionProfile<S = f64> {
    pub t_grid: ThresholdGrid,
    /// `f_n[n - 1][j] = F^(n)(t_j)`; empty for limit profiles.
    pub f_n: Vec<Vec<S>>,
    /// Error bound of each entry of `f_n`.
    pub f_err: Vec<Vec<f64>>,
    pub n_lo: usize,
    pub n_hi: usize,
    pub window_frac: Rational,
    pub burn_in: usize,
    pub lower: Vec<S>,
    pub upper: Vec<S>,
    /// Largest entry error over the window, per threshold.
    pub error: Vec<f64>,
    pub source: Source,
}

impl<S: Scalar> DistributionProfile<S> {
    /// Builds the averages from a table of step probabilities whose
    /// thresholds are `grid`. The first `burn_in` steps are skipped.
    pub fn from_steps(
        steps: &StepProbabilities<S>,
        grid: &ThresholdGrid,
        n_hi: usize,
        window_frac: &Rational,
        burn_in: usize,
    ) -> Result<Self> {
        let n_lo = window_start(n_hi, window_frac)?;
        if steps.thresholds.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "table has {} thresholds but the grid has {}",
                steps.thresholds.len(),
                grid.len()
            )));
        }
        if steps.steps() < burn_in + n_hi {
            return Err(Error::OutOfRange {
                index: burn_in + n_hi,
                available: steps.steps(),
            });
        }
        let k = grid.len();
        let mut sum = vec![S::zero(); k];
        let mut err_sum = vec![0.0; k];
        let mut f_n = Vec::with_capacity(n_hi);
        let mut f_err = Vec::with_capacity(n_hi);
        for n in 1..=n_hi {
            let i = burn_in + n - 1;
            let count = S::from_usize(n).expect("step count fits the scalar type");
            for j in 0..k {
                sum[j] = sum[j].clone() + steps.values[i][j].clone();
                err_sum[j] += steps.err[i][j];
            }
            f_n.push(sum.iter().map(|s| s.clone() / count.clone()).collect());
            f_err.push(err_sum.iter().map(|e| e / n as f64).collect());
        }
        let mut profile = Self {
            t_grid: grid.clone(),
            f_n,
            f_err,
            n_lo,
            n_hi,
            window_frac: window_frac.clone(),
            burn_in,
            lower: Vec::new(),
            upper: Vec::new(),
            error: Vec::new(),
            source: steps.mode.into(),
        };
        profile.set_envelopes();
        Ok(profile)
    }

    /// A profile whose envelopes both equal a known limit `F(t)`.
    pub fn from_limit(grid: &ThresholdGrid, limit: Vec<S>) -> Result<Self> {
        if limit.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "limit has {} values but the grid has {}",
                limit.len(),
                grid.len()
            )));
        }
        Ok(Self {
            t_grid: grid.clone(),
            f_n: Vec::new(),
            f_err: Vec::new(),
            n_lo: 0,
            n_hi: 0,
            window_frac: rat(1, 1),
            burn_in: 0,
            error: vec![0.0; limit.len()],
            lower: limit.clone(),
            upper: limit,
            source: Source::Limit,
        })
    }

    fn set_envelopes(&mut self) {
        let k = self.t_grid.len();
        let window = &self.f_n[self.n_lo - 1..self.n_hi];
        let errs = &self.f_err[self.n_lo - 1..self.n_hi];
        self.lower = (0..k)
            .map(|j| window.iter().map(|r| r[j].clone()).reduce(S::min_of).expect("nonempty"))
            .collect();
        self.upper = (0..k)
            .map(|j| window.iter().map(|r| r[j].clone()).reduce(S::max_of).expect("nonempty"))
            .collect();
        self.error = (0..k)
            .map(|j| errs.iter().map(|r| r[j]).fold(0.0, f64::max))
            .collect();
    }

    /// Same averages with another window fraction.
    pub fn rewindow(&self, window_frac: &Rational) -> Result<Self> {
        if self.source == Source::Limit {
            return Ok(self.clone());
        }
        let mut p = self.clone();
        p.n_lo = window_start(self.n_hi, window_frac)?;
        p.window_frac = window_frac.clone();
        p.set_envelopes();
        Ok(p)
    }

    /// `F^(n)(t_j)` for `1 <= n <= n_hi`.
    pub fn f(&self, n: usize, j: usize) -> Result<&S> {
        if n == 0 || n > self.f_n.len() {
            return Err(Error::OutOfRange {
                index: n,
                available: self.f_n.len(),
            });
        }
        self.f_n[n - 1].get(j).ok_or(Error::OutOfRange {
            index: j,
            available: self.t_grid.len(),
        })
    }

    /// Normalized area between the envelopes; see [`gap_area`].
    pub fn gap_area(&self, interval: &Interval<Rational>) -> S {
        gap_area(&self.lower, &self.upper, &self.t_grid, interval)
    }

    /// Normalized area of the envelope error band, an error bound for
    /// [`Self::gap_area`].
    pub fn gap_error(&self, interval: &Interval<Rational>) -> f64 {
        let zero = vec![0.0; self.error.len()];
        let doubled: Vec<f64> = self.error.iter().map(|e| (2.0 * e).min(1.0)).collect();
        gap_area(&zero, &doubled, &self.t_grid, interval)
    }

    pub fn to_f64(&self) -> DistributionProfile<f64> {
        let conv = |v: &Vec<S>| v.iter().map(Scalar::to_f64).collect::<Vec<f64>>();
        DistributionProfile {
            t_grid: self.t_grid.clone(),
            f_n: self.f_n.iter().map(conv).collect(),
            f_err: self.f_err.clone(),
            n_lo: self.n_lo,
            n_hi: self.n_hi,
            window_frac: self.window_frac.clone(),
            burn_in: self.burn_in,
            lower: conv(&self.lower),
            upper: conv(&self.upper),
            error: self.error.clone(),
            source: self.source,
        }
    }

    /// Writes `t,F_lower,F_upper,n_lo,n_hi`, one row per threshold.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,F_lower,F_upper,n_lo,n_hi")?;
        for (j, t) in self.t_grid.values().iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{}",
                t.to_f64(),
                self.lower[j].to_f64(),
                self.upper[j].to_f64(),
                self.n_lo,
                self.n_hi
            )?;
        }
        Ok(())
    }
}

/// Normalized area `(1/|I|) * integral over [0, |I|] of (upper - lower)`.
///
/// The gap is a left-continuous step function of `t`: on `(t_(k-1), t_k]`
/// it takes its value at `t_k` (with `t_(-1) = 0`), and past the last grid
/// point it keeps the last value.
pub fn gap_area<S: Scalar>(lower: &[S], upper: &[S], grid: &ThresholdGrid, interval: &Interval<Rational>) -> S {
    let len = interval.length();
    let mut prev = Rational::zero();
    let mut area = S::zero();
    let mut last_gap = S::zero();
    for (j, t) in grid.values().iter().enumerate() {
        let gap = S::max_of(upper[j].clone() - lower[j].clone(), S::zero());
        area = area + S::from_rational(&(t - &prev)) * gap.clone();
        prev = t.clone();
        last_gap = gap;
    }
    area = area + S::from_rational(&(&len - &prev)) * last_gap;
    area / S::from_rational(&len)
}

/// Mean of the first `n` step probabilities at the grid threshold equal
/// to `t`.
pub fn cesaro<S: Scalar>(steps: &StepProbabilities<S>, n: usize, t: f64) -> Result<S> {
    let j = steps
        .thresholds
        .iter()
        .position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
        .ok_or_else(|| Error::InvalidArgument(format!("threshold {t} is not in the table")))?;
    steps.cesaro(n, j)
}

fn check_pair(config: &SystemConfig, x: &Rational, y: &Rational) -> Result<()> {
    for v in [x, y] {
        if !config.interval.contains(v) {
            return Err(Error::Domain {
                point: format_rational(v),
                lo: format_rational(config.interval.lo()),
                hi: format_rational(config.interval.hi()),
            });
        }
    }
    Ok(())
}

/// Exact rational profile of the pair `(x, y)`.
pub fn profile_exact(
    config: &SystemConfig,
    x: &Rational,
    y: &Rational,
    grid: &ThresholdGrid,
    n_hi: usize,
    window_frac: &Rational,
    burn_in: usize,
    max_atoms: usize,
    prune_eps: &Rational,
) -> Result<DistributionProfile<Rational>> {
    window_start(n_hi, window_frac)?;
    check_pair(config, x, y)?;
    let params = ExactParams {
        max_atoms,
        prune_eps: prune_eps.clone(),
        coalesce: true,
    };
    let steps = exact_step_probabilities(config, x, y, burn_in + n_hi - 1, grid.values(), params)?;
    DistributionProfile::from_steps(&steps, grid, n_hi, window_frac, burn_in)
}

/// Profile of the pair `(x, y)` with the selected engine.
pub fn profile(
    config: &SystemConfig,
    x: &Rational,
    y: &Rational,
    grid: &ThresholdGrid,
    params: &ProfileParams,
) -> Result<DistributionProfile<f64>> {
    match &params.engine {
        EngineParams::Exact { max_atoms, prune_eps } => Ok(profile_exact(
            config,
            x,
            y,
            grid,
            params.n_hi,
            &params.window_frac,
            params.burn_in,
            *max_atoms,
            prune_eps,
        )?
        .to_f64()),
        EngineParams::MonteCarlo { samples, seed } => {
            window_start(params.n_hi, &params.window_frac)?;
            check_pair(config, x, y)?;
            let steps = monte_carlo(
                config,
                x.to_f64(),
                y.to_f64(),
                params.steps_needed() - 1,
                *samples,
                &grid.values_as::<f64>(),
                *seed,
            )?;
            DistributionProfile::from_steps(&steps, grid, params.n_hi, &params.window_frac, params.burn_in)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::step_probabilities_exact;
    use crate::engine::propagate_exact;
    use crate::maps::{builtin, Builtin, PiecewiseLinearMap};
    use crate::scalar::pow_rational;

    fn table(rows: Vec<Vec<f64>>, thresholds: Vec<f64>) -> StepProbabilities<f64> {
        StepProbabilities {
            x0: 0.0,
            y0: 0.0,
            err: rows.iter().map(|r| vec![0.0; r.len()]).collect(),
            values: rows,
            thresholds,
            mode: Mode::Exact,
        }
    }

    #[test]
    fn cesaro_means() {
        let t = table(vec![vec![1.0], vec![0.5]], vec![0.5]);
        assert_eq!(cesaro(&t, 2, 0.5).unwrap(), 0.75);
        assert!(cesaro(&t, 3, 0.5).is_err());
        assert!(cesaro(&t, 0, 0.5).is_err());
        assert!(cesaro(&t, 1, 0.25).is_err());
        let c = table(vec![vec![0.3]; 7], vec![0.5]);
        for n in 1..=7 {
            assert!((cesaro(&c, n, 0.5).unwrap() - 0.3).abs() < 1e-15);
        }
    }

    #[test]
    fn cesaro_matches_exact_engine() {
        let config = builtin(Builtin::Example1, rat(1, 2)).unwrap();
        let laws = propagate_exact(&config, &rat(1, 3), &rat(0, 1), 1, ExactParams::default()).unwrap();
        let steps = step_probabilities_exact(&laws, &[rat(1, 2)]);
        assert_eq!(steps.values[0][0], rat(1, 1));
        assert_eq!(steps.values[1][0], rat(1, 2));
        assert_eq!(steps.cesaro(2, 0).unwrap(), rat(3, 4));
    }

    #[test]
    fn window_bounds() {
        assert_eq!(window_start(1000, &rat(1, 2)).unwrap(), 500);
        assert_eq!(window_start(2000, &rat(19, 20)).unwrap(), 100);
        assert_eq!(window_start(7, &rat(1, 1)).unwrap(), 1);
        assert_eq!(window_start(3, &rat(1, 2)).unwrap(), 2);
        assert!(window_start(10, &rat(0, 1)).is_err());
        assert!(window_start(10, &rat(3, 2)).is_err());
        assert!(window_start(0, &rat(1, 2)).is_err());
    }

    fn unit_grid(values: &[Rational]) -> ThresholdGrid {
        ThresholdGrid::custom(values.to_vec(), &Interval::unit()).unwrap()
    }

    #[test]
    fn gap_area_extremes() {
        let unit = Interval::unit();
        let g = ThresholdGrid::default_for(&unit);
        let zeros = vec![rat(0, 1); g.len()];
        let ones = vec![rat(1, 1); g.len()];
        assert_eq!(gap_area(&zeros, &ones, &g, &unit), rat(1, 1));
        assert_eq!(gap_area(&ones, &ones, &g, &unit), rat(0, 1));
        // Past the last grid point the last gap is kept.
        let g = unit_grid(&[rat(1, 2)]);
        assert_eq!(gap_area(&[rat(0, 1)], &[rat(1, 1)], &g, &unit), rat(1, 1));
    }

    #[test]
    fn staircase_gap_is_exact_on_triadic_grid() {
        // F_lower = q^k on (3^-k, 3^-k+1] and F_upper = 1 give
        // 1 - 2 sum_k (q/3)^k, truncated at the grid depth.
        let unit = Interval::unit();
        let p = rat(2, 3);
        let q = (rat(1, 1) - &p) / &p;
        let g = ThresholdGrid::triadic(&unit);
        let lower: Vec<Rational> = g
            .values()
            .iter()
            .map(|t| {
                let mut k = 0u32;
                while pow_rational(&rat(1, 3), k + 1) >= *t {
                    k += 1;
                }
                pow_rational(&q, k + 1)
            })
            .collect();
        let upper = vec![rat(1, 1); g.len()];
        let area = gap_area(&lower, &upper, &g, &unit);
        let closed = (rat(6, 1) * &p - rat(3, 1)) / (rat(4, 1) * &p - rat(1, 1));
        assert!((area.to_f64() - closed.to_f64()).abs() < 1e-6, "{}", area.to_f64());
        assert_eq!(closed, rat(3, 5));
    }

    #[test]
    fn halving_pair_profile_is_flat_one() {
        let config = builtin(Builtin::HalvingPair, rat(1, 2)).unwrap();
        let g = unit_grid(&[rat(1, 10)]);
        let exact = |burn_in| {
            profile_exact(&config, &rat(0, 1), &rat(1, 1), &g, 10, &rat(1, 2), burn_in, 1 << 20, &rat(0, 1))
                .unwrap()
        };
        let prof = exact(0);
        assert_eq!(prof.n_lo, 5);
        // The distance 2^-i drops below 1/10 from i = 4 on.
        assert_eq!(*prof.f(4, 0).unwrap(), rat(0, 1));
        assert_eq!(*prof.f(5, 0).unwrap(), rat(1, 5));
        assert!(prof.lower[0] < rat(1, 1));
        let burned = exact(4);
        assert_eq!(burned.lower, vec![rat(1, 1)]);
        assert_eq!(burned.upper, vec![rat(1, 1)]);
        assert_eq!(burned.gap_area(&Interval::unit()), rat(0, 1));
        // Over a long horizon the transient fades from the averages.
        let params = ProfileParams::new(EngineParams::monte_carlo(256, 5)).with_n_hi(200);
        let mc = profile(&config, &rat(1, 7), &rat(5, 6), &g, &params).unwrap();
        assert!(mc.lower[0] > 0.95 && mc.upper[0] <= 1.0);
    }

    #[test]
    fn static_system_has_coinciding_envelopes() {
        let id = PiecewiseLinearMap::identity(&Interval::unit());
        let config = SystemConfig::new(id.clone(), id, rat(1, 1)).unwrap();
        let g = unit_grid(&[rat(1, 4), rat(1, 2), rat(3, 4)]);
        let params = ProfileParams::new(EngineParams::monte_carlo(50, 1)).with_n_hi(30);
        let prof = profile(&config, &rat(1, 3), &rat(2, 3), &g, &params).unwrap();
        assert_eq!(prof.lower, vec![0.0, 1.0, 1.0]);
        assert_eq!(prof.lower, prof.upper);
        assert_eq!(prof.gap_area(&Interval::unit()), 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let config = builtin(Builtin::Example1, rat(1, 2)).unwrap();
        let g = unit_grid(&[rat(1, 2)]);
        let params = ProfileParams::new(EngineParams::exact()).with_n_hi(3);
        assert!(profile(&config, &rat(2, 1), &rat(0, 1), &g, &params).is_err());
        let params = params.with_window(rat(0, 1));
        assert!(profile(&config, &rat(1, 2), &rat(0, 1), &g, &params).is_err());
    }

    #[test]
    fn csv_layout() {
        let config = builtin(Builtin::HalvingPair, rat(1, 2)).unwrap();
        let g = unit_grid(&[rat(1, 2), rat(1, 1)]);
        let prof = profile(&config, &rat(0, 1), &rat(1, 1), &g, &ProfileParams::new(EngineParams::exact()).with_n_hi(4))
            .unwrap();
        let mut buf = Vec::new();
        prof.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,F_lower,F_upper,n_lo,n_hi");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].ends_with(",2,4"));
    }
}
