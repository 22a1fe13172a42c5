use rayon::prelude::*;
use serde::Serialize;

use crate::distfn::grid::ThresholdGrid;
use crate::distfn::profile::{profile, window_start, DistributionProfile, EngineParams, ProfileParams, Source};
use crate::engine::{monte_carlo_dynamics, McParams};
use crate::error::{Error, Result};
use crate::maps::{identify, Builtin, SystemConfig, SystemJson};
use crate::scalar::{format_rational, rat, Rational, Scalar};
use crate::symbolic::{dp_law, witness_x_k, BlockSeq, RuleSet, SymbolicPair, Witness, WitnessParams};

/// First coordinate of a pair: a rational point, or a ternary expansion
/// evaluated symbolically against `y = 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum PairPoint {
    Exact(Rational),
    Symbolic(BlockSeq),
}

impl PairPoint {
    pub fn to_f64(&self) -> f64 {
        match self {
            PairPoint::Exact(r) => r.to_f64(),
            PairPoint::Symbolic(s) => s.value().to_f64(),
        }
    }

    fn describe(&self) -> String {
        match self {
            PairPoint::Exact(r) => format_rational(r),
            PairPoint::Symbolic(s) => s.to_string(),
        }
    }
}

/// Which initial pairs the estimator tries.
#[derive(Clone, Debug, PartialEq)]
pub struct PairStrategy {
    /// Points per side of the uniform grid (endpoints included); all pairs
    /// `x < y` are used. Zero disables the grid.
    pub grid_points: usize,
    /// Adds `(lo + (j + 1/2)|I|/grid_points, lo)` for each `j`.
    pub rays: bool,
    pub pairs: Vec<(Rational, Rational)>,
    /// Adds the witness points `x^(k)` for `k = 1..=K` against `y = 0`
    /// (builtin examples only).
    pub witnesses: Option<u32>,
    /// Overrides the witness search settings (default: fitted to the window).
    pub witness_params: Option<WitnessParams>,
}

impl Default for PairStrategy {
    fn default() -> Self {
        Self {
            grid_points: 16,
            rays: true,
            pairs: Vec::new(),
            witnesses: None,
            witness_params: None,
        }
    }
}

impl PairStrategy {
    pub fn only(pairs: Vec<(Rational, Rational)>) -> Self {
        Self {
            grid_points: 0,
            rays: false,
            pairs,
            ..Self::default()
        }
    }

    pub fn with_witnesses(mut self, k_max: u32) -> Self {
        self.witnesses = Some(k_max);
        self
    }

    /// Grid, ray and user pairs (witnesses excluded).
    pub fn plain_pairs(&self, config: &SystemConfig) -> Vec<(Rational, Rational, &'static str)> {
        let lo = config.interval.lo().clone();
        let len = config.interval.length();
        let m = self.grid_points;
        let mut out = Vec::new();
        if m >= 2 {
            let pts: Vec<Rational> = (0..m)
                .map(|j| &lo + &len * rat(j as i64, (m - 1) as i64))
                .collect();
            for a in 0..m {
                for b in a + 1..m {
                    out.push((pts[a].clone(), pts[b].clone(), "grid"));
                }
            }
        }
        if self.rays && m >= 1 {
            for j in 0..m {
                let x = &lo + &len * rat(2 * j as i64 + 1, 2 * m as i64);
                out.push((x, lo.clone(), "ray"));
            }
        }
        out.extend(self.pairs.iter().map(|(x, y)| (x.clone(), y.clone(), "user")));
        out
    }
}

/// Gap area of one initial pair.
#[derive(Clone, Debug, Serialize)]
pub struct PairArea {
    pub x: f64,
    pub y: f64,
    pub x_exact: String,
    pub y_exact: String,
    pub kind: String,
    pub area: f64,
    pub error: f64,
}

/// Settings echoed with an estimate.
#[derive(Clone, Debug, Serialize)]
pub struct MethodInfo {
    pub engine: Source,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_atoms: Option<usize>,
    pub n_lo: usize,
    pub n_hi: usize,
    #[serde(with = "crate::scalar::serde_rational")]
    pub window_frac: Rational,
    pub burn_in: usize,
    pub grid_scheme: String,
    #[serde(with = "crate::scalar::serde_rational::vec")]
    pub grid: Vec<Rational>,
    pub pair_grid_points: usize,
    pub rays: bool,
    pub witnesses: Option<u32>,
    /// The estimate is a maximum over finitely many pairs, hence a lower
    /// estimate of the supremum.
    pub lower_bound: bool,
    pub notes: Vec<String>,
}

/// Estimated measure of chaos with every pair that was tried.
#[derive(Clone, Debug, Serialize)]
pub struct ChaosEstimate {
    pub mu_hat: f64,
    pub best_pair: (f64, f64),
    pub best_index: usize,
    pub per_pair: Vec<PairArea>,
    pub config: SystemJson,
    pub method: MethodInfo,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub witness_points: Vec<Witness>,
}

impl ChaosEstimate {
    pub fn best(&self) -> &PairArea {
        &self.per_pair[self.best_index]
    }
}

/// Seed used for pair number `index`.
pub fn pair_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Profile of `(x, 0)` for a symbolic point under a builtin rule set.
pub fn symbolic_profile(
    rules: RuleSet,
    x: &BlockSeq,
    p: &Rational,
    grid: &ThresholdGrid,
    params: &ProfileParams,
) -> Result<DistributionProfile<f64>> {
    window_start(params.n_hi, &params.window_frac)?;
    let n_max = params.steps_needed() - 1;
    let steps = match &params.engine {
        EngineParams::Exact { prune_eps, .. } => {
            dp_law(rules, x, p.clone(), n_max, grid.values(), prune_eps.clone()).to_f64()
        }
        EngineParams::MonteCarlo { samples, seed } => {
            let dynamics = SymbolicPair::new(rules, x, grid.values(), n_max);
            monte_carlo_dynamics(
                &dynamics,
                p.to_f64(),
                n_max,
                McParams {
                    samples: *samples,
                    seed: *seed,
                },
                x.value().to_f64(),
                0.0,
                grid.values_as(),
            )?
        }
    };
    DistributionProfile::from_steps(&steps, grid, params.n_hi, &params.window_frac, params.burn_in)
}

fn rules_for(config: &SystemConfig) -> Option<RuleSet> {
    match identify(config)? {
        Builtin::Example1 => Some(RuleSet::Ex1),
        Builtin::Example2 => Some(RuleSet::Ex2),
        _ => None,
    }
}

/// Maximum of the gap area over a finite set of initial pairs.
pub fn estimate_mu(
    config: &SystemConfig,
    strategy: &PairStrategy,
    grid: &ThresholdGrid,
    params: &ProfileParams,
) -> Result<ChaosEstimate> {
    let n_lo = window_start(params.n_hi, &params.window_frac)?;
    let mut notes = Vec::new();
    let mut pairs: Vec<(PairPoint, PairPoint, String)> = strategy
        .plain_pairs(config)
        .into_iter()
        .map(|(x, y, kind)| (PairPoint::Exact(x), PairPoint::Exact(y), kind.to_string()))
        .collect();

    let mut witness_points = Vec::new();
    let rules = rules_for(config);
    if let Some(k_max) = strategy.witnesses {
        match rules {
            None => notes.push("witness points skipped: no symbolic rules for this system".into()),
            Some(rules) => {
                let wp = strategy
                    .witness_params
                    .clone()
                    .unwrap_or_else(|| WitnessParams::for_window(n_lo, params.n_hi));
                for k in 1..=k_max {
                    match witness_x_k(rules, k, &config.p, &wp) {
                        Ok(w) => {
                            if !w.complete {
                                notes.push(format!(
                                    "witness k={k} incomplete: {}",
                                    w.diagnostic.as_deref().unwrap_or("stage caps reached")
                                ));
                            }
                            pairs.push((
                                PairPoint::Symbolic(w.point.clone()),
                                PairPoint::Exact(rat(0, 1)),
                                format!("witness k={k}"),
                            ));
                            witness_points.push(w);
                        }
                        Err(e) => {
                            notes.push(format!("witness k={k} skipped: {e}"));
                            if matches!(e, Error::InvalidArgument(_)) {
                                break;
                            }
                        }
                    }
                }
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("the pair strategy yields no pairs".into()));
    }

    let results = pairs
        .par_iter()
        .enumerate()
        .map(|(index, (x, y, _))| {
            let mut local = params.clone();
            if let EngineParams::MonteCarlo { seed, .. } = &mut local.engine {
                *seed = pair_seed(*seed, index);
            }
            let prof = match (x, y) {
                (PairPoint::Exact(x), PairPoint::Exact(y)) => profile(config, x, y, grid, &local)?,
                (PairPoint::Symbolic(s), _) => {
                    symbolic_profile(rules.expect("witness implies rules"), s, &config.p, grid, &local)?
                }
                (PairPoint::Exact(_), PairPoint::Symbolic(_)) => unreachable!("symbolic points come first"),
            };
            let area = prof.gap_area(&config.interval).clamp(0.0, 1.0);
            Ok((area, prof.gap_error(&config.interval)))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;

    let per_pair: Vec<PairArea> = pairs
        .iter()
        .zip(&results)
        .map(|((x, y, kind), &(area, error))| PairArea {
            x: x.to_f64(),
            y: y.to_f64(),
            x_exact: x.describe(),
            y_exact: y.describe(),
            kind: kind.clone(),
            area,
            error,
        })
        .collect();
    let best_index = per_pair
        .iter()
        .enumerate()
        .fold(0, |best, (i, a)| if a.area > per_pair[best].area { i } else { best });
    let (samples, seed, max_atoms) = match &params.engine {
        EngineParams::Exact { max_atoms, .. } => (None, None, Some(*max_atoms)),
        EngineParams::MonteCarlo { samples, seed } => (Some(*samples), Some(*seed), None),
    };
    Ok(ChaosEstimate {
        mu_hat: per_pair[best_index].area,
        best_pair: (per_pair[best_index].x, per_pair[best_index].y),
        best_index,
        config: SystemJson::from_config(config),
        method: MethodInfo {
            engine: params.engine.source(),
            samples,
            seed,
            max_atoms,
            n_lo,
            n_hi: params.n_hi,
            window_frac: params.window_frac.clone(),
            burn_in: params.burn_in,
            grid_scheme: grid.scheme().to_string(),
            grid: grid.values().to_vec(),
            pair_grid_points: strategy.grid_points,
            rays: strategy.rays,
            witnesses: strategy.witnesses,
            lower_bound: true,
            notes,
        },
        per_pair,
        witness_points,
    })
}
