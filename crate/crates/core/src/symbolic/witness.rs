use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{format_rational, pow_rational, rat, Rational, Scalar};
use crate::symbolic::dp::dp_law;
use crate::symbolic::rules::RuleSet;
use crate::symbolic::seq::BlockSeq;

/// Search settings for [`witness_x_k`].
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessParams {
    /// Tolerance of stage `j` (1-based) is `eps[j - 1]`, or `1/j` past the end.
    pub eps: Vec<f64>,
    pub max_stages: usize,
    pub max_block: u64,
    pub max_steps: usize,
    /// Optional lower bounds on `N_j`, per stage.
    pub min_steps: Vec<usize>,
    /// `N_j >= growth * N_(j-1)`.
    pub growth: f64,
    /// Lower bound on `N_1`.
    pub first_min: usize,
    /// How much worse than the untrimmed block a trimmed block may score.
    pub block_slack: f64,
    pub prune_eps: f64,
    /// Leading digits `r_1` (zeros and twos only).
    pub prefix: Vec<u8>,
}

impl Default for WitnessParams {
    fn default() -> Self {
        Self {
            eps: Vec::new(),
            max_stages: 2,
            max_block: 5000,
            max_steps: 5000,
            min_steps: Vec::new(),
            growth: 20.0,
            first_min: 50,
            block_slack: 0.02,
            prune_eps: 1e-13,
            prefix: Vec::new(),
        }
    }
}

impl WitnessParams {
    /// Two stages placed at the ends of the window `[n_lo, n_hi]`: the
    /// first makes `F^(n_lo)` nearly one, the second pulls `F^(n_hi)` down.
    pub fn for_window(n_lo: usize, n_hi: usize) -> Self {
        Self {
            eps: vec![0.01, 0.5],
            max_stages: 2,
            max_block: n_hi as u64 + 64,
            max_steps: n_hi,
            min_steps: vec![n_lo.max(1), n_hi],
            growth: 1.0,
            first_min: n_lo.max(1),
            ..Self::default()
        }
    }

    fn eps_for(&self, j: usize) -> f64 {
        self.eps.get(j - 1).copied().unwrap_or(1.0 / j as f64)
    }
}

/// One threshold with the value `F^(N)` should approach there.
#[derive(Clone, Debug, Serialize)]
pub struct StageValue {
    pub t: f64,
    #[serde(with = "crate::scalar::serde_rational")]
    pub t_exact: Rational,
    pub goal: f64,
    pub achieved: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Stage {
    pub index: usize,
    pub digit: u8,
    pub block: u64,
    pub n: usize,
    pub eps: f64,
    pub values: Vec<StageValue>,
}

/// A finite-stage witness point together with the Cesàro values it reached.
#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub rules: String,
    pub k: u32,
    #[serde(with = "crate::scalar::serde_rational")]
    pub p: Rational,
    #[serde(serialize_with = "display")]
    pub point: BlockSeq,
    pub stages: Vec<Stage>,
    pub complete: bool,
    pub diagnostic: Option<String>,
}

fn display<S: serde::Serializer>(x: &BlockSeq, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(x)
}

/// `t_l^k = 3^-l - 3^-k`.
pub fn t_lk(l: u32, k: u32) -> Rational {
    let third = rat(1, 3);
    pow_rational(&third, l) - pow_rational(&third, k)
}

/// Thresholds and goal values of a stage that appends `digit`-blocks.
pub fn stage_targets(rules: RuleSet, k: u32, p: &Rational, digit: u8) -> Vec<(Rational, f64)> {
    let third = rat(1, 3);
    match (rules, digit) {
        (RuleSet::Ex1, 0) => vec![(t_lk(k - 1, k), 1.0)],
        (RuleSet::Ex1, _) => {
            let q = (Rational::one() - p) / p;
            (0..k)
                .rev()
                .map(|l| (t_lk(l, k), pow_rational(&q, l + 1).to_f64()))
                .collect()
        }
        (RuleSet::Ex2, 0) => vec![(pow_rational(&third, k), 1.0)],
        (RuleSet::Ex2, _) => vec![(Rational::one() - pow_rational(&third, k), 0.0)],
    }
}

/// Running Cesàro means of each column: `out[n][j] = F^(n)(t_j)`, `out[0]`
/// unused.
fn cesaro_columns(values: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = values.first().map_or(0, Vec::len);
    let mut sums = vec![0.0; k];
    let mut out = Vec::with_capacity(values.len() + 1);
    out.push(vec![f64::NAN; k]);
    for (i, row) in values.iter().enumerate() {
        for (s, v) in sums.iter_mut().zip(row) {
            *s += v;
        }
        out.push(sums.iter().map(|s| s / (i + 1) as f64).collect());
    }
    out
}

fn stage_error(f: &[f64], goals: &[f64]) -> f64 {
    f.iter().zip(goals).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Builds a finite-stage approximation of the witness point `x^(k)`:
/// alternately appends a block of zeros (driving `F^(N)` towards one) and a
/// block of twos (driving it towards the lower staircase), choosing each
/// `N_j` and block length by exact-walk dynamic programming against `y = 0`.
pub fn witness_x_k(rules: RuleSet, k: u32, p: &Rational, params: &WitnessParams) -> Result<Witness> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    let half = rat(1, 2);
    match rules {
        RuleSet::Ex1 if *p <= half => {
            return Err(Error::InvalidArgument(format!(
                "ex1 witnesses need p > 1/2 (got {})",
                format_rational(p)
            )));
        }
        RuleSet::Ex2 if *p <= Rational::zero() || *p >= Rational::one() => {
            return Err(Error::InvalidArgument("ex2 witnesses need 0 < p < 1".into()));
        }
        _ => {}
    }
    if params.prefix.iter().any(|&d| d != 0 && d != 2) {
        return Err(Error::InvalidArgument("the witness prefix may only contain 0 and 2".into()));
    }
    let pf = p.to_f64();
    let margin = u64::from(k) + 4;
    let mut blocks: Vec<(u8, u64)> = params.prefix.iter().map(|&d| (d, 1)).collect();
    let mut stages = Vec::new();
    let mut diagnostic = None;
    let mut n_prev = 0usize;

    for j in 1..=params.max_stages {
        let digit = if j % 2 == 1 { 0 } else { 2 };
        let eps = params.eps_for(j);
        let mut lower = n_prev + 1;
        if j == 1 {
            lower = lower.max(params.first_min);
        } else {
            lower = lower.max((params.growth * n_prev as f64).ceil() as usize);
        }
        if let Some(&m) = params.min_steps.get(j - 1) {
            lower = lower.max(m);
        }
        let full = params.max_block.min(params.max_steps as u64 + margin);
        if lower > params.max_steps || full == 0 {
            diagnostic = Some(format!(
                "stage {j} needs N >= {lower}, beyond the caps (max_steps {}, max_block {})",
                params.max_steps, params.max_block
            ));
            break;
        }
        let targets = stage_targets(rules, k, p, digit);
        let thresholds: Vec<Rational> = targets.iter().map(|t| t.0.clone()).collect();
        let goals: Vec<f64> = targets.iter().map(|t| t.1).collect();
        let candidate = |m: u64| {
            let mut b = blocks.clone();
            b.push((digit, m));
            b.push((2 - digit, full));
            BlockSeq::new(b, 0).expect("digits are ternary")
        };
        let law = dp_law(rules, &candidate(full), pf, params.max_steps, &thresholds, params.prune_eps);
        let f = cesaro_columns(&law.values);
        let Some(n) = (lower..=params.max_steps).find(|&n| stage_error(&f[n], &goals) < eps) else {
            diagnostic = Some(format!(
                "stage {j}: no N in [{lower}, {}] reaches tolerance {eps}",
                params.max_steps
            ));
            break;
        };
        let base = stage_error(&f[n], &goals);
        let block = if j == params.max_stages {
            full
        } else {
            let ok = |m: u64| {
                let law = dp_law(rules, &candidate(m), pf, n, &thresholds, params.prune_eps);
                let e = stage_error(&cesaro_columns(&law.values)[n], &goals);
                e < eps && e <= base + params.block_slack
            };
            let (mut lo, mut hi) = (1u64, full);
            while lo < hi {
                let mid = lo + (hi - lo) / 2;
                if ok(mid) {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            lo
        };
        let law = dp_law(rules, &candidate(block), pf, n, &thresholds, params.prune_eps);
        let fin = &cesaro_columns(&law.values)[n];
        stages.push(Stage {
            index: j,
            digit,
            block,
            n,
            eps,
            values: targets
                .iter()
                .zip(fin)
                .map(|((t, goal), v)| StageValue {
                    t: t.to_f64(),
                    t_exact: t.clone(),
                    goal: *goal,
                    achieved: *v,
                })
                .collect(),
        });
        blocks.push((digit, block));
        n_prev = n;
    }
    if stages.is_empty() {
        return Err(Error::WitnessExhausted(
            diagnostic.unwrap_or_else(|| "no stages requested".into()),
        ));
    }
    Ok(Witness {
        rules: rules.name().to_string(),
        k,
        p: p.clone(),
        point: BlockSeq::new(blocks, 0)?,
        complete: stages.len() == params.max_stages,
        stages,
        diagnostic,
    })
}
