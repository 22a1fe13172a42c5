use crate::engine::{Mode, StepProbabilities};
use crate::maps::Branch;
use crate::scalar::{Rational, Scalar};
use crate::symbolic::rules::RuleSet;
use crate::symbolic::seq::BlockSeq;
use crate::symbolic::tape::{BucketTable, Tape, WalkState};

/// Mass over walk states, stored densely: one row per shift, and within a
/// row one slot per pushed count (`ex1`) or head configuration (`ex2`).
struct Layer<S> {
    shift_lo: u32,
    rows: Vec<Vec<S>>,
}

fn slot_of(rules: RuleSet, s: WalkState) -> usize {
    match rules {
        RuleSet::Ex1 => s.pushed as usize,
        RuleSet::Ex2 => match (s.pushed, s.pad) {
            (0, _) => 0,
            (_, 0) => 1,
            _ => 2,
        },
    }
}

fn state_of(rules: RuleSet, shift: u32, slot: usize) -> WalkState {
    match rules {
        RuleSet::Ex1 => WalkState {
            pushed: slot as u32,
            pad: 0,
            shift,
        },
        RuleSet::Ex2 => match slot {
            0 => WalkState { pushed: 0, pad: 0, shift },
            1 => WalkState { pushed: 1, pad: 0, shift },
            _ => WalkState { pushed: 1, pad: 2, shift },
        },
    }
}

impl<S: Scalar> Layer<S> {
    fn add(&mut self, rules: RuleSet, state: WalkState, mass: S) {
        let r = (state.shift - self.shift_lo) as usize;
        let slot = slot_of(rules, state);
        let row = &mut self.rows[r];
        if row.len() <= slot {
            row.resize(slot + 1, S::zero());
        }
        row[slot] = row[slot].clone() + mass;
    }

    fn states(&self) -> impl Iterator<Item = (u32, usize, &S)> {
        self.rows.iter().enumerate().flat_map(move |(r, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, m)| !m.is_zero())
                .map(move |(slot, m)| (self.shift_lo + r as u32, slot, m))
        })
    }

    /// Drops states lighter than `eps`, returning the dropped mass, and
    /// trims empty rows at both ends.
    fn prune(&mut self, eps: &S) -> S {
        let mut dropped = S::zero();
        if *eps > S::zero() {
            for row in &mut self.rows {
                for m in row.iter_mut() {
                    if !m.is_zero() && *m < *eps {
                        dropped = dropped + m.clone();
                        *m = S::zero();
                    }
                }
            }
        }
        for row in &mut self.rows {
            while row.last().is_some_and(|m| m.is_zero()) {
                row.pop();
            }
        }
        let first = self.rows.iter().position(|r| !r.is_empty()).unwrap_or(self.rows.len());
        self.rows.drain(..first);
        self.shift_lo += first as u32;
        while self.rows.last().is_some_and(|r| r.is_empty()) {
            self.rows.pop();
        }
        dropped
    }
}

/// Law of `x_i` for `y = 0` by dynamic programming over walk states, with
/// masses in `S`. States lighter than `prune_eps` are discarded and the
/// discarded mass is reported in `err`.
pub fn dp_law<S: Scalar>(
    rules: RuleSet,
    x: &BlockSeq,
    p: S,
    n_max: usize,
    thresholds: &[Rational],
    prune_eps: S,
) -> StepProbabilities<S> {
    let tape = Tape::new(x);
    let table = BucketTable::new(rules, &tape, thresholds, n_max);
    let q = S::one() - p.clone();
    let k = thresholds.len();
    let mut layer = Layer {
        shift_lo: 0,
        rows: vec![vec![S::one()]],
    };
    let mut pruned = S::zero();
    let mut values = Vec::with_capacity(n_max + 1);
    let mut err = Vec::with_capacity(n_max + 1);
    for i in 0..=n_max {
        let mut buckets = vec![S::zero(); k + 1];
        for (shift, slot, m) in layer.states() {
            let b = table.bucket(state_of(rules, shift, slot));
            buckets[b] = buckets[b].clone() + m.clone();
        }
        let mut acc = S::zero();
        values.push(
            buckets[..k]
                .iter()
                .map(|b| {
                    acc = acc.clone() + b.clone();
                    acc.clone()
                })
                .collect(),
        );
        err.push(vec![pruned.to_f64(); k]);
        if i == n_max {
            break;
        }
        let mut next = Layer {
            shift_lo: layer.shift_lo,
            rows: vec![Vec::new(); layer.rows.len() + 1],
        };
        for (shift, slot, m) in layer.states() {
            let state = state_of(rules, shift, slot);
            for (branch, w) in [(Branch::F, &p), (Branch::G, &q)] {
                if !w.is_zero() {
                    next.add(rules, rules.step(&tape, state, branch), m.clone() * w.clone());
                }
            }
        }
        pruned = pruned + next.prune(&prune_eps);
        layer = next;
    }
    StepProbabilities {
        x0: x.value().to_f64(),
        y0: 0.0,
        thresholds: thresholds.iter().map(Scalar::to_f64).collect(),
        values,
        err,
        mode: Mode::Exact,
    }
}

/// Exact rational law of `x_i` against `y = 0` for `i = 0..=n_max`.
pub fn dp_exact_law(
    rules: RuleSet,
    x: &BlockSeq,
    p: &Rational,
    n_max: usize,
    thresholds: &[Rational],
) -> StepProbabilities<Rational> {
    dp_law(rules, x, p.clone(), n_max, thresholds, Rational::from_integer(0.into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn two_step_enumeration() {
        let one = BlockSeq::one();
        let t = [rat(1, 3)];
        let law = dp_exact_law(RuleSet::Ex1, &one, &rat(1, 2), 2, &t);
        assert_eq!(law.values[1][0], rat(0, 1));
        assert_eq!(law.values[2][0], rat(1, 4));
        let law = dp_exact_law(RuleSet::Ex1, &one, &rat(2, 3), 2, &t);
        assert_eq!(law.values[2][0], rat(1, 9));
    }

    #[test]
    fn float_and_exact_agree() {
        let x: BlockSeq = "0^2 2^3 1 0^inf".parse().unwrap();
        let t = [rat(1, 27), rat(2, 9), rat(2, 3)];
        for rules in [RuleSet::Ex1, RuleSet::Ex2] {
            let exact = dp_exact_law(rules, &x, &rat(3, 5), 10, &t);
            let float = dp_law(rules, &x, 0.6f64, 10, &t, 0.0f64);
            for (a, b) in exact.values.iter().zip(&float.values) {
                for (u, v) in a.iter().zip(b) {
                    assert!((u.to_f64() - v).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn long_run_limits_with_pruning() {
        // For 2^∞ the point is exactly 3^-P, so it drops below 1/3 once two
        // zeros are pushed; a long but finite block of twos needs only one.
        let t = [rat(1, 3)];
        let law = dp_law(RuleSet::Ex1, &BlockSeq::one(), 2.0f64 / 3.0, 200, &t, 1e-12);
        assert!(law.err[200][0] < 1e-8);
        assert!((law.values[200][0] - 0.25).abs() < 0.02, "{}", law.values[200][0]);
        let x: BlockSeq = "2^400 0^inf".parse().unwrap();
        let law = dp_law(RuleSet::Ex1, &x, 2.0f64 / 3.0, 200, &t, 1e-12);
        assert!((law.values[200][0] - 0.5).abs() < 0.02, "{}", law.values[200][0]);
    }
}
