use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::engine::probs::{Mode, StepProbabilities};
use crate::maps::{PiecewiseLinearMap, SystemConfig};
use crate::scalar::{Rational, Scalar};

/// A point mass of the joint law of `(x_i, y_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom<S> {
    pub x: S,
    pub y: S,
    pub mass: S,
}

/// Joint law of the coupled pair at one step. Masses plus `pruned_mass`
/// add up to one.
#[derive(Clone, Debug, PartialEq)]
pub struct PairLaw<S> {
    pub step: usize,
    pub atoms: Vec<Atom<S>>,
    pub pruned_mass: S,
}

impl<S: Scalar> PairLaw<S> {
    pub fn point_mass(x: S, y: S) -> Self {
        Self {
            step: 0,
            atoms: vec![Atom { x, y, mass: S::one() }],
            pruned_mass: S::zero(),
        }
    }

    pub fn total_mass(&self) -> S {
        self.atoms
            .iter()
            .fold(self.pruned_mass.clone(), |acc, a| acc + a.mass.clone())
    }

    /// Law of `|x - y|` as sorted `(distance, mass)` pairs.
    pub fn distance_law(&self) -> Vec<(S, S)> {
        let mut d: Vec<(S, S)> = self
            .atoms
            .iter()
            .map(|a| ((a.x.clone() - a.y.clone()).abs(), a.mass.clone()))
            .collect();
        d.sort_by(|a, b| cmp(&a.0, &b.0));
        let mut out: Vec<(S, S)> = Vec::with_capacity(d.len());
        for (dist, mass) in d {
            match out.last_mut() {
                Some(last) if last.0 == dist => last.1 = last.1.clone() + mass,
                _ => out.push((dist, mass)),
            }
        }
        out
    }

    /// `P(|x - y| < t_j)` for each threshold of an increasing grid.
    pub fn below(&self, thresholds: &[S]) -> Vec<S> {
        let mut buckets = vec![S::zero(); thresholds.len() + 1];
        for a in &self.atoms {
            let d = (a.x.clone() - a.y.clone()).abs();
            let j = thresholds.partition_point(|t| *t <= d);
            buckets[j] = buckets[j].clone() + a.mass.clone();
        }
        let mut acc = S::zero();
        buckets[..thresholds.len()]
            .iter()
            .map(|b| {
                acc = acc.clone() + b.clone();
                acc.clone()
            })
            .collect()
    }
}

fn cmp<S: PartialOrd>(a: &S, b: &S) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Equal)
}

/// Limits on the size of propagated laws.
#[derive(Clone, Debug)]
pub struct ExactParams<S> {
    pub max_atoms: usize,
    /// Atoms lighter than this are dropped (zero keeps everything).
    pub prune_eps: S,
    /// Merge atoms at identical `(x, y)`. Turning this off only costs memory.
    pub coalesce: bool,
}

impl<S: Scalar> Default for ExactParams<S> {
    fn default() -> Self {
        Self {
            max_atoms: 1_000_000,
            prune_eps: S::zero(),
            coalesce: true,
        }
    }
}

/// Iterator over the successive laws of the coupled pair.
pub struct LawPropagator<'a, S> {
    f: &'a PiecewiseLinearMap<S>,
    g: &'a PiecewiseLinearMap<S>,
    p: S,
    q: S,
    params: ExactParams<S>,
    next: Option<PairLaw<S>>,
}

impl<'a, S: Scalar> LawPropagator<'a, S> {
    pub fn new(
        f: &'a PiecewiseLinearMap<S>,
        g: &'a PiecewiseLinearMap<S>,
        p: S,
        x: S,
        y: S,
        params: ExactParams<S>,
    ) -> Result<Self> {
        let domain = f.domain();
        for v in [&x, &y] {
            if !domain.contains(v) {
                return Err(Error::Domain {
                    point: format!("{v:?}"),
                    lo: format!("{:?}", domain.lo()),
                    hi: format!("{:?}", domain.hi()),
                });
            }
        }
        let q = S::one() - p.clone();
        Ok(Self {
            f,
            g,
            p,
            q,
            params,
            next: Some(PairLaw::point_mass(x, y)),
        })
    }

    fn advance(&self, law: &PairLaw<S>) -> PairLaw<S> {
        let mut atoms = Vec::with_capacity(law.atoms.len() * 2);
        for a in &law.atoms {
            for (map, w) in [(self.f, &self.p), (self.g, &self.q)] {
                if w.is_zero() {
                    continue;
                }
                atoms.push(Atom {
                    x: map.eval_in_domain(&a.x),
                    y: map.eval_in_domain(&a.y),
                    mass: a.mass.clone() * w.clone(),
                });
            }
        }
        if self.params.coalesce {
            atoms.sort_by(|a, b| cmp(&a.x, &b.x).then_with(|| cmp(&a.y, &b.y)));
            let mut merged: Vec<Atom<S>> = Vec::with_capacity(atoms.len());
            for a in atoms {
                match merged.last_mut() {
                    Some(last) if last.x == a.x && last.y == a.y => {
                        last.mass = last.mass.clone() + a.mass;
                    }
                    _ => merged.push(a),
                }
            }
            atoms = merged;
        }
        let mut pruned = law.pruned_mass.clone();
        if self.params.prune_eps > S::zero() {
            atoms.retain(|a| {
                if a.mass < self.params.prune_eps {
                    pruned = pruned.clone() + a.mass.clone();
                    false
                } else {
                    true
                }
            });
        }
        if atoms.len() > self.params.max_atoms {
            atoms.sort_by(|a, b| cmp(&b.mass, &a.mass));
            for a in atoms.drain(self.params.max_atoms..) {
                pruned = pruned + a.mass;
            }
            atoms.sort_by(|a, b| cmp(&a.x, &b.x).then_with(|| cmp(&a.y, &b.y)));
        }
        PairLaw {
            step: law.step + 1,
            atoms,
            pruned_mass: pruned,
        }
    }
}

impl<S: Scalar> Iterator for LawPropagator<'_, S> {
    type Item = PairLaw<S>;

    fn next(&mut self) -> Option<PairLaw<S>> {
        let law = self.next.take()?;
        self.next = Some(self.advance(&law));
        Some(law)
    }
}

/// Laws of `(x_i, y_i)` for `i = 0..=n_max`, with the maps evaluated in `S`.
pub fn propagate<S: Scalar>(
    f: &PiecewiseLinearMap<S>,
    g: &PiecewiseLinearMap<S>,
    p: S,
    x: S,
    y: S,
    n_max: usize,
    params: ExactParams<S>,
) -> Result<Vec<PairLaw<S>>> {
    Ok(LawPropagator::new(f, g, p, x, y, params)?
        .take(n_max + 1)
        .collect())
}

/// Exact rational laws of the coupled pair for `i = 0..=n_max`.
pub fn propagate_exact(
    config: &SystemConfig,
    x: &Rational,
    y: &Rational,
    n_max: usize,
    params: ExactParams<Rational>,
) -> Result<Vec<PairLaw<Rational>>> {
    propagate(&config.f, &config.g, config.p.clone(), x.clone(), y.clone(), n_max, params)
}

/// Tabulates `P(|x_i - y_i| < t)` from a sequence of laws. Thresholds must
/// be increasing.
pub fn step_probabilities_exact<S: Scalar>(
    laws: &[PairLaw<S>],
    thresholds: &[S],
) -> StepProbabilities<S> {
    let mut table = empty_table(laws.first(), thresholds);
    for law in laws {
        push_row(&mut table, law, thresholds);
    }
    table
}

/// Same as [`propagate_exact`] followed by [`step_probabilities_exact`],
/// without keeping every law in memory.
pub fn exact_step_probabilities(
    config: &SystemConfig,
    x: &Rational,
    y: &Rational,
    n_max: usize,
    thresholds: &[Rational],
    params: ExactParams<Rational>,
) -> Result<StepProbabilities<Rational>> {
    let laws = LawPropagator::new(&config.f, &config.g, config.p.clone(), x.clone(), y.clone(), params)?;
    let mut table: Option<StepProbabilities<Rational>> = None;
    for law in laws.take(n_max + 1) {
        let t = table.get_or_insert_with(|| empty_table(Some(&law), thresholds));
        push_row(t, &law, thresholds);
    }
    Ok(table.expect("at least one step"))
}

fn empty_table<S: Scalar>(first: Option<&PairLaw<S>>, thresholds: &[S]) -> StepProbabilities<S> {
    let (x0, y0) = first
        .and_then(|l| l.atoms.first())
        .map_or((f64::NAN, f64::NAN), |a| (a.x.to_f64(), a.y.to_f64()));
    StepProbabilities {
        x0,
        y0,
        thresholds: thresholds.iter().map(Scalar::to_f64).collect(),
        values: Vec::new(),
        err: Vec::new(),
        mode: Mode::Exact,
    }
}

fn push_row<S: Scalar>(table: &mut StepProbabilities<S>, law: &PairLaw<S>, thresholds: &[S]) {
    table.values.push(law.below(thresholds));
    table.err.push(vec![law.pruned_mass.to_f64(); thresholds.len()]);
}
