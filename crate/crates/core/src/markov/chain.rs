use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::{Branch, FiniteSet, PiecewiseLinearMap, SystemConfig};
use crate::scalar::{format_rational, Rational};

/// Finite Markov chain with exact rational transition probabilities,
/// stored as sparse rows.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovChain {
    rows: Vec<Vec<(usize, Rational)>>,
}

impl MarkovChain {
    /// Merges repeated targets, drops zero entries and checks that every
    /// row sums to one.
    pub fn new(rows: Vec<Vec<(usize, Rational)>>) -> Result<Self> {
        let n = rows.len();
        let mut clean = Vec::with_capacity(n);
        for (i, row) in rows.into_iter().enumerate() {
            let mut row: Vec<(usize, Rational)> = row.into_iter().filter(|(_, m)| !m.is_zero()).collect();
            row.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, Rational)> = Vec::with_capacity(row.len());
            for (j, m) in row {
                if j >= n {
                    return Err(Error::UnknownState(format!("{j} (row {i} of a {n}-state chain)")));
                }
                if m < Rational::zero() {
                    return Err(Error::InvalidArgument(format!("negative transition mass in row {i}")));
                }
                match merged.last_mut() {
                    Some((k, acc)) if *k == j => *acc += m,
                    _ => merged.push((j, m)),
                }
            }
            let total: Rational = merged.iter().map(|e| &e.1).sum();
            if !total.is_one() {
                return Err(Error::InvalidArgument(format!(
                    "row {i} sums to {} instead of 1",
                    format_rational(&total)
                )));
            }
            clean.push(merged);
        }
        Ok(Self { rows: clean })
    }

    /// Builds a chain from a dense matrix.
    pub fn from_dense(matrix: Vec<Vec<Rational>>) -> Result<Self> {
        Self::new(
            matrix
                .into_iter()
                .map(|row| row.into_iter().enumerate().collect())
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> &[(usize, Rational)] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<(usize, Rational)>] {
        &self.rows
    }

    pub fn prob(&self, i: usize, j: usize) -> Rational {
        self.rows[i]
            .iter()
            .find(|e| e.0 == j)
            .map_or_else(Rational::zero, |e| e.1.clone())
    }

    pub fn to_dense_f64(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        self.rows
            .iter()
            .map(|row| {
                let mut dense = vec![0.0; n];
                for (j, m) in row {
                    dense[*j] = crate::scalar::rational_to_f64(m);
                }
                dense
            })
            .collect()
    }
}

/// Checks `f(A) ⊆ A` for one map, naming the first escaping point.
pub fn check_invariant(map: &PiecewiseLinearMap<Rational>, branch: Branch, set: &FiniteSet<Rational>) -> Result<()> {
    for a in set.points() {
        let image = map.eval(a)?;
        if !set.contains(&image) {
            return Err(Error::NotInvariant {
                map: branch.name(),
                point: format_rational(a),
                image: format_rational(&image),
            });
        }
    }
    Ok(())
}

/// The coupled pair `(x_n, y_n)` restricted to `A × A`, for a set `A` left
/// invariant by both maps. State `i * |A| + j` is `(a_i, a_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairChain {
    pub points: FiniteSet<Rational>,
    pub p: Rational,
    pub chain: MarkovChain,
}

impl PairChain {
    /// Builds the chain after checking `f(A) ⊆ A` and `g(A) ⊆ A` exactly.
    pub fn build(config: &SystemConfig, points: &[Rational]) -> Result<Self> {
        let set = FiniteSet::new(points.to_vec());
        if set.is_empty() {
            return Err(Error::InvalidArgument("the invariant set is empty".into()));
        }
        check_invariant(&config.f, Branch::F, &set)?;
        check_invariant(&config.g, Branch::G, &set)?;
        let idx = |map: &PiecewiseLinearMap<Rational>, a: &Rational| {
            set.index_of(&map.eval_in_domain(a)).expect("checked invariant")
        };
        let m = set.len();
        let fi: Vec<usize> = set.points().iter().map(|a| idx(&config.f, a)).collect();
        let gi: Vec<usize> = set.points().iter().map(|a| idx(&config.g, a)).collect();
        let q = Rational::one() - &config.p;
        let mut rows = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                rows.push(vec![(fi[i] * m + fi[j], config.p.clone()), (gi[i] * m + gi[j], q.clone())]);
            }
        }
        Ok(Self {
            points: set,
            p: config.p.clone(),
            chain: MarkovChain::new(rows)?,
        })
    }

    pub fn len(&self) -> usize {
        self.chain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chain.is_empty()
    }

    pub fn state(&self, s: usize) -> (&Rational, &Rational) {
        let m = self.points.len();
        (&self.points.points()[s / m], &self.points.points()[s % m])
    }

    pub fn state_index(&self, a: &Rational, b: &Rational) -> Result<usize> {
        let m = self.points.len();
        match (self.points.index_of(a), self.points.index_of(b)) {
            (Some(i), Some(j)) => Ok(i * m + j),
            _ => Err(Error::UnknownState(format!(
                "({}, {})",
                format_rational(a),
                format_rational(b)
            ))),
        }
    }

    /// `|a - b|` of state `s`.
    pub fn distance(&self, s: usize) -> Rational {
        let (a, b) = self.state(s);
        num_traits::Signed::abs(&(a - b))
    }

    pub fn to_json(&self) -> PairChainJson {
        PairChainJson {
            p: format_rational(&self.p),
            points: self.points.points().iter().map(format_rational).collect(),
            states: (0..self.len())
                .map(|s| {
                    let (a, b) = self.state(s);
                    [format_rational(a), format_rational(b)]
                })
                .collect(),
            transitions: self
                .chain
                .rows()
                .iter()
                .map(|row| row.iter().map(|(j, m)| (*j, format_rational(m))).collect())
                .collect(),
        }
    }
}

/// JSON form of a pair chain; transitions are sparse rows of
/// `(target, probability)`.
#[derive(Clone, Debug, Serialize)]
pub struct PairChainJson {
    pub p: String,
    pub points: Vec<String>,
    pub states: Vec<[String; 2]>,
    pub transitions: Vec<Vec<(usize, String)>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::Interval;
    use crate::scalar::rat;

    #[test]
    fn rows_are_checked_and_merged() {
        let c = MarkovChain::new(vec![vec![(0, rat(1, 2)), (0, rat(1, 2))]]).unwrap();
        assert_eq!(c.row(0), &[(0, rat(1, 1))]);
        assert!(MarkovChain::new(vec![vec![(0, rat(1, 2))]]).is_err());
        assert!(MarkovChain::new(vec![vec![(1, rat(1, 1))]]).is_err());
        assert!(MarkovChain::new(vec![vec![(0, rat(3, 2)), (0, rat(-1, 2))]]).is_err());
    }

    #[test]
    fn identity_and_collapse_chain() {
        let unit = Interval::unit();
        let f = PiecewiseLinearMap::identity(&unit);
        let g = PiecewiseLinearMap::constant(&unit, rat(0, 1)).unwrap();
        let config = SystemConfig::new(f, g, rat(1, 2)).unwrap();
        let pc = PairChain::build(&config, &[rat(1, 1), rat(0, 1)]).unwrap();
        assert_eq!(pc.len(), 4);
        let s11 = pc.state_index(&rat(1, 1), &rat(1, 1)).unwrap();
        let s00 = pc.state_index(&rat(0, 1), &rat(0, 1)).unwrap();
        assert_eq!(pc.chain.prob(s11, s11), rat(1, 2));
        assert_eq!(pc.chain.prob(s11, s00), rat(1, 2));
        assert_eq!(pc.chain.prob(s00, s00), rat(1, 1));
        assert!(pc.state_index(&rat(1, 2), &rat(0, 1)).is_err());
    }

    #[test]
    fn invariance_violation_names_the_point() {
        let config = crate::maps::builtin(crate::maps::Builtin::HalvingPair, rat(1, 2)).unwrap();
        let err = PairChain::build(&config, &[rat(0, 1), rat(1, 1)]).unwrap_err();
        assert!(matches!(err, Error::NotInvariant { map: "f", .. }), "{err}");
        // f and g share no fixed point, so only larger sets can be invariant.
        let single = PairChain::build(&config, &[rat(0, 1)]);
        assert!(single.is_err());
    }

    #[test]
    fn common_fixed_point_is_absorbing() {
        let unit = Interval::unit();
        let f = PiecewiseLinearMap::new(vec![(rat(0, 1), rat(1, 2)), (rat(1, 1), rat(1, 2))]).unwrap();
        let g = PiecewiseLinearMap::identity(&unit);
        let config = SystemConfig::new(f, g, rat(1, 3)).unwrap();
        let pc = PairChain::build(&config, &[rat(1, 2)]).unwrap();
        assert_eq!(pc.len(), 1);
        assert_eq!(pc.chain.row(0), &[(0, rat(1, 1))]);
    }
}
