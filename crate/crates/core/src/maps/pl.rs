use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{format_rational, Rational, Scalar};

/// Which of the two maps of a system is applied at a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    F,
    G,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::F => "f",
            Branch::G => "g",
        }
    }
}

/// Closed interval `[lo, hi]` with `lo < hi`.
#[derive(Clone, Debug, PartialEq)]
pub struct Interval<S> {
    lo: S,
    hi: S,
}

impl<S: Scalar> Interval<S> {
    pub fn new(lo: S, hi: S) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidMap(format!(
                "interval endpoints must satisfy lo < hi (got {lo:?}, {hi:?})"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn unit() -> Self {
        Self {
            lo: S::zero(),
            hi: S::one(),
        }
    }

    pub fn lo(&self) -> &S {
        &self.lo
    }

    pub fn hi(&self) -> &S {
        &self.hi
    }

    pub fn length(&self) -> S {
        self.hi.clone() - self.lo.clone()
    }

    pub fn contains(&self, x: &S) -> bool {
        *x >= self.lo && *x <= self.hi
    }
}

impl Interval<Rational> {
    pub fn to_scalar<T: Scalar>(&self) -> Interval<T> {
        Interval {
            lo: T::from_rational(&self.lo),
            hi: T::from_rational(&self.hi),
        }
    }
}

/// Continuous piecewise-linear self-map of an interval, given by its
/// breakpoints. Between breakpoints the map is linear.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseLinearMap<S> {
    xs: Vec<S>,
    ys: Vec<S>,
}

impl<S: Scalar> PiecewiseLinearMap<S> {
    /// Builds a map from `(x, y)` breakpoints. The x-coordinates must be
    /// strictly increasing and every y must lie in `[x_first, x_last]`.
    pub fn new(points: Vec<(S, S)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidMap("at least two breakpoints are required".into()));
        }
        let (xs, ys): (Vec<S>, Vec<S>) = points.into_iter().unzip();
        if let Some(i) = xs.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidMap(format!(
                "breakpoint x-coordinates must be strictly increasing (index {})",
                i + 1
            )));
        }
        let (lo, hi) = (&xs[0], &xs[xs.len() - 1]);
        if let Some(y) = ys.iter().find(|y| *y < lo || *y > hi) {
            return Err(Error::InvalidMap(format!(
                "value {y:?} leaves the domain [{lo:?}, {hi:?}]; maps must be self-maps"
            )));
        }
        Ok(Self { xs, ys })
    }

    pub fn identity(domain: &Interval<S>) -> Self {
        Self {
            xs: vec![domain.lo().clone(), domain.hi().clone()],
            ys: vec![domain.lo().clone(), domain.hi().clone()],
        }
    }

    pub fn constant(domain: &Interval<S>, c: S) -> Result<Self> {
        Self::new(vec![
            (domain.lo().clone(), c.clone()),
            (domain.hi().clone(), c),
        ])
    }

    pub fn domain(&self) -> Interval<S> {
        Interval {
            lo: self.xs[0].clone(),
            hi: self.xs[self.xs.len() - 1].clone(),
        }
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = (&S, &S)> {
        self.xs.iter().zip(self.ys.iter())
    }

    pub fn xs(&self) -> &[S] {
        &self.xs
    }

    pub fn ys(&self) -> &[S] {
        &self.ys
    }

    pub fn segment_count(&self) -> usize {
        self.xs.len() - 1
    }

    /// Evaluates the map, failing for points outside the domain.
    pub fn eval(&self, x: &S) -> Result<S> {
        let n = self.xs.len();
        if *x < self.xs[0] || *x > self.xs[n - 1] {
            return Err(Error::Domain {
                point: format!("{x:?}"),
                lo: format!("{:?}", self.xs[0]),
                hi: format!("{:?}", self.xs[n - 1]),
            });
        }
        Ok(self.eval_in_domain(x))
    }

    /// Evaluates without the domain check; points outside are clamped to
    /// the nearest end segment's endpoint value.
    pub fn eval_in_domain(&self, x: &S) -> S {
        let n = self.xs.len();
        if *x <= self.xs[0] {
            return self.ys[0].clone();
        }
        if *x >= self.xs[n - 1] {
            return self.ys[n - 1].clone();
        }
        // Index of the first breakpoint strictly greater than x.
        let upper = self.xs.partition_point(|b| b <= x);
        let i = upper - 1;
        if self.xs[i] == *x {
            return self.ys[i].clone();
        }
        let (x0, x1) = (&self.xs[i], &self.xs[i + 1]);
        let (y0, y1) = (&self.ys[i], &self.ys[i + 1]);
        y0.clone() + (y1.clone() - y0.clone()) * (x.clone() - x0.clone()) / (x1.clone() - x0.clone())
    }

    pub fn slopes(&self) -> Vec<S> {
        self.xs
            .windows(2)
            .zip(self.ys.windows(2))
            .map(|(x, y)| (y[1].clone() - y[0].clone()) / (x[1].clone() - x[0].clone()))
            .collect()
    }

    /// Largest absolute slope, which is the least Lipschitz constant of a
    /// continuous piecewise-linear map.
    pub fn lipschitz_constant(&self) -> S {
        self.slopes()
            .into_iter()
            .map(|s| s.abs())
            .fold(S::zero(), S::max_of)
    }

    /// The Lipschitz constant when it is strictly below one.
    pub fn contraction_constant(&self) -> Option<S> {
        let l = self.lipschitz_constant();
        (l < S::one()).then_some(l)
    }

    /// Sorted union of both maps' breakpoint x-coordinates.
    pub fn merged_breakpoints(&self, other: &Self) -> Vec<S> {
        let mut all: Vec<S> = self.xs.iter().chain(other.xs.iter()).cloned().collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        all.dedup();
        all
    }

    /// Exact sup-distance `sup_x |self(x) - other(x)|`. The difference of two
    /// PL maps is PL on the merged breakpoints, so the sup is attained there.
    pub fn sup_distance(&self, other: &Self) -> Result<S> {
        if self.domain() != other.domain() {
            return Err(Error::InvalidMap("sup-distance needs a common domain".into()));
        }
        Ok(self
            .merged_breakpoints(other)
            .iter()
            .map(|x| (self.eval_in_domain(x) - other.eval_in_domain(x)).abs())
            .fold(S::zero(), S::max_of))
    }

    /// Returns the constant value of the map on the open piece `(u, v)`, if
    /// the map is constant there. `(u, v)` must not contain a breakpoint.
    pub(crate) fn constant_on(&self, u: &S, v: &S) -> Option<S> {
        let a = self.eval_in_domain(u);
        let b = self.eval_in_domain(v);
        (a == b).then_some(a)
    }
}

impl PiecewiseLinearMap<Rational> {
    /// Converts the exact map into another scalar type.
    pub fn to_scalar<T: Scalar>(&self) -> PiecewiseLinearMap<T> {
        PiecewiseLinearMap {
            xs: self.xs.iter().map(T::from_rational).collect(),
            ys: self.ys.iter().map(T::from_rational).collect(),
        }
    }

    pub fn describe(&self) -> String {
        self.breakpoints()
            .map(|(x, y)| format!("({}, {})", format_rational(x), format_rational(y)))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

impl PiecewiseLinearMap<f64> {
    /// Hot-path evaluation for simulation: no domain check, no allocation.
    #[inline]
    pub fn eval_f64(&self, x: f64) -> f64 {
        let xs = &self.xs;
        let n = xs.len();
        if x <= xs[0] {
            return self.ys[0];
        }
        if x >= xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = if n <= 8 {
            let mut i = 0;
            while xs[i + 1] <= x {
                i += 1;
            }
            i
        } else {
            xs.partition_point(|b| *b <= x) - 1
        };
        let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
        self.ys[i] + (self.ys[i + 1] - self.ys[i]) * t
    }
}

/// Sorted, deduplicated finite set used for exact membership tests.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteSet<S> {
    points: Vec<S>,
}

impl<S: Scalar> FiniteSet<S> {
    pub fn new(mut points: Vec<S>) -> Self {
        points.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        points.dedup();
        Self { points }
    }

    pub fn contains(&self, x: &S) -> bool {
        self.index_of(x).is_some()
    }

    pub fn index_of(&self, x: &S) -> Option<usize> {
        let i = self.points.partition_point(|p| p < x);
        (i < self.points.len() && self.points[i] == *x).then_some(i)
    }

    pub fn points(&self) -> &[S] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// A part of the interval where neither map lands in the target set.
#[derive(Clone, Debug, PartialEq)]
pub enum Uncovered<S> {
    Point(S),
    Open(S, S),
}

/// Exact check of the one-step covering property: for every x, `f(x)` or
/// `g(x)` lies in `set`. Returns the uncovered pieces (empty when covering
/// holds).
///
/// On each open piece between merged breakpoints both maps are linear, so a
/// map hits the finite set on the whole piece only if it is constant there
/// with a value in the set; otherwise it hits it in finitely many points,
/// and the piece is uncovered.
pub fn covering_gaps<S: Scalar>(
    f: &PiecewiseLinearMap<S>,
    g: &PiecewiseLinearMap<S>,
    set: &FiniteSet<S>,
) -> Vec<Uncovered<S>> {
    let xs = f.merged_breakpoints(g);
    let mut gaps = Vec::new();
    let hits = |m: &PiecewiseLinearMap<S>, x: &S| set.contains(&m.eval_in_domain(x));
    for (k, x) in xs.iter().enumerate() {
        if !hits(f, x) && !hits(g, x) {
            gaps.push(Uncovered::Point(x.clone()));
        }
        if let Some(v) = xs.get(k + 1) {
            let covered = |m: &PiecewiseLinearMap<S>| {
                m.constant_on(x, v).is_some_and(|c| set.contains(&c))
            };
            if !covered(f) && !covered(g) {
                gaps.push(Uncovered::Open(x.clone(), v.clone()));
            }
        }
    }
    gaps
}
