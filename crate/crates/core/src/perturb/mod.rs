//! Small perturbations of a system that make it absorbed by a finite
//! invariant set, which forces zero chaos.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::{covering_gaps, Branch, FiniteSet, MapJson, PiecewiseLinearMap, SystemConfig, Uncovered};
use crate::markov::{check_absorption, check_invariant, AbsorptionReport, ProbeParams};
use crate::scalar::{format_rational, rat, Rational};

/// `δ = ε / max(1, L)` with `L` the larger Lipschitz constant, so that
/// `|x - y| < δ` moves either map by less than `ε`.
pub fn modulus_delta(f: &PiecewiseLinearMap<Rational>, g: &PiecewiseLinearMap<Rational>, eps: &Rational) -> Result<Rational> {
    if *eps <= Rational::zero() {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let l = [f.lipschitz_constant(), g.lipschitz_constant(), Rational::one()]
        .into_iter()
        .max()
        .expect("nonempty");
    Ok(eps / l)
}

/// Least `n` with `|I| / n < δ`.
pub fn resolution(length: &Rational, delta: &Rational) -> usize {
    let n = (length / delta).floor().to_integer() + 1;
    num_traits::ToPrimitive::to_usize(&n).expect("resolution fits in usize")
}

fn grid_point(f: &PiecewiseLinearMap<Rational>, n: usize, k: usize) -> Rational {
    let d = f.domain();
    d.lo() + d.length() * rat(k as i64, n as i64)
}

/// Images of the `n + 1` grid points under both maps, sorted and
/// deduplicated.
pub fn build_a(f: &PiecewiseLinearMap<Rational>, g: &PiecewiseLinearMap<Rational>, n: usize) -> Result<Vec<Rational>> {
    if n == 0 {
        return Err(Error::InvalidArgument("grid resolution must be at least 1".into()));
    }
    if f.domain() != g.domain() {
        return Err(Error::InvalidConfig("f and g must share the same domain".into()));
    }
    let mut a: Vec<Rational> = (0..=n)
        .flat_map(|k| {
            let x = grid_point(f, n, k);
            [f.eval_in_domain(&x), g.eval_in_domain(&x)]
        })
        .collect();
    a.sort();
    a.dedup();
    Ok(a)
}

/// Perturbed pair `f*`, `g*` together with its absorbing set.
#[derive(Clone, Debug, PartialEq)]
pub struct StarSystem {
    pub f_star: PiecewiseLinearMap<Rational>,
    pub g_star: PiecewiseLinearMap<Rational>,
    pub a: Vec<Rational>,
    pub n: usize,
    pub delta: Rational,
    pub epsilon: Rational,
    pub p: Rational,
}

impl StarSystem {
    pub fn config(&self) -> Result<SystemConfig> {
        SystemConfig::new(self.f_star.clone(), self.g_star.clone(), self.p.clone())
    }

    pub fn to_json(&self) -> StarSystemJson {
        StarSystemJson {
            f: MapJson::from_map(&self.f_star),
            g: MapJson::from_map(&self.g_star),
            p: format_rational(&self.p),
            a: self.a.iter().map(format_rational).collect(),
            n: self.n,
            delta: format_rational(&self.delta),
            epsilon: format_rational(&self.epsilon),
        }
    }
}

/// Map schema of a system plus the absorbing set and construction data.
/// Readable as an ordinary system file.
#[derive(Clone, Debug, Serialize, serde::Deserialize)]
pub struct StarSystemJson {
    pub f: MapJson,
    pub g: MapJson,
    pub p: String,
    #[serde(rename = "A")]
    pub a: Vec<String>,
    pub n: usize,
    pub delta: String,
    pub epsilon: String,
}

/// Builds `f*`, `g*` within `ε` of the system's maps such that
/// `A = {f(x_k), g(x_k)}` over an `n`-cell grid is invariant and reached in
/// one step from anywhere by one of the two maps. Every property is
/// verified exactly before returning.
pub fn construct_star(config: &SystemConfig, eps: &Rational) -> Result<StarSystem> {
    let (f, g) = (&config.f, &config.g);
    let delta = modulus_delta(f, g, eps)?;
    let n = resolution(&config.interval.length(), &delta);
    let a = build_a(f, g, n)?;
    let mut fp: Vec<(Rational, Rational)> = Vec::with_capacity(3 * n + 1);
    let mut gp: Vec<(Rational, Rational)> = Vec::with_capacity(3 * n + 1);
    let two = rat(2, 1);
    for k in 0..n {
        let left = grid_point(f, n, k);
        let right = grid_point(f, n, k + 1);
        let (fl, fr) = (f.eval_in_domain(&left), f.eval_in_domain(&right));
        let (gl, gr) = (g.eval_in_domain(&left), g.eval_in_domain(&right));
        let lo = a.partition_point(|v| *v <= left);
        let hi = a.partition_point(|v| *v < right);
        let inside = &a[lo..hi];
        // f* is flat at f(left) up to b1, g* flat at g(right) from b0 on.
        let (b0, b1) = match inside {
            [] => {
                let mid = (&left + &right) / &two;
                (mid.clone(), mid)
            }
            [first, .., last] | [first @ last] => ((&left + first) / &two, (last + &right) / &two),
        };
        if k == 0 {
            fp.push((left.clone(), fl.clone()));
            gp.push((left.clone(), gl.clone()));
        }
        fp.push((b1, fl));
        fp.push((right.clone(), fr));
        gp.push((b0, gr.clone()));
        gp.push((right, gr));
    }
    let star = StarSystem {
        f_star: PiecewiseLinearMap::new(fp)?,
        g_star: PiecewiseLinearMap::new(gp)?,
        a,
        n,
        delta,
        epsilon: eps.clone(),
        p: config.p.clone(),
    };
    let report = verify_star(&star, f, g)?;
    if let Some((cell, reason)) = report.first_failure(&star) {
        return Err(Error::Construction { cell, reason });
    }
    Ok(star)
}

/// Outcome of re-checking a perturbed system.
#[derive(Clone, Debug, Serialize)]
pub struct StarReport {
    pub sup_distance_f: String,
    pub sup_distance_g: String,
    pub sup_ok: bool,
    pub invariant: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariance_error: Option<String>,
    pub covering: bool,
    pub uncovered: Vec<String>,
    /// Cross-check through the absorption analysis (present when `A` is
    /// invariant).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub absorption: Option<AbsorptionReport>,
    pub passed: bool,
    #[serde(skip)]
    witness_point: Option<(Rational, String)>,
}

impl StarReport {
    /// Cell index and description of the first failed check.
    pub fn first_failure(&self, star: &StarSystem) -> Option<(usize, String)> {
        if self.passed {
            return None;
        }
        let (x, reason) = self.witness_point.clone()?;
        let d = star.f_star.domain();
        let pos = ((x - d.lo()) / d.length() * rat(star.n as i64, 1)).floor().to_integer();
        let cell = num_traits::ToPrimitive::to_usize(&pos).unwrap_or(0).min(star.n.saturating_sub(1));
        Some((cell, reason))
    }
}

/// Recomputes the sup-distances, invariance of `A` and the covering
/// property exactly, and cross-checks absorption.
pub fn verify_star(star: &StarSystem, f: &PiecewiseLinearMap<Rational>, g: &PiecewiseLinearMap<Rational>) -> Result<StarReport> {
    let df = f.sup_distance(&star.f_star)?;
    let dg = g.sup_distance(&star.g_star)?;
    let sup_ok = df < star.epsilon && dg < star.epsilon;
    let mut witness = None;
    if !sup_ok {
        let (map, orig) = if df >= star.epsilon { (&star.f_star, f) } else { (&star.g_star, g) };
        let x = orig
            .merged_breakpoints(map)
            .into_iter()
            .max_by_key(|x| num_traits::Signed::abs(&(orig.eval_in_domain(x) - map.eval_in_domain(x))))
            .expect("maps have breakpoints");
        witness = Some((x.clone(), format!("sup-distance reaches epsilon near x = {}", format_rational(&x))));
    }
    let set = FiniteSet::new(star.a.clone());
    let inv = check_invariant(&star.f_star, Branch::F, &set).and_then(|_| check_invariant(&star.g_star, Branch::G, &set));
    let invariance_error = inv.as_ref().err().map(ToString::to_string);
    if let (Err(Error::NotInvariant { point, .. }), None) = (&inv, &witness) {
        witness = Some((crate::scalar::parse_rational(point)?, invariance_error.clone().unwrap_or_default()));
    }
    let gaps = covering_gaps(&star.f_star, &star.g_star, &set);
    if let (Some(gap), None) = (gaps.first(), &witness) {
        let x = match gap {
            Uncovered::Point(x) => x.clone(),
            Uncovered::Open(u, v) => (u + v) / rat(2, 1),
        };
        witness = Some((x, "covering fails".to_string()));
    }
    let absorption = match (&inv, star.config()) {
        (Ok(()), Ok(config)) => Some(check_absorption(&config, &star.a, ProbeParams::default())?),
        _ => None,
    };
    let covering = gaps.is_empty();
    let invariant = inv.is_ok();
    Ok(StarReport {
        sup_distance_f: format_rational(&df),
        sup_distance_g: format_rational(&dg),
        sup_ok,
        invariant,
        invariance_error,
        covering,
        uncovered: gaps
            .iter()
            .map(|g| match g {
                Uncovered::Point(x) => format!("x = {}", format_rational(x)),
                Uncovered::Open(u, v) => format!("({}, {})", format_rational(u), format_rational(v)),
            })
            .collect(),
        passed: sup_ok && invariant && covering && absorption.as_ref().is_some_and(|r| r.covering),
        absorption,
        witness_point: witness,
    })
}
