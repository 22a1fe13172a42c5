use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::pl::{Interval, PiecewiseLinearMap};
use crate::scalar::{format_rational, parse_rational, Rational, Scalar};

/// The object of study: two maps of a common interval and the probability
/// `p` of applying `f` at each step (independently across steps).
#[derive(Clone, Debug, PartialEq)]
pub struct SystemConfig {
    pub f: PiecewiseLinearMap<Rational>,
    pub g: PiecewiseLinearMap<Rational>,
    pub p: Rational,
    pub interval: Interval<Rational>,
}

impl SystemConfig {
    pub fn new(
        f: PiecewiseLinearMap<Rational>,
        g: PiecewiseLinearMap<Rational>,
        p: Rational,
    ) -> Result<Self> {
        let interval = f.domain();
        if g.domain() != interval {
            return Err(Error::InvalidConfig("f and g must share the same domain".into()));
        }
        check_probability(&p)?;
        Ok(Self { f, g, p, interval })
    }

    pub fn with_p(&self, p: Rational) -> Result<Self> {
        check_probability(&p)?;
        Ok(Self { p, ..self.clone() })
    }

    /// The same maps with the roles of `f` and `g` exchanged (and `p`
    /// replaced by `1 - p`), which describes the same random system.
    pub fn swapped(&self) -> Self {
        Self {
            f: self.g.clone(),
            g: self.f.clone(),
            p: Rational::from_integer(1.into()) - self.p.clone(),
            interval: self.interval.clone(),
        }
    }

    pub fn float_maps(&self) -> (PiecewiseLinearMap<f64>, PiecewiseLinearMap<f64>) {
        (self.f.to_scalar(), self.g.to_scalar())
    }

    pub fn p_f64(&self) -> f64 {
        self.p.to_f64()
    }
}

pub(crate) fn check_probability(p: &Rational) -> Result<()> {
    if *p < Rational::from_integer(0.into()) || *p > Rational::from_integer(1.into()) {
        return Err(Error::InvalidConfig(format!(
            "probability {} is outside [0, 1]",
            format_rational(p)
        )));
    }
    Ok(())
}

/// JSON form of a map: `{"interval": ["0","1"], "breakpoints": [["0","0"], ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MapJson {
    pub interval: [String; 2],
    pub breakpoints: Vec<[String; 2]>,
}

impl MapJson {
    pub fn from_map(map: &PiecewiseLinearMap<Rational>) -> Self {
        let d = map.domain();
        Self {
            interval: [format_rational(d.lo()), format_rational(d.hi())],
            breakpoints: map
                .breakpoints()
                .map(|(x, y)| [format_rational(x), format_rational(y)])
                .collect(),
        }
    }

    pub fn to_map(&self) -> Result<PiecewiseLinearMap<Rational>> {
        let lo = parse_rational(&self.interval[0])?;
        let hi = parse_rational(&self.interval[1])?;
        let interval = Interval::new(lo, hi)?;
        let points = self
            .breakpoints
            .iter()
            .map(|[x, y]| Ok((parse_rational(x)?, parse_rational(y)?)))
            .collect::<Result<Vec<_>>>()?;
        let map = PiecewiseLinearMap::new(points)?;
        if map.domain() != interval {
            return Err(Error::InvalidMap(
                "first and last breakpoints must sit on the interval endpoints".into(),
            ));
        }
        Ok(map)
    }
}

/// JSON form of a system: two maps plus an optional `p` (string rational).
/// Extra fields (such as those written for perturbed systems) are ignored.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemJson {
    pub f: MapJson,
    pub g: MapJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<String>,
}

impl SystemJson {
    pub fn from_config(config: &SystemConfig) -> Self {
        Self {
            f: MapJson::from_map(&config.f),
            g: MapJson::from_map(&config.g),
            p: Some(format_rational(&config.p)),
        }
    }

    /// Builds the configuration; `p_override` wins over the file's `p`.
    pub fn to_config(&self, p_override: Option<Rational>) -> Result<SystemConfig> {
        let p = match (p_override, &self.p) {
            (Some(p), _) => p,
            (None, Some(p)) => parse_rational(p)?,
            (None, None) => {
                return Err(Error::InvalidConfig("no probability p given".into()));
            }
        };
        SystemConfig::new(self.f.to_map()?, self.g.to_map()?, p)
    }
}
