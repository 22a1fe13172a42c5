use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::Interval;
use crate::scalar::{format_rational, parse_rational, pow_rational, rat, Rational, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridScheme {
    Uniform,
    Triadic,
    /// Triadic points merged with a 64-point uniform grid.
    Mixed,
    Custom,
}

impl fmt::Display for GridScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GridScheme::Uniform => "uniform",
            GridScheme::Triadic => "triadic",
            GridScheme::Mixed => "default",
            GridScheme::Custom => "custom",
        })
    }
}

/// Strictly increasing thresholds `t` in `(0, |I|]`, kept exact.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdGrid {
    values: Vec<Rational>,
    scheme: GridScheme,
}

/// Depth of the triadic scheme: points `3^-k` and `2 * 3^-k` down to `k = 12`.
pub const TRIADIC_DEPTH: u32 = 12;

impl ThresholdGrid {
    /// Sorts and deduplicates `values`, which must lie in `(0, length]`.
    pub fn new(mut values: Vec<Rational>, length: &Rational, scheme: GridScheme) -> Result<Self> {
        values.sort();
        values.dedup();
        if values.is_empty() {
            return Err(Error::InvalidArgument("threshold grid is empty".into()));
        }
        if let Some(bad) = values.iter().find(|t| **t <= rat(0, 1) || *t > length) {
            return Err(Error::InvalidArgument(format!(
                "threshold {} is outside (0, {}]",
                format_rational(bad),
                format_rational(length)
            )));
        }
        Ok(Self { values, scheme })
    }

    pub fn triadic(interval: &Interval<Rational>) -> Self {
        let len = interval.length();
        let third = rat(1, 3);
        let mut v = Vec::new();
        for k in 0..=TRIADIC_DEPTH {
            let p = pow_rational(&third, k);
            if k > 0 {
                v.push(&p * rat(2, 1) * &len);
            }
            v.push(p * &len);
        }
        Self::new(v, &len, GridScheme::Triadic).expect("triadic points are in range")
    }

    pub fn uniform(interval: &Interval<Rational>, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("uniform grid needs at least one point".into()));
        }
        let len = interval.length();
        let v = (1..=n).map(|j| rat(j.into(), n.into()) * &len).collect();
        Self::new(v, &len, GridScheme::Uniform)
    }

    /// Triadic points merged with `j/64 * |I|`.
    pub fn default_for(interval: &Interval<Rational>) -> Self {
        let mut v = Self::triadic(interval).values;
        v.extend(Self::uniform(interval, 64).expect("positive").values);
        Self::new(v, &interval.length(), GridScheme::Mixed).expect("in range")
    }

    pub fn custom(values: Vec<Rational>, interval: &Interval<Rational>) -> Result<Self> {
        Self::new(values, &interval.length(), GridScheme::Custom)
    }

    /// Reads one rational per line (blank lines and `#` comments ignored).
    pub fn parse_list(text: &str, interval: &Interval<Rational>) -> Result<Self> {
        let values = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(parse_rational)
            .collect::<Result<Vec<_>>>()?;
        Self::custom(values, interval)
    }

    /// Adds points, keeping the scheme label unless it changes the set.
    pub fn with_points(&self, extra: &[Rational], interval: &Interval<Rational>) -> Result<Self> {
        let mut v = self.values.clone();
        v.extend_from_slice(extra);
        let scheme = if v.len() == self.values.len() { self.scheme } else { GridScheme::Custom };
        let g = Self::new(v, &interval.length(), scheme)?;
        Ok(if g.values.len() == self.values.len() {
            Self { scheme: self.scheme, ..g }
        } else {
            g
        })
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn values_as<S: Scalar>(&self) -> Vec<S> {
        self.values.iter().map(S::from_rational).collect()
    }

    pub fn scheme(&self) -> GridScheme {
        self.scheme
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Textual grid choice: `default`, `triadic`, `uniform:N` or `file:PATH`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GridSpec {
    Default,
    Triadic,
    Uniform(u32),
    File(String),
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(GridSpec::Default),
            "triadic" => Ok(GridSpec::Triadic),
            _ => {
                if let Some(n) = s.strip_prefix("uniform:") {
                    let n = n
                        .parse::<u32>()
                        .map_err(|_| Error::Parse(format!("bad uniform grid size in `{s}`")))?;
                    Ok(GridSpec::Uniform(n))
                } else if let Some(path) = s.strip_prefix("file:") {
                    Ok(GridSpec::File(path.to_string()))
                } else {
                    Err(Error::Parse(format!(
                        "unknown grid `{s}` (expected default, triadic, uniform:N or file:PATH)"
                    )))
                }
            }
        }
    }
}

impl GridSpec {
    pub fn build(&self, interval: &Interval<Rational>) -> Result<ThresholdGrid> {
        match self {
            GridSpec::Default => Ok(ThresholdGrid::default_for(interval)),
            GridSpec::Triadic => Ok(ThresholdGrid::triadic(interval)),
            GridSpec::Uniform(n) => ThresholdGrid::uniform(interval, *n),
            GridSpec::File(path) => ThresholdGrid::parse_list(&std::fs::read_to_string(path)?, interval),
        }
    }
}
