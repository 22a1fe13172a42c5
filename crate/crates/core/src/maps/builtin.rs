use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::maps::config::SystemConfig;
use crate::maps::pl::PiecewiseLinearMap;
use crate::scalar::{rat, Rational};

/// Named systems that ship with the library.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Builtin {
    /// Tripling-type tent `f` with slopes 3, -3, 3 and `g(x) = x/3`.
    Example1,
    /// Two non-chaotic maps whose random composition is maximally chaotic.
    Example2,
    /// `f(x) = x/2`, `g(x) = x/2 + 1/2`: distances halve every step.
    HalvingPair,
    /// A pair of mixing maps with slopes 4 and 1/8.
    MixingPair,
}

impl Builtin {
    pub const ALL: [Builtin; 4] = [
        Builtin::Example1,
        Builtin::Example2,
        Builtin::HalvingPair,
        Builtin::MixingPair,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Example1 => "example1",
            Builtin::Example2 => "example2",
            Builtin::HalvingPair => "halving_pair",
            Builtin::MixingPair => "mixing_pair",
        }
    }

    pub fn maps(self) -> (PiecewiseLinearMap<Rational>, PiecewiseLinearMap<Rational>) {
        let m = |pts: &[(i64, i64, i64, i64)]| {
            PiecewiseLinearMap::new(pts.iter().map(|&(a, b, c, d)| (rat(a, b), rat(c, d))).collect())
                .expect("builtin maps are valid")
        };
        match self {
            Builtin::Example1 => (
                m(&[(0, 1, 0, 1), (1, 3, 1, 1), (2, 3, 0, 1), (1, 1, 1, 1)]),
                m(&[(0, 1, 0, 1), (1, 1, 1, 3)]),
            ),
            // The middle branch of g joins (1/3, 1/3) to (2/3, 0), i.e. -x + 2/3.
            Builtin::Example2 => (
                m(&[(0, 1, 0, 1), (1, 3, 1, 1), (2, 3, 2, 3), (1, 1, 1, 1)]),
                m(&[(0, 1, 0, 1), (1, 3, 1, 3), (2, 3, 0, 1), (1, 1, 1, 1)]),
            ),
            Builtin::HalvingPair => (
                m(&[(0, 1, 0, 1), (1, 1, 1, 2)]),
                m(&[(0, 1, 1, 2), (1, 1, 1, 1)]),
            ),
            // On (5/8, 3/4] g is 4x - 5/2, the branch that keeps g continuous.
            Builtin::MixingPair => (
                m(&[(0, 1, 0, 1), (1, 4, 1, 1), (1, 2, 31, 32), (3, 4, 1, 1), (1, 1, 0, 1)]),
                m(&[
                    (0, 1, 15, 32),
                    (1, 4, 1, 2),
                    (3, 8, 1, 1),
                    (5, 8, 0, 1),
                    (3, 4, 1, 2),
                    (1, 1, 17, 32),
                ]),
            ),
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::UnknownBuiltin(s.to_string()))
    }
}

/// The named system with probability `p` of choosing `f`.
pub fn builtin(which: Builtin, p: Rational) -> Result<SystemConfig> {
    let (f, g) = which.maps();
    SystemConfig::new(f, g, p)
}

/// Looks a builtin up by name.
pub fn builtin_by_name(name: &str, p: Rational) -> Result<SystemConfig> {
    builtin(name.parse()?, p)
}

/// Identifies which builtin (if any) has exactly these maps.
pub fn identify(config: &SystemConfig) -> Option<Builtin> {
    Builtin::ALL.into_iter().find(|b| {
        let (f, g) = b.maps();
        f == config.f && g == config.g
    })
}
