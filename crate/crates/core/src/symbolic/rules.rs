use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::maps::{Branch, Builtin};
use crate::symbolic::seq::BlockSeq;

/// Symbolic action of the two builtin ternary systems.
///
/// `ex1`: `g(s) = 0s`, `f(0s) = f(2s) = s`, `f(1s) = s̄`.
/// `ex2`: `f(0s) = s`, `f(1s) = 2s̄`, `f(2s) = 2s`, `g(0s) = 0s`,
/// `g(1s) = 0s̄`, `g(2s) = s`. Here `s̄` swaps the digits 0 and 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RuleSet {
    Ex1,
    Ex2,
}

impl RuleSet {
    pub fn name(self) -> &'static str {
        match self {
            RuleSet::Ex1 => "ex1",
            RuleSet::Ex2 => "ex2",
        }
    }

    /// The piecewise-linear system these rules describe.
    pub fn system(self) -> Builtin {
        match self {
            RuleSet::Ex1 => Builtin::Example1,
            RuleSet::Ex2 => Builtin::Example2,
        }
    }

    pub fn apply(self, branch: Branch, seq: &BlockSeq) -> BlockSeq {
        let (head, rest) = seq.pop();
        match (self, branch, head) {
            (RuleSet::Ex1, Branch::G, _) => seq.prepend(0),
            (RuleSet::Ex1, Branch::F, 1) => rest.conjugate(),
            (RuleSet::Ex1, Branch::F, _) => rest,
            (RuleSet::Ex2, Branch::F, 0) | (RuleSet::Ex2, Branch::G, 2) => rest,
            (RuleSet::Ex2, Branch::F, 1) => rest.conjugate().prepend(2),
            (RuleSet::Ex2, Branch::G, 1) => rest.conjugate().prepend(0),
            (RuleSet::Ex2, _, _) => seq.clone(),
        }
    }
}

impl fmt::Display for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RuleSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ex1" | "example1" => Ok(RuleSet::Ex1),
            "ex2" | "example2" => Ok(RuleSet::Ex2),
            _ => Err(Error::Parse(format!("unknown rule set `{s}` (expected ex1 or ex2)"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::builtin;
    use crate::scalar::rat;

    fn seq(s: &str) -> BlockSeq {
        s.parse().unwrap()
    }

    #[test]
    fn ex1_examples() {
        assert_eq!(RuleSet::Ex1.apply(Branch::G, &seq("2^inf")).value(), rat(1, 3));
        assert_eq!(RuleSet::Ex1.apply(Branch::F, &seq("0 2^inf")), seq("2^inf"));
        assert_eq!(RuleSet::Ex1.apply(Branch::F, &seq("1 0^2 2 0^inf")).to_string(), "2^2 1 0^inf");
    }

    #[test]
    fn ex2_examples() {
        assert_eq!(RuleSet::Ex2.apply(Branch::F, &seq("1 0^inf")), seq("2^inf"));
        assert_eq!(RuleSet::Ex2.apply(Branch::G, &seq("1 0^inf")).value(), rat(1, 3));
        assert_eq!(RuleSet::Ex2.apply(Branch::F, &seq("2 1 0^inf")), seq("2 1 0^inf"));
        assert_eq!(RuleSet::Ex2.apply(Branch::G, &seq("0 1 0^inf")), seq("0 1 0^inf"));
    }

    #[test]
    fn agrees_with_maps_on_small_sequences() {
        for rules in [RuleSet::Ex1, RuleSet::Ex2] {
            let config = builtin(rules.system(), rat(1, 2)).unwrap();
            for code in 0..3u32.pow(4) {
                let digits: Vec<u8> = (0..4).map(|i| ((code / 3u32.pow(i)) % 3) as u8).collect();
                for tail in 0..3 {
                    let s = BlockSeq::from_digits(&digits, tail).unwrap();
                    for (b, m) in [(Branch::F, &config.f), (Branch::G, &config.g)] {
                        assert_eq!(rules.apply(b, &s).value(), m.eval(&s.value()).unwrap(), "{rules} {b:?} {s}");
                    }
                }
            }
        }
    }
}
