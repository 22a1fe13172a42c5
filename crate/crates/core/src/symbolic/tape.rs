use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::engine::CoupledDynamics;
use crate::maps::Branch;
use crate::scalar::{Rational, Scalar};
use crate::symbolic::rules::RuleSet;
use crate::symbolic::seq::BlockSeq;

/// Position of a point in the random walk over its ternary expansion.
///
/// The current point is `pad^pushed` followed by the unread digits of the
/// initial point from index `shift` on, conjugated when an odd number of
/// ones has been read. For `ex1` the pad digit is always 0; for `ex2` at
/// most one digit is ever pushed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct WalkState {
    pub pushed: u32,
    pub pad: u8,
    pub shift: u32,
}

/// The initial point's digits, with prefix parities of ones.
#[derive(Clone, Debug)]
pub struct Tape {
    digits: Vec<u8>,
    tail: u8,
    parity: Vec<bool>,
}

impl Tape {
    pub fn new(x: &BlockSeq) -> Self {
        let digits = x.finite_digits();
        let mut parity = Vec::with_capacity(digits.len() + 1);
        let mut odd = false;
        parity.push(odd);
        for &d in &digits {
            odd ^= d == 1;
            parity.push(odd);
        }
        Self {
            digits,
            tail: x.tail(),
            parity,
        }
    }

    pub fn raw(&self, i: usize) -> u8 {
        self.digits.get(i).copied().unwrap_or(self.tail)
    }

    /// Whether the unread tail at `shift` is conjugated.
    pub fn conj(&self, shift: usize) -> bool {
        let l = self.digits.len();
        if shift <= l {
            self.parity[shift]
        } else {
            self.parity[l] ^ (self.tail == 1 && (shift - l) % 2 == 1)
        }
    }

    /// The digit under the head after `shift` digits were read.
    pub fn head(&self, shift: usize) -> u8 {
        let d = self.raw(shift);
        if self.conj(shift) {
            2 - d
        } else {
            d
        }
    }

    /// Exact value of the unread part at `shift` (with conjugation applied).
    pub fn unread_value(&self, shift: usize) -> Rational {
        let l = self.digits.len();
        let raw = if shift >= l {
            Rational::new(BigInt::from(self.tail), BigInt::from(2))
        } else {
            let mut acc = BigInt::zero();
            for &d in &self.digits[shift..] {
                acc = acc * 3u32 + d;
            }
            let numer = acc * 2u32 + self.tail;
            let denom = num_traits::pow(BigInt::from(3), l - shift) * 2u32;
            Rational::new(numer, denom)
        };
        if self.conj(shift) {
            Rational::one() - raw
        } else {
            raw
        }
    }
}

impl RuleSet {
    pub fn step(self, tape: &Tape, s: WalkState, branch: Branch) -> WalkState {
        match self {
            RuleSet::Ex1 => match branch {
                Branch::G => WalkState { pushed: s.pushed + 1, ..s },
                Branch::F if s.pushed > 0 => WalkState { pushed: s.pushed - 1, ..s },
                Branch::F => WalkState { shift: s.shift + 1, ..s },
            },
            RuleSet::Ex2 => {
                let head = if s.pushed > 0 { s.pad } else { tape.head(s.shift as usize) };
                let pop = || {
                    if s.pushed > 0 {
                        WalkState { pushed: 0, pad: 0, ..s }
                    } else {
                        WalkState { shift: s.shift + 1, ..s }
                    }
                };
                let push = |pad| WalkState {
                    pushed: 1,
                    pad,
                    shift: s.shift + 1,
                };
                match (branch, head) {
                    (Branch::F, 0) | (Branch::G, 2) => pop(),
                    (Branch::F, 1) => push(2),
                    (Branch::G, 1) => push(0),
                    _ => s,
                }
            }
        }
    }

    /// Exact value of the point described by `state`.
    pub fn state_value(self, tape: &Tape, state: WalkState) -> Rational {
        let w = tape.unread_value(state.shift as usize);
        let scale = num_traits::pow(Rational::from_integer(3.into()), state.pushed as usize);
        let pad = Rational::from_integer(state.pad.into());
        if state.pushed == 0 {
            w
        } else {
            // pad^P w = pad * (1 - 3^-P) / 2 + 3^-P w
            (pad * (scale.clone() - Rational::one()) / Rational::from_integer(2.into()) + w) / scale
        }
    }
}

const WINDOW: usize = 40;

/// Precomputed threshold comparisons for every reachable state.
///
/// For `ex1` it stores, per shift and threshold, the least number of pushed
/// zeros that brings the point below the threshold. For `ex2` it stores the
/// bucket of each of the three head configurations per shift.
#[derive(Clone, Debug)]
pub struct BucketTable {
    rules: RuleSet,
    count: usize,
    entries: Vec<u32>,
    max_shift: usize,
}

struct Comparator<'a> {
    tape: &'a Tape,
    thresholds: &'a [Rational],
    thresholds_f64: Vec<f64>,
    pow_k: f64,
}

impl Comparator<'_> {
    /// Is `(c + w) / 3^m < t_j`, where `w` is the unread value at `shift`
    /// and `window` its first digits?
    fn below(&self, shift: usize, window: u64, c: u8, m: u32, j: usize) -> bool {
        let scale = 3f64.powi(m as i32);
        let bound = scale * self.thresholds_f64[j] - f64::from(c);
        let lo = window as f64 / self.pow_k;
        let hi = (window as f64 + 1.0) / self.pow_k;
        let tol = 1e-12 * bound.abs().max(1e-300);
        if bound.is_finite() && lo.is_finite() {
            if hi < bound - tol {
                return true;
            }
            if lo > bound + tol {
                return false;
            }
        }
        let exact_bound = num_traits::pow(Rational::from_integer(3.into()), m as usize)
            * &self.thresholds[j]
            - Rational::from_integer(c.into());
        let pk = Rational::from_integer(num_traits::pow(BigInt::from(3), WINDOW));
        let lo = Rational::from_integer(window.into()) / &pk;
        let hi = Rational::from_integer((window + 1).into()) / pk;
        if hi < exact_bound {
            return true;
        }
        if lo >= exact_bound {
            return false;
        }
        self.tape.unread_value(shift) < exact_bound
    }
}

impl BucketTable {
    /// Tables for shifts `0..=max_shift`. Thresholds must be increasing.
    pub fn new(rules: RuleSet, tape: &Tape, thresholds: &[Rational], max_shift: usize) -> Self {
        let count = thresholds.len();
        let cmp = Comparator {
            tape,
            thresholds,
            thresholds_f64: thresholds.iter().map(Scalar::to_f64).collect(),
            pow_k: 3f64.powi(WINDOW as i32),
        };
        let full = 3u64.pow(WINDOW as u32) - 1;
        // Raw windows slide backwards: R_s = raw(s) 3^(K-1) + R_(s+1) / 3.
        let mut raw_windows = vec![0u64; max_shift + 1];
        let mut r = (0..WINDOW).fold(0u64, |acc, i| acc * 3 + u64::from(tape.raw(max_shift + i)));
        raw_windows[max_shift] = r;
        for s in (0..max_shift).rev() {
            r = u64::from(tape.raw(s)) * 3u64.pow(WINDOW as u32 - 1) + r / 3;
            raw_windows[s] = r;
        }
        let width = match rules {
            RuleSet::Ex1 => count,
            RuleSet::Ex2 => 3,
        };
        let mut entries = Vec::with_capacity((max_shift + 1) * width);
        for (s, raw) in raw_windows.into_iter().enumerate() {
            let window = if tape.conj(s) { full - raw } else { raw };
            match rules {
                RuleSet::Ex1 => {
                    let w = window as f64 / cmp.pow_k;
                    for j in 0..count {
                        let t = cmp.thresholds_f64[j];
                        let mut p = if w <= 0.0 || w < t {
                            0
                        } else {
                            ((w / t).ln() / 3f64.ln()).floor().max(0.0) as u32 + 1
                        };
                        while p > 0 && cmp.below(s, window, 0, p - 1, j) {
                            p -= 1;
                        }
                        while !cmp.below(s, window, 0, p, j) {
                            p += 1;
                        }
                        entries.push(p);
                    }
                }
                RuleSet::Ex2 => {
                    for (c, m) in [(0u8, 0u32), (0, 1), (2, 1)] {
                        let b = (0..count)
                            .collect::<Vec<_>>()
                            .partition_point(|&j| !cmp.below(s, window, c, m, j));
                        entries.push(b as u32);
                    }
                }
            }
        }
        Self {
            rules,
            count,
            entries,
            max_shift,
        }
    }

    /// Index of the first threshold strictly above the state's value.
    #[inline]
    pub fn bucket(&self, state: WalkState) -> usize {
        let s = state.shift as usize;
        debug_assert!(s <= self.max_shift);
        match self.rules {
            RuleSet::Ex1 => {
                let row = &self.entries[s * self.count..(s + 1) * self.count];
                row.partition_point(|&p| p > state.pushed)
            }
            RuleSet::Ex2 => {
                let variant = match (state.pushed, state.pad) {
                    (0, _) => 0,
                    (_, 0) => 1,
                    _ => 2,
                };
                self.entries[s * 3 + variant] as usize
            }
        }
    }

    pub fn threshold_count(&self) -> usize {
        self.count
    }
}

/// The pair `(x, 0)` moved symbolically; `0` is fixed by both maps, so the
/// distance is the value of `x_i` itself.
pub struct SymbolicPair {
    rules: RuleSet,
    tape: Tape,
    table: BucketTable,
}

impl SymbolicPair {
    pub fn new(rules: RuleSet, x: &BlockSeq, thresholds: &[Rational], n_max: usize) -> Self {
        let tape = Tape::new(x);
        let table = BucketTable::new(rules, &tape, thresholds, n_max);
        Self { rules, tape, table }
    }
}

impl CoupledDynamics for SymbolicPair {
    type State = WalkState;

    fn initial(&self) -> WalkState {
        WalkState::default()
    }

    #[inline]
    fn advance(&self, state: &mut WalkState, branch: Branch) {
        *state = self.rules.step(&self.tape, *state, branch);
    }

    #[inline]
    fn bucket(&self, state: &WalkState) -> usize {
        self.table.bucket(*state)
    }

    fn threshold_count(&self) -> usize {
        self.table.threshold_count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    fn seq(s: &str) -> BlockSeq {
        s.parse().unwrap()
    }

    #[test]
    fn walk_tracks_symbolic_images() {
        let branches = [Branch::F, Branch::G, Branch::G, Branch::F, Branch::F, Branch::F, Branch::G, Branch::F];
        for rules in [RuleSet::Ex1, RuleSet::Ex2] {
            for x in ["1 0 2 1^3 0^inf", "2^3 1 0^inf", "1^inf", "0 1 2 0^inf"] {
                let x = seq(x);
                let tape = Tape::new(&x);
                let (mut state, mut image) = (WalkState::default(), x.clone());
                for &b in branches.iter().cycle().take(40) {
                    state = rules.step(&tape, state, b);
                    image = rules.apply(b, &image);
                    assert_eq!(rules.state_value(&tape, state), image.value(), "{rules} {x}");
                }
            }
        }
    }

    #[test]
    fn buckets_match_exact_comparison() {
        let thresholds: Vec<Rational> = vec![rat(1, 27), rat(1, 9), rat(2, 9), rat(1, 3), rat(1, 2), rat(2, 3), rat(8, 9), rat(1, 1)];
        for rules in [RuleSet::Ex1, RuleSet::Ex2] {
            for x in ["1 0^inf", "0 2 0^inf", "2^inf", "1^inf", "2 1 0^2 2^3 0^inf"] {
                let x = seq(x);
                let tape = Tape::new(&x);
                let table = BucketTable::new(rules, &tape, &thresholds, 12);
                let pads: &[(u32, u8)] = match rules {
                    RuleSet::Ex1 => &[(0, 0), (1, 0), (2, 0), (3, 0), (5, 0)],
                    RuleSet::Ex2 => &[(0, 0), (1, 0), (1, 2)],
                };
                for shift in 0..=12 {
                    for &(pushed, pad) in pads {
                        let state = WalkState { pushed, pad, shift };
                        let v = rules.state_value(&tape, state);
                        let expected = thresholds.partition_point(|t| *t <= v);
                        assert_eq!(table.bucket(state), expected, "{rules} {x} {state:?}");
                    }
                }
            }
        }
    }
}
