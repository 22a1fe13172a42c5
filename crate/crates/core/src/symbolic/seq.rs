use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::One;

use crate::error::{Error, Result};
use crate::scalar::Rational;

/// Eventually constant ternary sequence `0.d_1 d_2 ...`, stored as finite
/// blocks `digit^count` followed by an infinite block `tail^∞`.
///
/// Triadic rationals have two expansions; [`BlockSeq::new`] stores the one
/// ending in `0^∞`, except for `1 = 2^∞` which has no other form.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BlockSeq {
    blocks: Vec<(u8, u64)>,
    tail: u8,
}

fn check_digit(d: u8) -> Result<()> {
    if d > 2 {
        return Err(Error::Parse(format!("ternary digit {d} is not 0, 1 or 2")));
    }
    Ok(())
}

impl BlockSeq {
    /// Builds and normalizes a sequence. Zero-length blocks are dropped and
    /// equal neighbours merged.
    pub fn new(blocks: Vec<(u8, u64)>, tail: u8) -> Result<Self> {
        Ok(Self::raw(blocks, tail)?.normalized())
    }

    /// Canonical block structure without choosing between the two
    /// expansions of a triadic rational.
    pub fn raw(blocks: Vec<(u8, u64)>, tail: u8) -> Result<Self> {
        check_digit(tail)?;
        let mut out: Vec<(u8, u64)> = Vec::with_capacity(blocks.len());
        for (d, c) in blocks {
            check_digit(d)?;
            if c == 0 {
                continue;
            }
            match out.last_mut() {
                Some(last) if last.0 == d => last.1 += c,
                _ => out.push((d, c)),
            }
        }
        while out.last().is_some_and(|b| b.0 == tail) {
            out.pop();
        }
        Ok(Self { blocks: out, tail })
    }

    pub fn from_digits(digits: &[u8], tail: u8) -> Result<Self> {
        Self::new(digits.iter().map(|&d| (d, 1)).collect(), tail)
    }

    pub fn constant(d: u8) -> Result<Self> {
        Self::raw(Vec::new(), d)
    }

    pub fn zero() -> Self {
        Self { blocks: Vec::new(), tail: 0 }
    }

    pub fn one() -> Self {
        Self { blocks: Vec::new(), tail: 2 }
    }

    fn normalized(self) -> Self {
        if self.tail != 2 || self.blocks.is_empty() {
            return self;
        }
        // r d 2^∞ with d < 2 equals r (d+1) 0^∞.
        let mut blocks = self.blocks;
        let (d, c) = blocks.pop().expect("nonempty");
        blocks.push((d, c - 1));
        blocks.push((d + 1, 1));
        Self::raw(blocks, 0).expect("digits stay ternary")
    }

    /// The other expansion of a triadic rational in `(0, 1)`, ending in
    /// `2^∞`.
    pub fn alternate(&self) -> Option<Self> {
        if self.tail != 0 || self.blocks.is_empty() {
            return None;
        }
        let mut blocks = self.blocks.clone();
        let (d, c) = blocks.pop().expect("nonempty");
        debug_assert!(d > 0);
        blocks.push((d, c - 1));
        blocks.push((d - 1, 1));
        Self::raw(blocks, 2).ok()
    }

    pub fn blocks(&self) -> &[(u8, u64)] {
        &self.blocks
    }

    pub fn tail(&self) -> u8 {
        self.tail
    }

    /// Number of digits before the infinite block.
    pub fn finite_len(&self) -> u64 {
        self.blocks.iter().map(|b| b.1).sum()
    }

    /// The `k`-th digit, counting from zero.
    pub fn digit(&self, k: u64) -> u8 {
        let mut pos = 0;
        for &(d, c) in &self.blocks {
            if k < pos + c {
                return d;
            }
            pos += c;
        }
        self.tail
    }

    /// The finite part written out digit by digit.
    pub fn finite_digits(&self) -> Vec<u8> {
        self.blocks
            .iter()
            .flat_map(|&(d, c)| std::iter::repeat_n(d, c as usize))
            .collect()
    }

    /// Exact value of the expansion.
    pub fn value(&self) -> Rational {
        // Work with the integer N = value * 2 * 3^L where L is the finite length.
        let three = BigInt::from(3);
        let mut numer = BigInt::from(self.tail);
        let mut scale = BigInt::one();
        for &(d, c) in self.blocks.iter().rev() {
            let block_scale = num_traits::pow(three.clone(), c as usize);
            // A block d^c in front contributes d * (3^c - 1) / 2 at its own scale.
            let block = BigInt::from(d) * (&block_scale - 1u32);
            numer = block * &scale + numer;
            scale *= block_scale;
        }
        Rational::new(numer, scale * 2u32)
    }

    pub fn conjugate(&self) -> Self {
        let flip = |d: u8| 2 - d;
        Self::raw(self.blocks.iter().map(|&(d, c)| (flip(d), c)).collect(), flip(self.tail))
            .expect("digits stay ternary")
            .normalized()
    }

    pub fn prepend(&self, d: u8) -> Self {
        let mut blocks = Vec::with_capacity(self.blocks.len() + 1);
        blocks.push((d, 1));
        blocks.extend_from_slice(&self.blocks);
        Self::raw(blocks, self.tail).expect("digit checked by caller").normalized()
    }

    /// Splits off the first digit.
    pub fn pop(&self) -> (u8, Self) {
        match self.blocks.first() {
            None => (self.tail, self.clone()),
            Some(&(d, c)) => {
                let mut blocks = self.blocks.clone();
                if c == 1 {
                    blocks.remove(0);
                } else {
                    blocks[0].1 -= 1;
                }
                (d, Self::raw(blocks, self.tail).expect("valid").normalized())
            }
        }
    }

    /// Appends a finite block in front of the tail.
    pub fn with_block(&self, d: u8, count: u64) -> Result<Self> {
        let mut blocks = self.blocks.clone();
        blocks.push((d, count));
        Self::new(blocks, self.tail)
    }
}

impl fmt::Display for BlockSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &(d, c) in &self.blocks {
            if c == 1 {
                write!(f, "{d} ")?;
            } else {
                write!(f, "{d}^{c} ")?;
            }
        }
        write!(f, "{}^inf", self.tail)
    }
}

impl FromStr for BlockSeq {
    type Err = Error;

    /// Parses `0^3 2^5 0^inf`; a bare digit means one copy. The last token
    /// must be the infinite block.
    fn from_str(s: &str) -> Result<Self> {
        let tokens: Vec<&str> = s.split_whitespace().collect();
        let bad = |t: &str| Error::Parse(format!("bad block `{t}` in `{s}`"));
        let (last, init) = tokens
            .split_last()
            .ok_or_else(|| Error::Parse("empty block sequence".into()))?;
        let tail = match last.split_once('^') {
            Some((d, "inf")) => d.parse::<u8>().map_err(|_| bad(last))?,
            _ => return Err(Error::Parse(format!("`{s}` must end with a `d^inf` block"))),
        };
        let mut blocks = Vec::with_capacity(init.len());
        for t in init {
            let (d, c) = match t.split_once('^') {
                Some((d, c)) => (d, c.parse::<u64>().map_err(|_| bad(t))?),
                None => (*t, 1),
            };
            blocks.push((d.parse::<u8>().map_err(|_| bad(t))?, c));
        }
        Self::new(blocks, tail)
    }
}

fn representations(x: &BlockSeq) -> Vec<BlockSeq> {
    let mut reps = vec![x.clone()];
    reps.extend(x.alternate());
    reps
}

/// Length of the common prefix of two sequences, `None` if they are equal.
fn common_prefix(a: &BlockSeq, b: &BlockSeq) -> Option<u64> {
    let (mut i, mut j) = (0, 0);
    let (mut left_a, mut left_b) = (
        a.blocks.first().map_or(u64::MAX, |b| b.1),
        b.blocks.first().map_or(u64::MAX, |b| b.1),
    );
    let mut pos = 0u64;
    loop {
        let da = a.blocks.get(i).map_or(a.tail, |b| b.0);
        let db = b.blocks.get(j).map_or(b.tail, |b| b.0);
        if da != db {
            return Some(pos);
        }
        let a_done = i >= a.blocks.len();
        let b_done = j >= b.blocks.len();
        if a_done && b_done {
            return None;
        }
        let step = left_a.min(left_b);
        pos += step;
        left_a -= step;
        left_b -= step;
        if left_a == 0 {
            i += 1;
            left_a = a.blocks.get(i).map_or(u64::MAX, |b| b.1);
        }
        if left_b == 0 {
            j += 1;
            left_b = b.blocks.get(j).map_or(u64::MAX, |b| b.1);
        }
    }
}

/// `U(x, y)`: length of the longest common prefix of ternary expansions,
/// maximized over both expansions of triadic rationals. `None` means the
/// points coincide (`U = ∞`).
pub fn u_index(x: &BlockSeq, y: &BlockSeq) -> Option<u64> {
    let mut best = Some(0);
    for a in representations(x) {
        for b in representations(y) {
            best = best.max(Some(common_prefix(&a, &b)?));
        }
    }
    best
}
