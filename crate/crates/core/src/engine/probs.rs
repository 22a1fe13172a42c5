use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// How a table of step probabilities was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    MonteCarlo,
}

/// `P(|x_i - y_i| < t)` for every step `i` and every threshold `t` of a grid.
///
/// `err[i][j]` is a certified bound in exact mode (the mass discarded by
/// pruning up to step `i`) and a 95% confidence half-width in Monte Carlo
/// mode.
#[derive(Clone, Debug, PartialEq)]
pub struct StepProbabilities<S = f64> {
    pub x0: f64,
    pub y0: f64,
    pub thresholds: Vec<f64>,
    pub values: Vec<Vec<S>>,
    pub err: Vec<Vec<f64>>,
    pub mode: Mode,
}

impl<S: Scalar> StepProbabilities<S> {
    /// Number of recorded steps (`i = 0..steps()`).
    pub fn steps(&self) -> usize {
        self.values.len()
    }

    pub fn value(&self, i: usize, j: usize) -> &S {
        &self.values[i][j]
    }

    pub fn to_f64(&self) -> StepProbabilities<f64> {
        StepProbabilities {
            x0: self.x0,
            y0: self.y0,
            thresholds: self.thresholds.clone(),
            values: self
                .values
                .iter()
                .map(|row| row.iter().map(Scalar::to_f64).collect())
                .collect(),
            err: self.err.clone(),
            mode: self.mode,
        }
    }

    /// Arithmetic mean of the first `n` step probabilities at threshold
    /// index `j`.
    pub fn cesaro(&self, n: usize, j: usize) -> Result<S> {
        if n == 0 || n > self.steps() {
            return Err(Error::OutOfRange {
                index: n,
                available: self.steps(),
            });
        }
        if j >= self.thresholds.len() {
            return Err(Error::OutOfRange {
                index: j,
                available: self.thresholds.len(),
            });
        }
        let sum = self.values[..n]
            .iter()
            .fold(S::zero(), |acc, row| acc + row[j].clone());
        Ok(sum / S::from_usize(n).expect("step count fits the scalar type"))
    }

    /// Writes the table as CSV with header `i,t,prob,err`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "i,t,prob,err")?;
        for (i, (row, err)) in self.values.iter().zip(&self.err).enumerate() {
            for (j, t) in self.thresholds.iter().enumerate() {
                writeln!(out, "{i},{t},{},{}", row[j].to_f64(), err[j])?;
            }
        }
        Ok(())
    }
}

/// 95% normal-approximation half-width for a frequency `v` out of `samples`.
pub fn ci_halfwidth(v: f64, samples: u64) -> f64 {
    1.96 * (v * (1.0 - v) / samples as f64).sqrt()
}
