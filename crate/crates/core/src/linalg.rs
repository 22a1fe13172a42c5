//! Dense Gaussian elimination over any scalar type.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Solves `a * X = b` for a square `a` and a right-hand side with any
/// number of columns. Exact types pivot on the first nonzero entry, float
/// types on the largest one.
pub fn solve_many<S: Scalar>(mut a: Vec<Vec<S>>, mut b: Vec<Vec<S>>) -> Result<Vec<Vec<S>>> {
    let n = a.len();
    if a.iter().any(|row| row.len() != n) || b.len() != n {
        return Err(Error::InvalidArgument("linear system must be square".into()));
    }
    let tiny = |x: &S| {
        if S::is_exact() {
            x.is_zero()
        } else {
            x.abs().to_f64() < 1e-300
        }
    };
    for col in 0..n {
        let candidates = (col..n).filter(|&r| !tiny(&a[r][col]));
        let pivot = if S::is_exact() {
            candidates.into_iter().next()
        } else {
            candidates.max_by(|&r, &s| {
                a[r][col]
                    .abs()
                    .partial_cmp(&a[s][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
        }
        .ok_or(Error::Singular)?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = S::one() / a[col][col].clone();
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone() * inv.clone();
            let (pivot_row, row) = if r < col {
                let (lo, hi) = a.split_at_mut(col);
                (&hi[0], &mut lo[r])
            } else {
                let (lo, hi) = a.split_at_mut(r);
                (&lo[col], &mut hi[0])
            };
            for c in col..n {
                if !pivot_row[c].is_zero() {
                    row[c] = row[c].clone() - factor.clone() * pivot_row[c].clone();
                }
            }
            let (src, dst) = if r < col {
                let (lo, hi) = b.split_at_mut(col);
                (&hi[0], &mut lo[r])
            } else {
                let (lo, hi) = b.split_at_mut(r);
                (&lo[col], &mut hi[0])
            };
            for (d, s) in dst.iter_mut().zip(src) {
                if !s.is_zero() {
                    *d = d.clone() - factor.clone() * s.clone();
                }
            }
        }
    }
    Ok(b.into_iter()
        .zip(&a)
        .enumerate()
        .map(|(i, (row, arow))| row.into_iter().map(|v| v / arow[i].clone()).collect())
        .collect())
}

/// Solves `a * x = b` for a single right-hand side.
pub fn solve<S: Scalar>(a: Vec<Vec<S>>, b: Vec<S>) -> Result<Vec<S>> {
    let b = b.into_iter().map(|v| vec![v]).collect();
    Ok(solve_many(a, b)?.into_iter().map(|mut r| r.remove(0)).collect())
}
