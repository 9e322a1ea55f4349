//! Dense tableau simplex over exact rationals for problems of the form
//! `max c.x  s.t.  A x <= b, x >= 0` with `b >= 0`, so the slack basis is
//! feasible from the start. Bland's rule guarantees termination on the
//! highly degenerate cut-packing programs solved here.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("right-hand side must be nonnegative")]
    InfeasibleStart,
    #[error("objective is unbounded")]
    Unbounded,
    #[error("constraint row has {got} coefficients, expected {expected}")]
    Shape { got: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: BigRational,
    /// Optimal primal point, one entry per column.
    pub x: Vec<BigRational>,
    /// Optimal dual multipliers, one per constraint row.
    pub y: Vec<BigRational>,
    pub pivots: usize,
}

/// Solves `max c.x s.t. rows[i].x <= b[i], x >= 0`.
pub fn maximize(c: &[BigRational], rows: &[Vec<BigRational>], b: &[BigRational]) -> Result<LpSolution, LpError> {
    let n = c.len();
    let m = rows.len();
    if b.len() != m {
        return Err(LpError::Shape { got: b.len(), expected: m });
    }
    if let Some(row) = rows.iter().find(|r| r.len() != n) {
        return Err(LpError::Shape { got: row.len(), expected: n });
    }
    if b.iter().any(|v| v.is_negative()) {
        return Err(LpError::InfeasibleStart);
    }

    let width = n + m;
    let mut tab: Vec<Vec<BigRational>> = rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut full = row.clone();
            full.resize(width, BigRational::zero());
            full[n + i] = BigRational::one();
            full
        })
        .collect();
    let mut rhs: Vec<BigRational> = b.to_vec();
    let mut reduced: Vec<BigRational> = c.iter().map(|v| -v.clone()).collect();
    reduced.resize(width, BigRational::zero());
    let mut value = BigRational::zero();
    let mut basis: Vec<usize> = (n..n + m).collect();
    let mut pivots = 0;

    while let Some(enter) = reduced.iter().position(|v| v.is_negative()) {
        let mut leave: Option<(usize, BigRational)> = None;
        for i in 0..m {
            if !tab[i][enter].is_positive() {
                continue;
            }
            let ratio = &rhs[i] / &tab[i][enter];
            let better = match &leave {
                None => true,
                Some((li, best)) => ratio < *best || (ratio == *best && basis[i] < basis[*li]),
            };
            if better {
                leave = Some((i, ratio));
            }
        }
        let (p, _) = leave.ok_or(LpError::Unbounded)?;

        let inv = tab[p][enter].recip();
        for v in tab[p].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        rhs[p] *= &inv;
        let support: Vec<usize> = (0..width).filter(|&j| !tab[p][j].is_zero()).collect();
        let pivot_row = tab[p].clone();
        let pivot_rhs = rhs[p].clone();
        for i in 0..m {
            if i == p || tab[i][enter].is_zero() {
                continue;
            }
            let factor = tab[i][enter].clone();
            for &j in &support {
                let delta = &factor * &pivot_row[j];
                tab[i][j] -= delta;
            }
            rhs[i] -= &factor * &pivot_rhs;
        }
        if !reduced[enter].is_zero() {
            let factor = reduced[enter].clone();
            for &j in &support {
                let delta = &factor * &pivot_row[j];
                reduced[j] -= delta;
            }
            value -= &factor * &pivot_rhs;
        }
        basis[p] = enter;
        pivots += 1;
    }

    let mut x = vec![BigRational::zero(); n];
    for (i, &var) in basis.iter().enumerate() {
        if var < n {
            x[var] = rhs[i].clone();
        }
    }
    let y = reduced[n..].to_vec();
    Ok(LpSolution { value, x, y, pivots })
}
