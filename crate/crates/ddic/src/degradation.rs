//! Stochastic degradedness between channel families.
//!
//! Family 2 is a degraded version of family 1 when one column-stochastic
//! matrix T' satisfies T' T1_{x2} = T2_{x2} for every interferer symbol
//! simultaneously. Existence is decided by nonnegative least squares on
//! the stacked linear system; the answer is graded by the best residual
//! found, with an explicit ambiguous band between the accept and reject
//! thresholds rather than a silent cutoff.

use crate::prob::{ChannelMatrix, Ddic};
use crate::solver::nnls;
use crate::{Error, Result};

/// Residual at or below this accepts the degrading channel as exact.
pub const FEASIBLE_TOL: f64 = 1e-7;
/// Residual above this rejects; the gap in between is reported ambiguous.
pub const INFEASIBLE_TOL: f64 = 1e-5;

/// Outcome of a degradedness solve.
#[derive(Debug, Clone)]
pub struct DegradednessResult {
    /// True iff a degrading channel fits with residual <= FEASIBLE_TOL.
    pub feasible: bool,
    /// True iff the best residual landed in (FEASIBLE_TOL, INFEASIBLE_TOL].
    pub ambiguous: bool,
    /// Max-abs violation of the matching equations by the best candidate,
    /// measured after its columns are renormalized.
    pub residual: f64,
    /// The degrading channel; present only when feasible.
    pub t_prime: Option<ChannelMatrix>,
}

fn validate_families(
    fam1: &[ChannelMatrix],
    fam2: &[ChannelMatrix],
) -> Result<(usize, usize, usize, usize)> {
    if fam1.is_empty() || fam1.len() != fam2.len() {
        return Err(Error::DimensionMismatch(format!(
            "family sizes {} and {} must match and be nonzero",
            fam1.len(),
            fam2.len()
        )));
    }
    let (y1, x1) = (fam1[0].n_out(), fam1[0].n_in());
    let y2 = fam2[0].n_out();
    for t in fam1 {
        if t.n_out() != y1 || t.n_in() != x1 {
            return Err(Error::DimensionMismatch("ragged first family".into()));
        }
    }
    for t in fam2 {
        if t.n_out() != y2 || t.n_in() != x1 {
            return Err(Error::DimensionMismatch(
                "second family must share the input alphabet and have uniform output size".into(),
            ));
        }
    }
    Ok((fam1.len(), x1, y1, y2))
}

/// Max-abs violation of T' fam1 = fam2 over all members and entries.
pub fn composition_residual(
    t_prime: &ChannelMatrix,
    fam1: &[ChannelMatrix],
    fam2: &[ChannelMatrix],
) -> Result<f64> {
    let mut worst = 0.0f64;
    for (t1, t2) in fam1.iter().zip(fam2) {
        worst = worst.max(t_prime.compose(t1)?.max_abs_diff(t2)?);
    }
    Ok(worst)
}

/// Searches for a column-stochastic T' with T' fam1_{x2} = fam2_{x2} for
/// all x2. Unknowns are the entries of T'; the stacked system carries one
/// equation per (x2, x1, y2) plus one unit-sum equation per column of T'.
pub fn find_degrading_channel(
    fam1: &[ChannelMatrix],
    fam2: &[ChannelMatrix],
) -> Result<DegradednessResult> {
    let (n_x2, x1, y1, y2) = validate_families(fam1, fam2)?;

    let n_unknowns = y1 * y2; // t[y1 * y2 + y2'] = T'[y2'][y1]
    let n_rows = n_x2 * x1 * y2 + y1;
    let mut a = vec![0.0f64; n_rows * n_unknowns];
    let mut b = vec![0.0f64; n_rows];
    let mut row = 0usize;
    for (t1, t2) in fam1.iter().zip(fam2) {
        for x in 0..x1 {
            for out2 in 0..y2 {
                for out1 in 0..y1 {
                    a[row * n_unknowns + out1 * y2 + out2] = t1.get(out1, x);
                }
                b[row] = t2.get(out2, x);
                row += 1;
            }
        }
    }
    for out1 in 0..y1 {
        for out2 in 0..y2 {
            a[row * n_unknowns + out1 * y2 + out2] = 1.0;
        }
        b[row] = 1.0;
        row += 1;
    }

    let sol = nnls(n_rows, n_unknowns, &a, &b);

    // Rebuild T' from the solution and force exact column stochasticity
    // before measuring the residual that gets reported.
    let mut rows: Vec<Vec<f64>> = vec![vec![0.0; y1]; y2];
    let mut degenerate = false;
    for in1 in 0..y1 {
        let col_sum: f64 = (0..y2).map(|out2| sol.x[in1 * y2 + out2]).sum();
        if col_sum < 0.1 {
            degenerate = true;
            break;
        }
        for out2 in 0..y2 {
            rows[out2][in1] = sol.x[in1 * y2 + out2] / col_sum;
        }
    }
    if degenerate {
        return Ok(DegradednessResult {
            feasible: false,
            ambiguous: false,
            residual: sol.max_abs_residual(),
            t_prime: None,
        });
    }
    let candidate = ChannelMatrix::new(rows)?;
    let residual = composition_residual(&candidate, fam1, fam2)?;

    let feasible = residual <= FEASIBLE_TOL;
    let ambiguous = !feasible && residual <= INFEASIBLE_TOL;
    Ok(DegradednessResult {
        feasible,
        ambiguous,
        residual,
        t_prime: feasible.then_some(candidate),
    })
}

/// Builds the physically degraded channel realizing a stochastically
/// degraded pair: keeps fam1 as the Y1 stage and the recovered T' as the
/// Y2 stage. Errors when no exact degrading channel exists.
pub fn physically_degrade(fam1: &[ChannelMatrix], fam2: &[ChannelMatrix]) -> Result<Ddic> {
    let result = find_degrading_channel(fam1, fam2)?;
    match result.t_prime {
        Some(t_prime) => Ddic::new(fam1.to_vec(), t_prime),
        None => Err(Error::Precondition(format!(
            "no degrading channel found (best residual {:.3e}{})",
            result.residual,
            if result.ambiguous { ", ambiguous" } else { "" }
        ))),
    }
}
