//! Channel constructors used by tests and the CLI.
//!
//! `make_dadic` builds the modulo-s additive family Y1 = X1 + X2 + V1,
//! Y2 = Y1 + V2 (all mod s); `make_erasure_example` keeps the binary
//! additive front end but degrades through a symbol-erasure stage; and
//! `make_example3` is a hand-rolled 4-input channel whose symmetry group
//! is the full symmetric group on three outputs. `make_counterexample`
//! produces channels that each violate one structural condition, for
//! exercising failure paths.

use crate::prob::{ChannelMatrix, Ddic, ProbVector};
use crate::{Error, Result};

/// Additive-noise channel pair: noise p1 on the Y1 hop, p2 on the Y2 hop.
///
/// T_{x2}[y1][x1] = p1[(y1 - x1 - x2) mod s], t_prime[y2][y1] =
/// p2[(y2 - y1) mod s]; every matrix is a circulant of its noise vector.
pub fn make_dadic(s: usize, p1: &ProbVector, p2: &ProbVector) -> Result<Ddic> {
    if s < 2 {
        return Err(Error::InvalidParameter(format!("alphabet size {s} < 2")));
    }
    if p1.dim() != s || p2.dim() != s {
        return Err(Error::DimensionMismatch(format!(
            "noise vectors must have dimension {s}, got {} and {}",
            p1.dim(),
            p2.dim()
        )));
    }
    let sub = |a: usize, b: usize| (a + s - b % s) % s;
    let family = (0..s)
        .map(|x2| {
            let rows: Vec<Vec<f64>> = (0..s)
                .map(|y1| {
                    (0..s)
                        .map(|x1| p1.entries()[sub(sub(y1, x1), x2)])
                        .collect()
                })
                .collect();
            ChannelMatrix::new(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    let t_prime = ChannelMatrix::new(
        (0..s)
            .map(|y2| (0..s).map(|y1| p2.entries()[sub(y2, y1)]).collect())
            .collect(),
    )?;
    Ddic::new(family, t_prime)
}

/// Binary additive front end (flip probability `p`) followed by an
/// erasure stage: Y1 passes with probability 1 - alpha, else lands in the
/// middle erasure symbol of a ternary Y2.
pub fn make_erasure_example(p: f64, alpha: f64) -> Result<Ddic> {
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "p = {p} and alpha = {alpha} must lie in [0, 1]"
        )));
    }
    let p1 = ProbVector::new(vec![1.0 - p, p])?;
    let t0 = ChannelMatrix::new(vec![
        vec![p1.entries()[0], p1.entries()[1]],
        vec![p1.entries()[1], p1.entries()[0]],
    ])?;
    let t1 = ChannelMatrix::new(vec![
        vec![p1.entries()[1], p1.entries()[0]],
        vec![p1.entries()[0], p1.entries()[1]],
    ])?;
    let t_prime = ChannelMatrix::new(vec![
        vec![1.0 - alpha, 0.0],
        vec![alpha, alpha],
        vec![0.0, 1.0 - alpha],
    ])?;
    Ddic::new(vec![t0, t1], t_prime)
}

/// Four-input, three-output family over a six-output degraded stage whose
/// input symmetry group is all of S3. Requires a + b + c = 1 and
/// d + e + f = 1/2.
pub fn make_example3(abc: [f64; 3], def: [f64; 3]) -> Result<Ddic> {
    let [a, b, c] = abc;
    let [d, e, f] = def;
    for &x in &[a, b, c, d, e, f] {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::InvalidParameter(format!("parameter {x} outside [0, 1]")));
        }
    }
    if (a + b + c - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "a + b + c = {} must equal 1",
            a + b + c
        )));
    }
    if (d + e + f - 0.5).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "d + e + f = {} must equal 1/2",
            d + e + f
        )));
    }
    let t0 = ChannelMatrix::new(vec![
        vec![a, b, c, c],
        vec![b, c, a, b],
        vec![c, a, b, a],
    ])?;
    let t1 = ChannelMatrix::new(vec![
        vec![c, a, b, a],
        vec![a, b, c, c],
        vec![b, c, a, b],
    ])?;
    let t2 = ChannelMatrix::new(vec![
        vec![b, c, a, b],
        vec![c, a, b, a],
        vec![a, b, c, c],
    ])?;
    let t_prime = ChannelMatrix::new(vec![
        vec![d, e, f],
        vec![e, f, d],
        vec![d, f, e],
        vec![f, e, d],
        vec![e, d, f],
        vec![f, d, e],
    ])?;
    Ddic::new(vec![t0, t1, t2], t_prime)
}

/// Channels that violate exactly the named structural condition (the
/// others may or may not hold).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CounterexampleKind {
    /// Degrading stage with a trivial, non-transitive symmetry group.
    NonSymmetricTprime,
    /// Family whose conditional output entropies disagree across columns.
    BrokenCond3,
    /// Family whose summed transition weights are not flat over outputs.
    BrokenCond4,
    /// Family whose column hull is not covered by relabeled copies of any
    /// single member's column polytope.
    BrokenCond5,
}

pub fn make_counterexample(kind: CounterexampleKind) -> Result<Ddic> {
    let bsc = |p: f64| {
        ChannelMatrix::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
    };
    match kind {
        CounterexampleKind::NonSymmetricTprime => {
            let t0 = bsc(0.1)?;
            let t1 = ChannelMatrix::new(vec![vec![0.1, 0.9], vec![0.9, 0.1]])?;
            // One clean input, one coin-flip input: no column swap can be
            // undone by a row swap.
            let t_prime = ChannelMatrix::new(vec![vec![1.0, 0.5], vec![0.0, 0.5]])?;
            Ddic::new(vec![t0, t1], t_prime)
        }
        CounterexampleKind::BrokenCond3 => {
            let t0 = bsc(0.1)?;
            // First column deterministic, second noisy: entropies 0 vs h(0.1).
            let t1 = ChannelMatrix::new(vec![vec![1.0, 0.1], vec![0.0, 0.9]])?;
            Ddic::new(vec![t0, t1], bsc(0.2)?)
        }
        CounterexampleKind::BrokenCond4 => {
            // Duplicated member: row sums over x2 are 2(1-p) and 2p, not 1.
            Ddic::new(vec![bsc(0.1)?, bsc(0.1)?], bsc(0.2)?)
        }
        CounterexampleKind::BrokenCond5 => {
            let t0 = bsc(0.1)?;
            // T1 reaches further toward a vertex than T0's span on one
            // side, yet leaves the middle of its own span uncovered.
            let t1 = ChannelMatrix::new(vec![vec![0.95, 0.55], vec![0.05, 0.45]])?;
            Ddic::new(vec![t0, t1], bsc(0.2)?)
        }
    }
}
