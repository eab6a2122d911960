//! Numerical toolkit for discrete degraded interference channels.
//!
//! A channel here is a pair (family, t_prime): one column-stochastic matrix
//! `T[x2]` per interferer symbol mapping the primary input `X1` to the good
//! receiver's output `Y1`, and a single degrading matrix `T'` mapping `Y1`
//! to the bad receiver's output `Y2`. The crate checks the five structural
//! conditions under which the capacity region of such a channel has a
//! single-letter description, computes that region (conditional-entropy
//! trace, lower convex envelope, boundary), estimates the matching converse
//! quantity by penalized ascent, and stress-tests rate pairs by Monte-Carlo
//! simulation of the random-coding scheme.
//!
//! All entropies and rates are in bits (log base 2).

// Index loops here mirror the matrix subscripts they implement.
#![allow(clippy::needless_range_loop)]

pub mod capacity;
pub mod conditions;
pub mod degradation;
pub mod fixtures;
mod geom;
pub mod io;
pub mod mcsim;
pub mod prob;
mod solver;
pub mod symmetry;

pub use prob::{entropy, ChannelMatrix, Ddic, ProbVector};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid probability vector: {0}")]
    InvalidProbVector(String),
    #[error("invalid channel matrix: {0}")]
    InvalidMatrix(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("input alphabet size {n} exceeds the exhaustive-search limit {limit}")]
    AlphabetTooLarge { n: usize, limit: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("uniform input does not maximize output entropy: beaten by {witness:?} ({witness_entropy} > {uniform_entropy} bits)")]
    NotOutputEntropyMaximal {
        witness: Vec<f64>,
        witness_entropy: f64,
        uniform_entropy: f64,
    },
    #[error("no optimizer run met the constraint |H(Y1|U) - c| <= {tol} at c = {c}")]
    ConstraintNotMet { c: f64, tol: f64 },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
