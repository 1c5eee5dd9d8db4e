use thiserror::Error;

use crate::game::RegimeCase;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid payoff matrix: {0}")]
    InvalidPayoff(String),

    #[error("invalid chain parameters: {0}")]
    InvalidParams(String),

    #[error("state {state} out of range 0..={n}")]
    StateOutOfRange { state: usize, n: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operation requires {expected}, got {actual:?}")]
    RegimeMismatch {
        expected: &'static str,
        actual: RegimeCase,
    },

    #[error("operation requires a bistable regime (three fixed points), found {found}")]
    NotBistable { found: usize },

    #[error("x = {x} is not a fixed point (|f| = {residual:e})")]
    NotFixedPoint { x: f64, residual: f64 },

    #[error("x = {x} is not a stable fixed point (f'(x) = {slope:e})")]
    UnstableFixedPoint { x: f64, slope: f64 },

    #[error("singular linear system at row {row}")]
    SingularSystem { row: usize },

    #[error("quadrature on [{lo}, {hi}] did not converge: achieved error {achieved:e}")]
    QuadratureNonConvergence { lo: f64, hi: f64, achieved: f64 },

    #[error("window [{lo}, {hi}] carries no probability mass")]
    EmptyWindow { lo: usize, hi: usize },

    #[error(
        "first-passage run hit the round cap of {cap} after {} completed realizations",
        completed.len()
    )]
    RoundCapExceeded { cap: u64, completed: Vec<u64> },

    #[error("continuation branch left [0, 1] at mu = {mu}, x = {x}")]
    BranchEscaped { mu: f64, x: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
