use thiserror::Error;

use crate::field::Parity;

/// Errors raised by grid construction, solvers and diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("{what} = {value} is outside the domain")]
    OutOfDomain { what: &'static str, value: f64 },

    #[error("parity mismatch: expected {expected:?}, found {found:?}")]
    ParityMismatch { expected: Parity, found: Parity },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("time step {dt:.3e} violates the stability bound {limit:.3e} at cell (i={i}, j={j})")]
    Cfl { i: usize, j: usize, dt: f64, limit: f64 },

    #[error("iterative solve did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("non-finite value detected at step {step} (t = {time})")]
    NonFinite { step: usize, time: f64 },

    #[error("trajectory covers [{available_from}, {available_to}] but [{needed_from}, {needed_to}] is required")]
    Coverage {
        needed_from: f64,
        needed_to: f64,
        available_from: f64,
        available_to: f64,
    },

    #[error("only {usable} usable scales, need at least {needed}")]
    InsufficientScales { usable: usize, needed: usize },

    #[error("undefined quantity: {0}")]
    Undefined(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
