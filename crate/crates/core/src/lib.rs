//! Numerical workbench for two-weight bump conditions on a 1-D dyadic grid:
//! Orlicz/Luxemburg norms, dyadic sparse operators and their iterates,
//! iterated commutators of a discrete Calderon-Zygmund kernel, and named
//! experiment drivers that turn the associated inequalities into
//! pass/fail/recorded-constant reports.

pub mod bump;
pub mod czops;
pub mod experiments;
pub mod grid;
pub mod normest;
pub mod orlicz;
pub mod piecewise;
pub mod report;
pub mod rng;
pub mod sparse;

use thiserror::Error as ThisError;

#[derive(Debug, ThisError)]
pub enum Error {
    #[error("interval [{start}, {start}+{len}) outside grid of {cells} cells")]
    OutOfRange { start: usize, len: usize, cells: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid argument: {0}")]
    InvalidArg(String),
    #[error("grid resolution insufficient: {0} (limiting n = {1})")]
    Resolution(String, i64),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
