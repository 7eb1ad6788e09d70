//! Dense linear solvers: Gaussian elimination with partial pivoting, Jacobi
//! and Gauss-Seidel iteration, a diagonal-dominance gate, and a timing
//! harness that repeats solves over seeded systems.

mod bench;
mod direct;
mod exec;
mod iterative;
mod system;

pub use bench::{
    bench_solve, dominant_system, BenchConfig, BenchError, BenchMethod, TimingEntry, TimingReport,
    DEFAULT_TRIALS,
};
pub use direct::{gauss_eliminate, gauss_eliminate_with_workers, PIVOT_THRESHOLD};
pub use iterative::{gauss_seidel, jacobi};
pub use system::{is_diagonally_dominant, LinearSystem, SolveResult};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("non-finite entry in {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },
    #[error("singular matrix: pivot magnitude {pivot:e} in column {column} is below threshold")]
    Singular { column: usize, pivot: f64 },
    #[error("zero diagonal entry in row {row}")]
    ZeroDiagonal { row: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
