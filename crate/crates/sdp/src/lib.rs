//! Dense semidefinite programming for sum-of-squares workloads.
//!
//! The crate has three parts: [`SdpProblem`], the equality-form problem data
//! with free variables; [`InteriorPoint`], an in-process primal-dual solver
//! implementing [`Backend`]; and [`sdpa`], SDPA sparse-format export and
//! import for cross-checking with external solvers.

pub mod ipm;
pub mod problem;
pub mod sdpa;

use std::path::PathBuf;

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

pub use ipm::{InteriorPoint, IpmSettings};
pub use problem::{BlockEntry, Constraint, SdpProblem};

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("SDPA parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("problem written to {0} for an external solver; no in-process solution")]
    ExportedOnly(PathBuf),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    NumericalFailure,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Optimal => "optimal",
            Status::PrimalInfeasible => "infeasible",
            Status::DualInfeasible => "unbounded",
            Status::NumericalFailure => "numerical-failure",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub status: Status,
    pub x_free: Vec<f64>,
    pub blocks: Vec<DMatrix<f64>>,
    pub dual_y: Vec<f64>,
    pub dual_slack: Vec<DMatrix<f64>>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub relative_gap: f64,
    pub iterations: usize,
}

impl Solution {
    /// Smallest eigenvalue of each primal block.
    pub fn block_min_eigenvalues(&self) -> Vec<f64> {
        self.blocks
            .iter()
            .map(|b| SymmetricEigen::new(b.clone()).eigenvalues.min())
            .collect()
    }
}

/// A conic solver accepting linear objective, linear equalities, PSD blocks
/// and free scalars.
pub trait Backend: Send + Sync {
    fn name(&self) -> &str;
    fn solve(&self, problem: &SdpProblem) -> Result<Solution, SdpError>;
}

/// Writes each problem as an SDPA file instead of solving it.
#[derive(Debug, Clone)]
pub struct ExportBackend {
    pub path: PathBuf,
}

impl Backend for ExportBackend {
    fn name(&self) -> &str {
        "sdpa-export"
    }

    fn solve(&self, problem: &SdpProblem) -> Result<Solution, SdpError> {
        sdpa::write_file(problem, &self.path)?;
        Err(SdpError::ExportedOnly(self.path.clone()))
    }
}
