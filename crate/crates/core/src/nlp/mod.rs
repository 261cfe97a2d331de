//! Generic nonlinear programming: problem interface, sparse symmetric
//! indefinite factorization and a primal-dual interior-point solver.

pub mod ipm;
pub mod ldl;
pub mod problem;

pub use ipm::{
    kkt_residuals, solve, IterationLog, KktResiduals, Multipliers, SolveOutcome, SolveStatus, SolverOptions,
};
pub use problem::{evaluate_derivatives, NlpProblem, Triplets};
