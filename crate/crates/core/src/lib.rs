//! Nonlinear Rayleigh quotients on finite-dimensional normed spaces.

pub mod error;
pub mod flow;
pub mod inverse_iteration;
mod linalg;
pub mod oracle;
pub mod problems;
pub mod solver;
pub mod space;

pub use error::{Error, Result, RunFailure};
pub use flow::{
    check_decay, flow_limit, local_slope, minimizing_movements, DecayViolation, FlowOptions, FlowRow,
    FlowSummary, FlowTrace,
};
pub use inverse_iteration::{
    check_monotonicity, inverse_iteration, limit_vec, IterationOptions, IterationRow, IterationTrace,
    MonotoneQuantity, RunSummary, StopReason, Violation,
};
pub use oracle::{direct_rayleigh_min, hilbert_closed_form, symmetric_eigs, HilbertPoint, OracleMethod, OracleOptions, OracleResult};
pub use solver::{solve_movement, solve_tilted, InitialGuess, SolveReport, SolverOptions};
pub use problems::{ProblemInstance, ProblemKind, ProblemSpec};
pub use space::{
    dual_norm, duality_map, mu_from_lambda, norm, optimal_shift, pairing, ray_projection_alpha,
    rayleigh_quotient, CoeffVec, DualVec, Exponent, SpaceDescriptor, SpaceKind,
};
