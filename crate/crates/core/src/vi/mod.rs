//! Variational-inequality estimation of node parameters.

pub mod feasible;
pub mod field;
pub mod sgd;
pub mod solver;

pub use feasible::{FeasibleKind, FeasibleSet, DEFAULT_THETA_MAX};
pub use field::{empirical_field, least_squares_objective, negative_log_likelihood};
pub use sgd::{fit_sgd, SgdConfig, SgdFit, SgdLoss, SgdTrace, SgdVariant};
pub use solver::{fit_lse_linear, fit_network, fit_node, solve_vi, SolverOptions, VIResult};
