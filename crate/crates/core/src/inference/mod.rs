//! Error bounds, LP confidence intervals and bootstrap edge intervals.

pub mod bootstrap;
pub mod bounds;
pub mod ci;
pub mod envelope;
pub mod lp;
pub mod psi;

pub use bootstrap::{bootstrap_edges, quantile_sorted, BootstrapConfig, BootstrapResult, EdgeInterval};
pub use bounds::{bound_from_constants, field_deviation_bounds, estimation_error_bound, BoundReport};
pub use ci::{calibrate_s, ci_linear, ci_nonlinear, coordinate_intervals, nominal_level, CiResult, CiSpec};
pub use envelope::{sigmoid_linear_bounds, EnvelopeMethod, LinearEnvelope};
pub use lp::{maximize, LpOutcome, LpSolution};
pub use psi::{psi_lower, psi_lower_with, psi_upper, psi_upper_with, PsiReading, PsiValue};
