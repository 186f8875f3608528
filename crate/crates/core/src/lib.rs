//! Granger-causal graph estimation for mixed-type clinical time series with a
//! discrete Hawkes GLM fitted by variational inequalities.

pub mod error;
pub mod graph;
pub mod inference;
pub mod ingest;
pub mod model;
pub mod panel;
pub mod selection;
pub mod vi;

pub use error::{Error, Result};
pub use panel::PatientPanel;
