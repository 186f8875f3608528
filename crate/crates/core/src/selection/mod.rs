//! Forward feature selection with held-out classification criteria.

pub mod forward;
pub mod metrics;

pub use forward::{
    default_initial_subset, forward_select, holdout_score, max_iter_scores, patient_split, point_biserial,
    tune_max_iter, CvConfig, SelectionStep, SelectionTrace,
};
pub use metrics::{class_weights, evaluate, Criterion, Scored};
