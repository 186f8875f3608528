use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DesignMatrix, LinkFunction};

/// Error bounds for one node model with every constant echoed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub epsilon: f64,
    /// Bound on ‖F(θ_true)‖∞.
    pub delta_inf_bound: f64,
    /// Bound on ‖F(θ_true)‖₂.
    pub delta_l2_bound: f64,
    /// Bound on ‖θ̂ − θ_true‖₂.
    pub theta_error_bound: f64,
    pub m_g: f64,
    pub m_w: f64,
    pub lambda1: f64,
    pub n: usize,
    pub t: f64,
    /// Monotonicity modulus m_g λ₁.
    pub kappa: f64,
}

/// M_w √(log(2N/ε)/T) and √N times it.
pub fn field_deviation_bounds(m_w: f64, n: usize, t: f64, epsilon: f64) -> (f64, f64) {
    let inf = m_w * ((2.0 * n as f64 / epsilon).ln() / t).sqrt();
    (inf, (n as f64).sqrt() * inf)
}

/// Bound report from explicit constants.
pub fn bound_from_constants(m_w: f64, m_g: f64, lambda1: f64, n: usize, t: f64, epsilon: f64) -> Result<BoundReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} outside (0, 1)")));
    }
    if !(lambda1 > 0.0) {
        return Err(Error::RankDeficient(lambda1));
    }
    let (inf, l2) = field_deviation_bounds(m_w, n, t, epsilon);
    let kappa = m_g * lambda1;
    Ok(BoundReport {
        epsilon,
        delta_inf_bound: inf,
        delta_l2_bound: l2,
        theta_error_bound: l2 / kappa,
        m_g,
        m_w,
        lambda1,
        n,
        t,
        kappa,
    })
}

/// High-probability bound (probability ≥ 1 − ε) on the estimation error of
/// the node model fitted on `design`.
pub fn estimation_error_bound(design: &DesignMatrix, link: &LinkFunction, epsilon: f64) -> Result<BoundReport> {
    let lambda1 = design.lambda1();
    // eigenvalues at rounding level count as zero
    if lambda1 <= 1e-12 * design.lambda_max() {
        return Err(Error::RankDeficient(lambda1));
    }
    bound_from_constants(design.m_w(), link.lower_derivative(), lambda1, design.dim(), design.total(), epsilon)
}
