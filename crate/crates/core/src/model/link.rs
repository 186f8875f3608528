use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    Linear,
    Sigmoid,
}

/// Link g mapping the linear predictor to an event probability.
///
/// The linear link is the identity on [0, 1]. The sigmoid link is restricted
/// to [-bound, bound] so that its derivative is bounded below by g'(bound).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkFunction {
    pub kind: LinkKind,
    /// Predictor bound M of the sigmoid feasible set (ignored for linear).
    pub bound: f64,
}

impl LinkFunction {
    pub const DEFAULT_SIGMOID_BOUND: f64 = 10.0;

    pub fn linear() -> Self {
        Self { kind: LinkKind::Linear, bound: 1.0 }
    }

    pub fn sigmoid(bound: f64) -> Self {
        assert!(bound > 0.0, "sigmoid bound must be positive");
        Self { kind: LinkKind::Sigmoid, bound }
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match self.kind {
            LinkKind::Linear => x,
            LinkKind::Sigmoid => sigmoid(x),
        }
    }

    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        match self.kind {
            LinkKind::Linear => 1.0,
            LinkKind::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
        }
    }

    /// m_g: smallest derivative over the domain.
    pub fn lower_derivative(&self) -> f64 {
        match self.kind {
            LinkKind::Linear => 1.0,
            LinkKind::Sigmoid => {
                let e = (-self.bound).exp();
                e / ((1.0 + e) * (1.0 + e))
            }
        }
    }

    /// M_g: largest derivative over the domain.
    pub fn upper_derivative(&self) -> f64 {
        match self.kind {
            LinkKind::Linear => 1.0,
            LinkKind::Sigmoid => 0.25,
        }
    }

    /// Allowed range of the linear predictor.
    pub fn domain(&self) -> (f64, f64) {
        match self.kind {
            LinkKind::Linear => (0.0, 1.0),
            LinkKind::Sigmoid => (-self.bound, self.bound),
        }
    }

    pub fn check_domain(&self, x: f64, tol: f64) -> Result<()> {
        let (lo, hi) = self.domain();
        if x < lo - tol || x > hi + tol || x.is_nan() {
            return Err(Error::Domain { value: x, lower: lo, upper: hi });
        }
        Ok(())
    }

    pub fn clamp(&self, x: f64) -> f64 {
        let (lo, hi) = self.domain();
        x.clamp(lo, hi)
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
