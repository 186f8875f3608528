use serde::{Deserialize, Serialize};

use crate::model::link::sigmoid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeMethod {
    /// Upper line through (−M, g(−M)) tangent to g, or the chord when the
    /// tangent point lies beyond M; lower line by point symmetry.
    Tangent,
    /// Horizontal lines g(M) and g(−M).
    Flat,
    /// g replaced by the identity (linear link).
    Identity,
}

/// Lines f₁(x) = a₁x + b₁ ≥ g(x) ≥ f₂(x) = a₂x + b₂ on [−M, M].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearEnvelope {
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
    pub bound: f64,
    pub method: EnvelopeMethod,
}

impl LinearEnvelope {
    pub fn identity() -> Self {
        Self { a1: 1.0, b1: 0.0, a2: 1.0, b2: 0.0, bound: 1.0, method: EnvelopeMethod::Identity }
    }

    pub fn upper(&self, x: f64) -> f64 {
        self.a1 * x + self.b1
    }

    pub fn lower(&self, x: f64) -> f64 {
        self.a2 * x + self.b2
    }

    /// Largest violation of f₂ ≤ g ≤ f₁ over `points` equispaced nodes.
    pub fn sweep_violation(&self, points: usize) -> f64 {
        let m = self.bound;
        (0..points)
            .map(|k| -m + 2.0 * m * k as f64 / (points - 1) as f64)
            .map(|x| {
                let g = sigmoid(x);
                (g - self.upper(x)).max(self.lower(x) - g)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Linear envelope of the sigmoid on [−M, M], verified on a 10⁴-point grid.
pub fn sigmoid_linear_bounds(m: f64) -> LinearEnvelope {
    assert!(m > 0.0, "bound must be positive");
    let d = |x: f64| {
        let s = sigmoid(x);
        s * (1.0 - s)
    };
    let g_lo = sigmoid(-m);
    // tangency: g'(x)(x + M) = g(x) − g(−M), root in (0, ∞)
    let h = |x: f64| d(x) * (x + m) - (sigmoid(x) - g_lo);
    let mut hi = m.max(1.0);
    while h(hi) > 0.0 && hi < 1e3 {
        hi *= 2.0;
    }
    let (mut lo, mut up) = (0.0, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + up);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            up = mid;
        }
    }
    let x_star = 0.5 * (lo + up);
    let a1 = if x_star <= m { d(x_star) } else { (sigmoid(m) - g_lo) / (2.0 * m) };
    // tiny upward shift absorbs rounding at the touching points
    let b1 = g_lo + a1 * m + 1e-15;
    let env = LinearEnvelope { a1, b1, a2: a1, b2: 1.0 - b1, bound: m, method: EnvelopeMethod::Tangent };
    if env.sweep_violation(10_000) <= 1e-12 {
        return env;
    }
    LinearEnvelope { a1: 0.0, b1: sigmoid(m), a2: 0.0, b2: g_lo, bound: m, method: EnvelopeMethod::Flat }
}
