//! LP confidence intervals for linear functionals aᵀθ.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::envelope::LinearEnvelope;
use super::lp::{maximize, LpOutcome};
use super::psi::{psi_lower_with, psi_upper_with, PsiReading};
use crate::error::{Error, Result};
use crate::model::DesignMatrix;
use crate::vi::FeasibleSet;

/// Confidence parameter s and direction a.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiSpec {
    pub s: f64,
    pub direction: Vec<f64>,
    #[serde(default)]
    pub reading: PsiReading,
}

/// 1 − 2N{s[log((s − 1)T) + 2] + 2}e^{1−s}; may be ≤ 0 for small s.
pub fn nominal_level(s: f64, n: usize, t: f64) -> f64 {
    1.0 - 2.0 * n as f64 * (s * (((s - 1.0) * t).ln() + 2.0) + 2.0) * (1.0 - s).exp()
}

/// Smallest s ≥ 2 whose nominal level reaches `level` (the level is
/// increasing in s on [2, ∞)).
pub fn calibrate_s(n: usize, t: f64, level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) || t < 1.0 {
        return Err(Error::InvalidArgument(format!("level {level} must lie in (0, 1)")));
    }
    let (mut lo, mut hi) = (2.0, 4.0);
    if nominal_level(lo, n, t) >= level {
        return Ok(lo);
    }
    while nominal_level(hi, n, t) < level {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::InvalidArgument("level unreachable".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if nominal_level(mid, n, t) >= level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

impl CiSpec {
    pub fn new(s: f64, direction: Vec<f64>) -> Result<Self> {
        if !(s > 1.0) {
            return Err(Error::InvalidArgument(format!("s must exceed 1, got {s}")));
        }
        if direction.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidArgument("direction must be nonzero".into()));
        }
        Ok(Self { s, direction, reading: PsiReading::default() })
    }

    /// Unit direction e_k in dimension n.
    pub fn coordinate(s: f64, n: usize, k: usize) -> Result<Self> {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        Self::new(s, e)
    }

    pub fn nominal_level(&self, t: f64) -> f64 {
        nominal_level(self.s, self.direction.len(), t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiResult {
    pub lower: f64,
    pub upper: f64,
    pub nominal_level: f64,
    /// The band and Θ do not intersect; bounds are NaN.
    pub infeasible: bool,
    /// Outer interval from a relaxed (linearized) problem.
    pub conservative: bool,
    pub duality_gap: f64,
    /// ψ evaluations whose radicand was clamped to zero.
    pub psi_clamps: usize,
}

struct Band {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    clamps: usize,
}

/// Constraints of Θ plus, per coordinate k, the relaxed ψ band built from
/// the envelope lines.
fn band_constraints(design: &DesignMatrix, feasible: &FeasibleSet, spec: &CiSpec, env: &LinearEnvelope) -> Result<Band> {
    let n = design.dim();
    if spec.direction.len() != n || feasible.dim() != n {
        return Err(Error::InvalidArgument("direction, design and feasible set differ in dimension".into()));
    }
    if !design.is_nonnegative() {
        return Err(Error::InvalidArgument("band intervals need nonnegative design entries".into()));
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    for k in 0..feasible.n_rows() {
        let w = feasible.row(k);
        a.push(w.to_vec());
        b.push(feasible.upper);
        a.push(w.iter().map(|v| -v).collect());
        b.push(-feasible.lower);
    }
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        a.push(e.clone());
        b.push(feasible.theta_max);
        e[i] = -1.0;
        a.push(e);
        b.push(feasible.theta_max);
    }
    let m_w = design.m_w();
    let t = design.total();
    let moment = design.response_moment();
    let wbar = design.column_mean();
    let gram = design.gram();
    let mut clamps = 0;
    for k in 0..n {
        if m_w == 0.0 || wbar[k] == 0.0 {
            continue;
        }
        let nu = (moment[k] / m_w).clamp(0.0, 1.0);
        let lo = psi_lower_with(nu, t, spec.s, spec.reading)?;
        let hi = psi_upper_with(nu, t, spec.s)?;
        clamps += usize::from(lo.clamped) + usize::from(hi.clamped);
        let g: Vec<f64> = (0..n).map(|j| gram[(k, j)]).collect();
        // ψ_ℓ M_w ≤ a₁ (𝕎θ)_k + b₁ w̄_k
        a.push(g.iter().map(|v| -env.a1 * v).collect());
        b.push(env.b1 * wbar[k] - lo.value * m_w);
        // a₂ (𝕎θ)_k + b₂ w̄_k ≤ ψ_u M_w
        a.push(g.iter().map(|v| env.a2 * v).collect());
        b.push(hi.value * m_w - env.b2 * wbar[k]);
    }
    Ok(Band { a, b, clamps })
}

fn interval(design: &DesignMatrix, feasible: &FeasibleSet, spec: &CiSpec, env: &LinearEnvelope, conservative: bool) -> Result<CiResult> {
    let band = band_constraints(design, feasible, spec, env)?;
    let neg: Vec<f64> = spec.direction.iter().map(|v| -v).collect();
    let nominal = spec.nominal_level(design.total());
    let (hi, lo) = rayon::join(|| maximize(&spec.direction, &band.a, &band.b), || maximize(&neg, &band.a, &band.b));
    match (hi?, lo?) {
        (LpOutcome::Optimal(h), LpOutcome::Optimal(l)) => Ok(CiResult {
            lower: -l.objective,
            upper: h.objective,
            nominal_level: nominal,
            infeasible: false,
            conservative,
            duality_gap: h.duality_gap.max(l.duality_gap),
            psi_clamps: band.clamps,
        }),
        _ => Ok(CiResult {
            lower: f64::NAN,
            upper: f64::NAN,
            nominal_level: nominal,
            infeasible: true,
            conservative,
            duality_gap: 0.0,
            psi_clamps: band.clamps,
        }),
    }
}

/// Interval for aᵀθ under the linear link: the range of aᵀθ over Θ
/// intersected with ψ_ℓ M_w ≤ (𝕎θ)_k ≤ ψ_u M_w for every coordinate k.
pub fn ci_linear(design: &DesignMatrix, feasible: &FeasibleSet, spec: &CiSpec) -> Result<CiResult> {
    interval(design, feasible, spec, &LinearEnvelope::identity(), false)
}

/// Outer interval for a nonlinear link with g replaced by its envelope.
pub fn ci_nonlinear(design: &DesignMatrix, feasible: &FeasibleSet, spec: &CiSpec, envelope: &LinearEnvelope) -> Result<CiResult> {
    let conservative = envelope.method != super::envelope::EnvelopeMethod::Identity;
    interval(design, feasible, spec, envelope, conservative)
}

/// Intervals for every coordinate of θ (2N linear programs).
pub fn coordinate_intervals(
    design: &DesignMatrix,
    feasible: &FeasibleSet,
    s: f64,
    envelope: &LinearEnvelope,
) -> Result<Vec<CiResult>> {
    (0..design.dim())
        .into_par_iter()
        .map(|k| {
            let spec = CiSpec::coordinate(s, design.dim(), k)?;
            ci_nonlinear(design, feasible, &spec, envelope)
        })
        .collect()
}
