//! Data-driven band functions ψ_ℓ and ψ_u for a [0, 1]-valued empirical mean.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How to read the undefined symbol in the published ψ_ℓ formula.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum PsiReading {
    /// Replace it by the confidence parameter y (mirrors ψ_u).
    #[default]
    SameAsY,
    /// Use the given constant.
    Explicit(f64),
}

/// A ψ value and whether a negative radicand was clamped to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiValue {
    pub value: f64,
    pub clamped: bool,
}

fn check(nu: f64, t: f64, y: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&nu) || !(y > 0.0) || !(t >= 1.0) {
        return Err(Error::InvalidArgument(format!("psi needs nu in [0,1], y > 0, T >= 1 (got {nu}, {y}, {t})")));
    }
    Ok(())
}

fn root(r: f64) -> (f64, bool) {
    if r < 0.0 {
        (0.0, true)
    } else {
        (r.sqrt(), false)
    }
}

pub fn psi_lower_with(nu: f64, t: f64, y: f64, reading: PsiReading) -> Result<PsiValue> {
    check(nu, t, y)?;
    if nu <= y / (3.0 * t) {
        return Ok(PsiValue { value: 0.0, clamped: false });
    }
    let u = match reading {
        PsiReading::SameAsY => y,
        PsiReading::Explicit(u) => u,
    };
    let rad = 2.0 * t * nu * y + y * y / 3.0 - (2.0 * u / t) * (y / 3.0 - nu * t).powi(2);
    let (s, clamped) = root(rad);
    let value = (t * nu + 2.0 * u / 3.0 - s) / (t + 2.0 * y);
    Ok(PsiValue { value: value.clamp(0.0, 1.0), clamped })
}

pub fn psi_upper_with(nu: f64, t: f64, y: f64) -> Result<PsiValue> {
    check(nu, t, y)?;
    if nu >= 1.0 - y / (3.0 * t) {
        return Ok(PsiValue { value: 1.0, clamped: false });
    }
    let rad = 2.0 * t * nu * y + 5.0 * y * y / 3.0 - (2.0 * y / t) * (y / 3.0 + nu * t).powi(2);
    let (s, clamped) = root(rad);
    let value = (t * nu + 4.0 * y / 3.0 + s) / (t + 2.0 * y);
    Ok(PsiValue { value: value.clamp(0.0, 1.0), clamped })
}

/// Lower band ψ_ℓ(ν, T; y).
pub fn psi_lower(nu: f64, t: f64, y: f64) -> Result<f64> {
    psi_lower_with(nu, t, y, PsiReading::SameAsY).map(|p| p.value)
}

/// Upper band ψ_u(ν, T; y).
pub fn psi_upper(nu: f64, t: f64, y: f64) -> Result<f64> {
    psi_upper_with(nu, t, y).map(|p| p.value)
}
