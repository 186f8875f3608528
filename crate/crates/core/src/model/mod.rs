//! Discrete Hawkes GLM: links, parameter layout, designs and simulation.

pub mod design;
pub mod link;
pub mod simulate;
pub mod theta;

pub use design::{build_design, build_design_multi, DesignMatrix};
pub use link::{LinkFunction, LinkKind};
pub use simulate::{simulate_panel, ExoProcess, HistoryMode, SimulationOutput, SimulationSpec};
pub use theta::{Feature, Layout, ThetaVector};

use crate::error::Result;

/// Event probability g(wᵀθ) for one lag window.
pub fn predict(theta: &ThetaVector, w: &[f64], link: &LinkFunction) -> Result<f64> {
    let flat = theta.flatten();
    if flat.len() != w.len() {
        return Err(crate::error::Error::InvalidArgument(format!(
            "window length {} does not match parameter length {}",
            w.len(),
            flat.len()
        )));
    }
    let eta = design::dot(w, &flat);
    link.check_domain(eta, 1e-12)?;
    Ok(link.value(eta).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predict_examples() {
        let th = ThetaVector::from_flat(Layout::full(1, 0, 0, 1), &[0.1, 0.2]).unwrap();
        assert!((predict(&th, &[1.0, 1.0], &LinkFunction::linear()).unwrap() - 0.3).abs() < 1e-15);
        let zero = ThetaVector::zeros(Layout::full(1, 0, 0, 1));
        assert_eq!(predict(&zero, &[1.0, 1.0], &LinkFunction::sigmoid(10.0)).unwrap(), 0.5);
        let two = ThetaVector::from_flat(Layout::full(1, 0, 0, 1), &[2.0, 0.0]).unwrap();
        let p = predict(&two, &[1.0, 0.0], &LinkFunction::sigmoid(10.0)).unwrap();
        assert!((p - 0.8808).abs() < 1e-4);
    }

    #[test]
    fn linear_domain_violation() {
        let th = ThetaVector::from_flat(Layout::full(1, 0, 0, 1), &[0.9, 0.5]).unwrap();
        assert!(predict(&th, &[1.0, 1.0], &LinkFunction::linear()).is_err());
    }
}
