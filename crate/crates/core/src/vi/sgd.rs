//! Stochastic gradient fitters on the squared-error objective.
//!
//! Both variants work on the lag-expanded parameters θ of every node and
//! use the batch-mean gradient, so the step size does not depend on how many
//! rows a batch holds.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_design, DesignMatrix, Layout, LinkFunction, LinkKind, ThetaVector};
use crate::panel::PatientPanel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SgdLoss {
    LeastSquares,
    ZeroOne { threshold: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SgdVariant {
    /// Stop when the batch objective changes by at most `tol`.
    Vanilla,
    /// Keep the parameters with the best held-out last-step loss.
    Modified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub variant: SgdVariant,
    pub step: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Panels per batch.
    pub batch_size: usize,
    pub loss: SgdLoss,
    /// Fraction of panels held out by the modified variant.
    pub test_fraction: f64,
    pub d: usize,
    pub link: LinkFunction,
    /// Keep static coefficients at zero (subgroup analysis).
    pub fix_static: bool,
    pub theta_max: f64,
    pub seed: u64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            variant: SgdVariant::Vanilla,
            step: 5e-3,
            tol: 1e-2,
            max_iter: 1000,
            batch_size: 8,
            loss: SgdLoss::LeastSquares,
            test_fraction: 0.2,
            d: 1,
            link: LinkFunction::sigmoid(LinkFunction::DEFAULT_SIGMOID_BOUND),
            fix_static: false,
            theta_max: 100.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdTrace {
    pub node: usize,
    pub iterations: usize,
    /// Vanilla: batch objective after each step. Modified: stored
    /// (best-so-far) held-out loss after each step.
    pub losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdFit {
    pub thetas: Vec<ThetaVector>,
    pub traces: Vec<SgdTrace>,
}

fn prob(link: &LinkFunction, eta: f64) -> f64 {
    link.value(link.clamp(eta))
}

fn deriv(link: &LinkFunction, eta: f64) -> f64 {
    match link.kind {
        LinkKind::Linear => 1.0,
        LinkKind::Sigmoid => link.derivative(link.clamp(eta)),
    }
}

/// Σ (y − g(wᵀθ))² over the rows of `designs`.
fn sum_squares(designs: &[&DesignMatrix], theta: &[f64], link: &LinkFunction) -> f64 {
    let mut s = 0.0;
    for dm in designs {
        for (u, eta) in dm.predictors(theta).into_iter().enumerate() {
            let p = prob(link, eta);
            s += dm.positives(u) * (1.0 - p).powi(2) + dm.negatives(u) * p * p;
        }
    }
    s
}

fn mean_gradient(designs: &[&DesignMatrix], theta: &[f64], link: &LinkFunction) -> Vec<f64> {
    let mut g = vec![0.0; theta.len()];
    let mut total = 0.0;
    for dm in designs {
        total += dm.total();
        for (u, eta) in dm.predictors(theta).into_iter().enumerate() {
            let p = prob(link, eta);
            let c = 2.0 * deriv(link, eta) * (dm.count(u) * p - dm.positives(u));
            for (gk, wk) in g.iter_mut().zip(dm.row(u)) {
                *gk += c * wk;
            }
        }
    }
    g.iter_mut().for_each(|v| *v /= total);
    g
}

fn held_out_loss(last: &[DesignMatrix], theta: &[f64], link: &LinkFunction, loss: SgdLoss) -> f64 {
    let mut s = 0.0;
    for dm in last {
        for (u, eta) in dm.predictors(theta).into_iter().enumerate() {
            let p = prob(link, eta);
            let (pos, neg) = (dm.positives(u), dm.negatives(u));
            s += match loss {
                SgdLoss::LeastSquares => pos * (1.0 - p).powi(2) + neg * p * p,
                SgdLoss::ZeroOne { threshold } => {
                    if p >= threshold {
                        neg
                    } else {
                        pos
                    }
                }
            };
        }
    }
    s
}

fn sgd_step(theta: &mut [f64], grad: &[f64], cfg: &SgdConfig, layout: &Layout) {
    let frozen = if cfg.fix_static { layout.statics.len() } else { 0 };
    for (k, (t, g)) in theta.iter_mut().zip(grad).enumerate() {
        if (1..=frozen).contains(&k) {
            continue;
        }
        *t = (*t - cfg.step * g).clamp(-cfg.theta_max, cfg.theta_max);
    }
}

/// Fits every node by stochastic gradient descent over panels.
pub fn fit_sgd(panels: &[PatientPanel], cfg: &SgdConfig) -> Result<SgdFit> {
    let first = panels.first().ok_or_else(|| Error::InsufficientData("no panels given".into()))?;
    if !(cfg.step > 0.0) || cfg.batch_size == 0 {
        return Err(Error::InvalidArgument("step and batch size must be positive".into()));
    }
    let mut order: Vec<usize> = (0..panels.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (train_idx, test_idx): (Vec<usize>, Vec<usize>) = match cfg.variant {
        SgdVariant::Vanilla => (order, Vec::new()),
        SgdVariant::Modified => {
            use rand::seq::SliceRandom;
            order.shuffle(&mut rng);
            let n_test = ((panels.len() as f64 * cfg.test_fraction).ceil() as usize).clamp(1, panels.len().max(2) - 1);
            if panels.len() < 2 {
                return Err(Error::InsufficientData("held-out split needs at least two panels".into()));
            }
            let test = order.split_off(panels.len() - n_test);
            (order, test)
        }
    };

    let mut thetas = Vec::new();
    let mut traces = Vec::new();
    for node in 0..first.n_nodes() {
        let train: Vec<DesignMatrix> =
            train_idx.iter().filter_map(|&k| build_design(&panels[k], node, cfg.d, None).ok()).collect();
        if train.is_empty() {
            return Err(Error::InsufficientData(format!("empty training set for node {node}")));
        }
        let last: Vec<DesignMatrix> = test_idx
            .iter()
            .filter_map(|&k| {
                let p = &panels[k];
                let tail = p.slice(p.len().saturating_sub(cfg.d + 1)..p.len());
                build_design(&tail, node, cfg.d, None).ok()
            })
            .collect();
        let layout = train[0].layout().clone();
        let mut theta = vec![0.0; layout.dim()];
        let mut losses = Vec::new();
        let mut iterations = 0;
        match cfg.variant {
            SgdVariant::Vanilla => {
                let mut prev = f64::INFINITY;
                let all: Vec<&DesignMatrix> = train.iter().collect();
                let mut cur = sum_squares(&all, &theta, &cfg.link);
                while (prev - cur).abs() > cfg.tol && iterations < cfg.max_iter {
                    let pick = sample(&mut rng, train.len(), cfg.batch_size.min(train.len()));
                    let batch: Vec<&DesignMatrix> = pick.iter().map(|k| &train[k]).collect();
                    let before = sum_squares(&batch, &theta, &cfg.link);
                    let g = mean_gradient(&batch, &theta, &cfg.link);
                    sgd_step(&mut theta, &g, cfg, &layout);
                    let after = sum_squares(&batch, &theta, &cfg.link);
                    prev = before;
                    cur = after;
                    losses.push(after);
                    iterations += 1;
                }
            }
            SgdVariant::Modified => {
                let mut stored = theta.clone();
                let mut best = held_out_loss(&last, &theta, &cfg.link, cfg.loss);
                let mut prev = f64::INFINITY;
                let mut cur = best;
                while (prev - cur).abs() > cfg.tol && iterations < cfg.max_iter {
                    let pick = sample(&mut rng, train.len(), cfg.batch_size.min(train.len()));
                    let batch: Vec<&DesignMatrix> = pick.iter().map(|k| &train[k]).collect();
                    let g = mean_gradient(&batch, &theta, &cfg.link);
                    sgd_step(&mut theta, &g, cfg, &layout);
                    prev = cur;
                    cur = held_out_loss(&last, &theta, &cfg.link, cfg.loss);
                    if cur < best {
                        best = cur;
                        stored.clone_from(&theta);
                    }
                    losses.push(best);
                    iterations += 1;
                }
                theta = stored;
            }
        }
        thetas.push(ThetaVector::from_flat(layout, &theta)?);
        traces.push(SgdTrace { node, iterations, losses });
    }
    Ok(SgdFit { thetas, traces })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{simulate_panel, SimulationSpec};
    use crate::vi::{fit_lse_linear, least_squares_objective, FeasibleSet, SolverOptions};

    fn linear_panels(n: usize) -> Vec<PatientPanel> {
        let mut spec = SimulationSpec::independent(2, 1, 200, 0.2, LinkFunction::linear());
        spec.alpha[0][1] = 0.4;
        spec.alpha[1][0] = 0.2;
        (0..n).map(|s| simulate_panel(&spec, s as u64).unwrap().panel).collect()
    }

    #[test]
    fn fixed_point_is_kept() {
        // constant all-zero responses with linear link: θ = 0 fits exactly
        let panels = vec![PatientPanel::new("p", vec![vec![0.0; 20]], vec![], vec![]).unwrap()];
        let cfg = SgdConfig { link: LinkFunction::linear(), max_iter: 1, ..Default::default() };
        let fit = fit_sgd(&panels, &cfg).unwrap();
        assert!(fit.thetas[0].flatten().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn modified_stored_loss_is_monotone() {
        let panels = linear_panels(10);
        let cfg = SgdConfig {
            variant: SgdVariant::Modified,
            link: LinkFunction::linear(),
            step: 0.2,
            tol: 0.0,
            max_iter: 200,
            ..Default::default()
        };
        let fit = fit_sgd(&panels, &cfg).unwrap();
        for tr in &fit.traces {
            assert!(tr.losses.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn vanilla_reaches_least_squares_optimum() {
        let panels = linear_panels(6);
        let cfg = SgdConfig {
            link: LinkFunction::linear(),
            step: 0.5,
            tol: 1e-6,
            max_iter: 20_000,
            batch_size: 6,
            ..Default::default()
        };
        let fit = fit_sgd(&panels, &cfg).unwrap();
        let dm = crate::model::build_design_multi(&panels, 0, 1, None).unwrap();
        let fs = FeasibleSet::for_design(&dm, &LinkFunction::linear(), 100.0).unwrap();
        let lse = fit_lse_linear(&dm, &fs, &SolverOptions { tol: 1e-10, max_iter: 100_000, ..Default::default() }).unwrap();
        let opt = least_squares_objective(&dm, &lse.theta_hat.flatten());
        let got = least_squares_objective(&dm, &fit.thetas[0].flatten());
        assert!(got <= 1.05 * opt, "{got} vs {opt}");
    }

    #[test]
    fn empty_training_set_errors() {
        let panels = vec![PatientPanel::new("p", vec![vec![0.0]], vec![], vec![]).unwrap()];
        assert!(fit_sgd(&panels, &SgdConfig::default()).is_err());
    }
}
