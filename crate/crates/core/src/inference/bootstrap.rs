//! Patient-level bootstrap intervals for node-to-node effects.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_design, DesignMatrix, Feature, Layout, LinkFunction, ThetaVector};
use crate::panel::PatientPanel;
use crate::selection::metrics::weights_from_counts;
use crate::vi::{fit_node, SolverOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub level: f64,
    pub seed: u64,
    pub d: usize,
    pub link: LinkFunction,
    pub solver: SolverOptions,
    /// Per-node feature subsets; all features when absent.
    #[serde(default)]
    pub node_features: Option<Vec<Vec<Feature>>>,
    /// Class-balanced weights in each replicate fit.
    #[serde(default)]
    pub class_weighting: bool,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: 1000,
            level: 0.9,
            seed: 0,
            d: 1,
            link: LinkFunction::sigmoid(LinkFunction::DEFAULT_SIGMOID_BOUND),
            solver: SolverOptions::default(),
            node_features: None,
            class_weighting: false,
        }
    }
}

/// Interval for one coefficient or one aggregated effect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeInterval {
    pub source: usize,
    pub target: usize,
    pub lower: f64,
    pub upper: f64,
    pub median: f64,
    pub exists: bool,
    pub weight: f64,
}

impl EdgeInterval {
    pub fn from_samples(source: usize, target: usize, samples: &mut [f64], level: f64) -> Self {
        samples.sort_by(f64::total_cmp);
        let alpha = 1.0 - level;
        let lower = quantile_sorted(samples, alpha / 2.0);
        let upper = quantile_sorted(samples, 1.0 - alpha / 2.0);
        let median = quantile_sorted(samples, 0.5);
        let exists = lower > 0.0 || upper < 0.0;
        Self { source, target, lower, upper, median, exists, weight: if exists { median } else { 0.0 } }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    /// `edges[i][j]`: effect of node j on node i, summed over lags.
    pub edges: Vec<Vec<EdgeInterval>>,
    /// Per target node, the replicate draws of the full parameter vector.
    pub samples: Vec<Vec<Vec<f64>>>,
    pub layout: Layout,
    pub succeeded: usize,
    pub failed: usize,
}

/// Linear-interpolation quantile of sorted data (the common "type 7" rule).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Resamples patients with replacement, refits every node per replicate and
/// forms `level` quantile intervals. Replicates whose fit fails are dropped;
/// more than 10% failures is an error.
pub fn bootstrap_edges(panels: &[PatientPanel], cfg: &BootstrapConfig) -> Result<BootstrapResult> {
    let first = panels.first().ok_or_else(|| Error::InsufficientData("no panels given".into()))?;
    if cfg.replicates < 2 || !(cfg.level > 0.0 && cfg.level < 1.0) {
        return Err(Error::InvalidArgument("need at least 2 replicates and a level in (0, 1)".into()));
    }
    let n1 = first.n_nodes();
    let full = Layout::full(n1, first.n_exo(), first.n_static(), cfg.d);
    let features = |i: usize| cfg.node_features.as_ref().map(|f| f[i].as_slice());
    // per node, per patient compressed design (None when the patient is too short)
    let per_patient: Vec<Vec<Option<DesignMatrix>>> = (0..n1)
        .map(|i| panels.iter().map(|p| build_design(p, i, cfg.d, features(i)).ok()).collect())
        .collect();

    let fits: Vec<Option<Vec<Vec<f64>>>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(b as u64);
            let mut mult = vec![0.0; panels.len()];
            for _ in 0..panels.len() {
                mult[rng.gen_range(0..panels.len())] += 1.0;
            }
            (0..n1)
                .map(|i| {
                    let parts: Vec<(&DesignMatrix, f64)> = per_patient[i]
                        .iter()
                        .zip(&mult)
                        .filter_map(|(d, &m)| d.as_ref().filter(|_| m > 0.0).map(|d| (d, m)))
                        .collect();
                    let mut design = DesignMatrix::merge(&parts).ok()?;
                    if cfg.class_weighting {
                        let p = design.total_positive();
                        if let Ok((cp, cn)) = weights_from_counts(p, design.total() - p) {
                            design = design.reweighted(cp, cn).ok()?;
                        }
                    }
                    let fit = fit_node(&design, &cfg.link, &cfg.solver).ok()?;
                    Some(fit.theta_hat.embed(&full).ok()?.flatten())
                })
                .collect::<Option<Vec<_>>>()
        })
        .collect();

    let failed = fits.iter().filter(|f| f.is_none()).count();
    if failed * 10 > cfg.replicates {
        return Err(Error::BootstrapFailures { failed, total: cfg.replicates });
    }
    let good: Vec<Vec<Vec<f64>>> = fits.into_iter().flatten().collect();
    let samples: Vec<Vec<Vec<f64>>> = (0..n1).map(|i| good.iter().map(|r| r[i].clone()).collect()).collect();
    let edges = (0..n1)
        .map(|i| {
            (0..n1)
                .map(|j| {
                    let mut effect: Vec<f64> = samples[i]
                        .iter()
                        .map(|theta| {
                            let t = ThetaVector::from_flat(full.clone(), theta).expect("full layout");
                            t.node_effect(j).iter().sum()
                        })
                        .collect();
                    EdgeInterval::from_samples(j, i, &mut effect, cfg.level)
                })
                .collect()
        })
        .collect();
    Ok(BootstrapResult { edges, samples, layout: full, succeeded: good.len(), failed })
}
