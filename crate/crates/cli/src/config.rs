//! Run configuration read from TOML; command-line flags override fields.

use std::path::{Path, PathBuf};

use hawkes_granger::graph::{Linkage, DEFAULT_FAR_CONSTANT};
use hawkes_granger::ingest::Subgroup;
use hawkes_granger::inference::BootstrapConfig;
use hawkes_granger::model::{LinkFunction, LinkKind};
use hawkes_granger::selection::{CvConfig, Criterion};
use hawkes_granger::vi::{SolverOptions, DEFAULT_THETA_MAX};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub d: usize,
    pub link: LinkKind,
    /// Bound M on sigmoid linear predictors.
    pub bound: f64,
    pub theta_max: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { d: 1, link: LinkKind::Sigmoid, bound: LinkFunction::DEFAULT_SIGMOID_BOUND, theta_max: DEFAULT_THETA_MAX }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self { tol: o.tol, max_iter: o.max_iter }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub criterion: Criterion,
    pub split: f64,
    pub threshold: f64,
    pub class_weighting: bool,
    pub max_iter_grid: Vec<usize>,
    pub min_gain: f64,
    pub initial_k: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        let cv = CvConfig::default();
        Self {
            criterion: cv.criterion,
            split: cv.split,
            threshold: cv.threshold,
            class_weighting: cv.class_weighting,
            max_iter_grid: cv.max_iter_grid,
            min_gain: cv.min_gain,
            initial_k: cv.initial_k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferenceConfig {
    pub epsilon: f64,
    /// Confidence parameter of the LP intervals; calibrated to `level` when absent.
    pub s: Option<f64>,
    pub replicates: usize,
    pub level: f64,
    /// Edges with |weight| at or below this value are dropped from graphs.
    pub threshold: f64,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self { epsilon: 0.1, s: None, replicates: 1000, level: 0.9, threshold: 0.15 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringConfig {
    pub linkage: Linkage,
    pub far_constant: f64,
    pub k: usize,
    pub depth: usize,
    pub min_size: usize,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        Self { linkage: Linkage::Average, far_constant: DEFAULT_FAR_CONSTANT, k: 2, depth: 2, min_size: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data_dir: Option<PathBuf>,
    pub subgroup: Subgroup,
    pub model: ModelConfig,
    pub solver: SolverConfig,
    pub selection: SelectionConfig,
    pub inference: InferenceConfig,
    pub clustering: ClusteringConfig,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data_dir: None,
            subgroup: Subgroup::default(),
            model: ModelConfig::default(),
            solver: SolverConfig::default(),
            selection: SelectionConfig::default(),
            inference: InferenceConfig::default(),
            clustering: ClusteringConfig::default(),
            seed: 0,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML rendering.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn link(&self) -> LinkFunction {
        match self.model.link {
            LinkKind::Linear => LinkFunction::linear(),
            LinkKind::Sigmoid => LinkFunction::sigmoid(self.model.bound),
        }
    }

    pub fn solver(&self) -> SolverOptions {
        SolverOptions {
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            theta_max: self.model.theta_max,
            ..Default::default()
        }
    }

    pub fn cv(&self) -> CvConfig {
        let s = &self.selection;
        CvConfig {
            criterion: s.criterion,
            split: s.split,
            threshold: s.threshold,
            class_weighting: s.class_weighting,
            max_iter_grid: s.max_iter_grid.clone(),
            min_gain: s.min_gain,
            initial_k: s.initial_k,
            d: self.model.d,
            link: self.link(),
            solver: self.solver(),
            seed: self.seed,
        }
    }

    pub fn bootstrap(&self) -> BootstrapConfig {
        BootstrapConfig {
            replicates: self.inference.replicates,
            level: self.inference.level,
            seed: self.seed,
            d: self.model.d,
            link: self.link(),
            solver: self.solver(),
            node_features: None,
            class_weighting: false,
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Usage(m));
        if self.model.d == 0 {
            return bad("model.d must be at least 1".into());
        }
        if !(self.model.bound > 0.0) || !(self.model.theta_max > 0.0) {
            return bad("model.bound and model.theta_max must be positive".into());
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            return bad("solver.tol and solver.max_iter must be positive".into());
        }
        if !(self.inference.epsilon > 0.0 && self.inference.epsilon < 1.0) {
            return bad("inference.epsilon must lie in (0, 1)".into());
        }
        if !(self.inference.level > 0.0 && self.inference.level < 1.0) {
            return bad("inference.level must lie in (0, 1)".into());
        }
        if !(self.inference.threshold >= 0.0) {
            return bad("inference.threshold must be nonnegative".into());
        }
        if !(self.clustering.far_constant > 0.0) {
            return bad("clustering.far_constant must be positive".into());
        }
        self.cv().validate().map_err(|e| CliError::Usage(e.to_string()))
    }
}
