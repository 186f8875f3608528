//! Directed effect matrices extracted from fitted node models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::EdgeInterval;
use crate::model::{Layout, ThetaVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LagAggregation {
    #[default]
    Sum,
    /// Signed coefficient of largest magnitude.
    MaxAbs,
    FirstLag,
}

impl LagAggregation {
    pub fn apply(self, lags: &[f64]) -> f64 {
        match self {
            LagAggregation::Sum => lags.iter().sum(),
            LagAggregation::MaxAbs => lags.iter().copied().fold(0.0, |m, v| if v.abs() > m.abs() { v } else { m }),
            LagAggregation::FirstLag => lags.first().copied().unwrap_or(0.0),
        }
    }
}

/// `weights[i][j]` is the effect of series j on node i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adjacency {
    pub weights: Vec<Vec<f64>>,
    pub labels: Vec<String>,
    pub directed: bool,
    /// Node x exogenous effects, empty when not extracted.
    #[serde(default)]
    pub exogenous: Vec<Vec<f64>>,
}

impl Adjacency {
    pub fn new(weights: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        let n = weights.len();
        if labels.len() != n || weights.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("adjacency must be square with one label per node".into()));
        }
        if weights.iter().flatten().any(|w| !w.is_finite()) {
            return Err(Error::InvalidArgument("adjacency entries must be finite".into()));
        }
        Ok(Self { weights, labels, directed: true, exogenous: Vec::new() })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Bootstrap edge weights (median when the interval excludes zero).
    pub fn from_intervals(edges: &[Vec<EdgeInterval>], labels: Vec<String>) -> Result<Self> {
        Self::new(edges.iter().map(|r| r.iter().map(|e| e.weight).collect()).collect(), labels)
    }

    /// 0/1 matrix of nonzero entries.
    pub fn binary(&self) -> Vec<Vec<f64>> {
        self.weights.iter().map(|r| r.iter().map(|&w| f64::from(u8::from(w != 0.0))).collect()).collect()
    }

    /// Nonzero entries as (source, target, weight).
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (i, row) in self.weights.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                if w != 0.0 {
                    out.push((j, i, w));
                }
            }
        }
        out
    }
}

/// Aggregates the lagged node effects of every fitted model.
pub fn extract_adjacency(models: &[ThetaVector], labels: Vec<String>, agg: LagAggregation) -> Result<Adjacency> {
    let first = models.first().ok_or_else(|| Error::InsufficientData("no models given".into()))?;
    let l = &first.layout;
    if models.len() != l.n_node {
        return Err(Error::InvalidArgument(format!("{} models for {} nodes", models.len(), l.n_node)));
    }
    let full = Layout::full(l.n_node, l.n_exo, l.n_static, l.d);
    let mut weights = Vec::with_capacity(models.len());
    let mut exogenous = Vec::with_capacity(models.len());
    for m in models {
        if !m.layout.same_vocabulary(l) {
            return Err(Error::VocabularyMismatch("models disagree on series counts or memory depth".into()));
        }
        let t = m.embed(&full)?;
        weights.push((0..l.n_node).map(|j| agg.apply(&t.node_effect(j))).collect());
        exogenous.push((0..l.n_exo).map(|j| agg.apply(&t.exo_effect(j))).collect());
    }
    let mut adj = Adjacency::new(weights, labels)?;
    adj.exogenous = exogenous;
    Ok(adj)
}

/// Zeroes entries with |w| ≤ c.
pub fn threshold_graph(adj: &Adjacency, c: f64) -> Adjacency {
    let mut out = adj.clone();
    for w in out.weights.iter_mut().flatten() {
        if w.abs() <= c {
            *w = 0.0;
        }
    }
    out
}

/// A + Aᵀ.
pub fn symmetrize(adj: &Adjacency) -> Vec<Vec<f64>> {
    let n = adj.len();
    (0..n).map(|i| (0..n).map(|j| adj.weights[i][j] + adj.weights[j][i]).collect()).collect()
}
