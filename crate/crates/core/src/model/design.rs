//! Lag-window design matrices.
//!
//! Rows are stored once per distinct lag window together with the number of
//! positive and negative responses observed at that window. Binary node
//! histories repeat heavily, so this keeps solver passes cheap. Counts are
//! real-valued so that class weights and bootstrap multiplicities can be
//! folded in directly.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};

use super::theta::{Feature, Layout};
use crate::error::{Error, Result};
use crate::panel::PatientPanel;

#[derive(Debug, Clone)]
pub struct DesignMatrix {
    layout: Layout,
    target: usize,
    n_cols: usize,
    rows: Vec<f64>,
    pos: Vec<f64>,
    neg: Vec<f64>,
    total: f64,
    m_w: f64,
    gram: DMatrix<f64>,
    lambda1: f64,
    lambda_max: f64,
}

#[derive(Default)]
struct Builder {
    n_cols: usize,
    index: HashMap<Vec<u64>, usize>,
    rows: Vec<f64>,
    pos: Vec<f64>,
    neg: Vec<f64>,
}

impl Builder {
    fn new(n_cols: usize) -> Self {
        Self { n_cols, ..Default::default() }
    }

    fn push(&mut self, row: &[f64], pos: f64, neg: f64) {
        let key: Vec<u64> = row.iter().map(|v| (v + 0.0).to_bits()).collect();
        let u = *self.index.entry(key).or_insert_with(|| {
            self.rows.extend_from_slice(row);
            self.pos.push(0.0);
            self.neg.push(0.0);
            self.pos.len() - 1
        });
        self.pos[u] += pos;
        self.neg[u] += neg;
    }

    fn finish(self, layout: Layout, target: usize) -> Result<DesignMatrix> {
        DesignMatrix::from_parts(layout, target, self.n_cols, self.rows, self.pos, self.neg)
    }
}

/// Design for one panel. See [`build_design_multi`].
pub fn build_design(
    panel: &PatientPanel,
    target: usize,
    d: usize,
    features: Option<&[Feature]>,
) -> Result<DesignMatrix> {
    build_design_multi(std::slice::from_ref(panel), target, d, features)
}

/// Stacks the lag windows of every panel into one design for node `target`.
///
/// A time step contributes a row when its response and every lagged entry it
/// uses are valid. Panels no longer than `d` contribute nothing; if no panel
/// contributes, the call fails with an insufficient-data error.
pub fn build_design_multi(
    panels: &[PatientPanel],
    target: usize,
    d: usize,
    features: Option<&[Feature]>,
) -> Result<DesignMatrix> {
    let first = panels
        .first()
        .ok_or_else(|| Error::InsufficientData("no panels given".into()))?;
    if d == 0 {
        return Err(Error::InvalidArgument("memory depth d must be at least 1".into()));
    }
    for p in panels {
        if !p.same_vocabulary(first) {
            return Err(Error::VocabularyMismatch(format!("panel {} differs from {}", p.id, first.id)));
        }
    }
    let (n1, n2, n3) = (first.n_nodes(), first.n_exo(), first.n_static());
    if target >= n1 {
        return Err(Error::InvalidArgument(format!("target node {target} out of range (N1 = {n1})")));
    }
    let layout = match features {
        Some(f) => Layout::with_features(n1, n2, n3, d, f)?,
        None => Layout::full(n1, n2, n3, d),
    };
    let n_cols = layout.dim();
    let mut builder = Builder::new(n_cols);
    let mut row = vec![0.0; n_cols];
    for p in panels {
        if p.len() <= d {
            continue;
        }
        row[0] = 1.0;
        for (k, &j) in layout.statics.iter().enumerate() {
            row[1 + k] = p.z[j];
        }
        'time: for t in d..p.len() {
            if !p.node_valid(target, t) {
                continue;
            }
            let mut c = 1 + layout.statics.len();
            for &j in &layout.exos {
                for lag in 1..=d {
                    if !p.exo_valid(j, t - lag) {
                        continue 'time;
                    }
                    row[c] = p.x[j][t - lag];
                    c += 1;
                }
            }
            for &j in &layout.nodes {
                for lag in 1..=d {
                    if !p.node_valid(j, t - lag) {
                        continue 'time;
                    }
                    row[c] = p.y[j][t - lag];
                    c += 1;
                }
            }
            let y = p.y[target][t] > 0.0;
            builder.push(&row, f64::from(u8::from(y)), f64::from(u8::from(!y)));
        }
    }
    if builder.pos.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no usable time steps for node {target} with memory depth {d}"
        )));
    }
    builder.finish(layout, target)
}

impl DesignMatrix {
    /// Design from explicit rows and responses (responses binarized by y > 0).
    /// Every row must start with the constant 1.
    pub fn from_rows(rows: &[Vec<f64>], y: &[f64]) -> Result<Self> {
        if rows.is_empty() || rows.len() != y.len() {
            return Err(Error::InsufficientData("rows and responses must be nonempty and aligned".into()));
        }
        let n = rows[0].len();
        let mut b = Builder::new(n);
        for (r, &v) in rows.iter().zip(y) {
            if r.len() != n || r[0] != 1.0 {
                return Err(Error::InvalidArgument("rows must share a length and start with 1".into()));
            }
            let hit = v > 0.0;
            b.push(r, f64::from(u8::from(hit)), f64::from(u8::from(!hit)));
        }
        b.finish(Layout::plain(n), 0)
    }

    /// Pools several designs of the same layout, scaling each one's counts by
    /// its multiplicity (used for bootstrap resamples).
    pub fn merge(parts: &[(&DesignMatrix, f64)]) -> Result<Self> {
        let (head, _) = parts.first().ok_or_else(|| Error::InsufficientData("nothing to merge".into()))?;
        let mut b = Builder::new(head.n_cols);
        for (dm, mult) in parts {
            if dm.layout != head.layout || dm.target != head.target {
                return Err(Error::VocabularyMismatch("designs differ in layout or target".into()));
            }
            for u in 0..dm.n_unique() {
                b.push(dm.row(u), mult * dm.pos[u], mult * dm.neg[u]);
            }
        }
        b.finish(head.layout.clone(), head.target)
    }

    fn from_parts(
        layout: Layout,
        target: usize,
        n_cols: usize,
        rows: Vec<f64>,
        pos: Vec<f64>,
        neg: Vec<f64>,
    ) -> Result<Self> {
        let keep: Vec<usize> = (0..pos.len()).filter(|&u| pos[u] + neg[u] > 0.0).collect();
        let (rows, pos, neg) = if keep.len() == pos.len() {
            (rows, pos, neg)
        } else {
            (
                keep.iter().flat_map(|&u| rows[u * n_cols..(u + 1) * n_cols].to_vec()).collect(),
                keep.iter().map(|&u| pos[u]).collect(),
                keep.iter().map(|&u| neg[u]).collect::<Vec<f64>>(),
            )
        };
        let total: f64 = pos.iter().zip(&neg).map(|(p, n)| p + n).sum();
        if total <= 0.0 {
            return Err(Error::InsufficientData("design has zero total weight".into()));
        }
        let m_w = rows.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut gram = DMatrix::zeros(n_cols, n_cols);
        for u in 0..pos.len() {
            let c = (pos[u] + neg[u]) / total;
            let w = &rows[u * n_cols..(u + 1) * n_cols];
            for a in 0..n_cols {
                if w[a] == 0.0 {
                    continue;
                }
                let ca = c * w[a];
                for b in a..n_cols {
                    gram[(a, b)] += ca * w[b];
                }
            }
        }
        for a in 0..n_cols {
            for b in 0..a {
                gram[(a, b)] = gram[(b, a)];
            }
        }
        let eig = SymmetricEigen::new(gram.clone()).eigenvalues;
        let lambda1 = eig.iter().copied().fold(f64::INFINITY, f64::min).max(0.0);
        let lambda_max = eig.iter().copied().fold(0.0, f64::max);
        Ok(Self { layout, target, n_cols, rows, pos, neg, total, m_w, gram, lambda1, lambda_max })
    }

    /// Same rows with positive counts scaled by `c_pos` and negatives by `c_neg`.
    pub fn reweighted(&self, c_pos: f64, c_neg: f64) -> Result<Self> {
        Self::from_parts(
            self.layout.clone(),
            self.target,
            self.n_cols,
            self.rows.clone(),
            self.pos.iter().map(|p| p * c_pos).collect(),
            self.neg.iter().map(|n| n * c_neg).collect(),
        )
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn dim(&self) -> usize {
        self.n_cols
    }

    pub fn n_unique(&self) -> usize {
        self.pos.len()
    }

    pub fn row(&self, u: usize) -> &[f64] {
        &self.rows[u * self.n_cols..(u + 1) * self.n_cols]
    }

    pub fn positives(&self, u: usize) -> f64 {
        self.pos[u]
    }

    pub fn negatives(&self, u: usize) -> f64 {
        self.neg[u]
    }

    pub fn count(&self, u: usize) -> f64 {
        self.pos[u] + self.neg[u]
    }

    /// Total (weighted) number of time steps, T.
    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn total_positive(&self) -> f64 {
        self.pos.iter().sum()
    }

    /// Largest absolute entry over all rows.
    pub fn m_w(&self) -> f64 {
        self.m_w
    }

    /// (1/T) Σ w wᵀ.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// (1/T) Σ w y.
    pub fn response_moment(&self) -> Vec<f64> {
        let mut a = vec![0.0; self.n_cols];
        for u in 0..self.n_unique() {
            let c = self.pos[u] / self.total;
            for (ak, wk) in a.iter_mut().zip(self.row(u)) {
                *ak += c * wk;
            }
        }
        a
    }

    /// (1/T) Σ w.
    pub fn column_mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n_cols];
        for u in 0..self.n_unique() {
            let c = self.count(u) / self.total;
            for (mk, wk) in m.iter_mut().zip(self.row(u)) {
                *mk += c * wk;
            }
        }
        m
    }

    /// Linear predictor wᵀθ for every distinct row.
    pub fn predictors(&self, theta: &[f64]) -> Vec<f64> {
        assert_eq!(theta.len(), self.n_cols, "parameter dimension mismatch");
        (0..self.n_unique()).map(|u| dot(self.row(u), theta)).collect()
    }

    /// Whether every entry is nonnegative (needed by the ψ-band intervals).
    pub fn is_nonnegative(&self) -> bool {
        self.rows.iter().all(|&v| v >= 0.0)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
