//! Parameter layout for a single node model.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A regressor series: a static covariate, an exogenous series or a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Feature {
    Static(usize),
    Exogenous(usize),
    Node(usize),
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Feature::Static(j) => write!(f, "z{j}"),
            Feature::Exogenous(j) => write!(f, "x{j}"),
            Feature::Node(j) => write!(f, "y{j}"),
        }
    }
}

/// Which series enter the lag window and in what order.
///
/// Columns are: constant, selected statics, then for every selected
/// exogenous series its lags 1..=d, then for every selected node its lags
/// 1..=d. Selected indices are kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub d: usize,
    pub n_static: usize,
    pub n_exo: usize,
    pub n_node: usize,
    pub statics: Vec<usize>,
    pub exos: Vec<usize>,
    pub nodes: Vec<usize>,
}

impl Layout {
    /// All series of the vocabulary, N = 1 + N3 + d N2 + d N1.
    pub fn full(n_node: usize, n_exo: usize, n_static: usize, d: usize) -> Self {
        Self {
            d,
            n_static,
            n_exo,
            n_node,
            statics: (0..n_static).collect(),
            exos: (0..n_exo).collect(),
            nodes: (0..n_node).collect(),
        }
    }

    /// A layout restricted to `features`.
    pub fn with_features(
        n_node: usize,
        n_exo: usize,
        n_static: usize,
        d: usize,
        features: &[Feature],
    ) -> Result<Self> {
        let mut l = Self { d, n_static, n_exo, n_node, statics: vec![], exos: vec![], nodes: vec![] };
        for &f in features {
            let (list, bound) = match f {
                Feature::Static(j) => (&mut l.statics, (j, n_static)),
                Feature::Exogenous(j) => (&mut l.exos, (j, n_exo)),
                Feature::Node(j) => (&mut l.nodes, (j, n_node)),
            };
            if bound.0 >= bound.1 {
                return Err(Error::InvalidArgument(format!("feature {f} out of range")));
            }
            if !list.contains(&bound.0) {
                list.push(bound.0);
            }
        }
        l.statics.sort_unstable();
        l.exos.sort_unstable();
        l.nodes.sort_unstable();
        Ok(l)
    }

    /// Plain regression layout with `n_cols` columns (constant + n_cols - 1
    /// statics); used for designs built directly from rows.
    pub fn plain(n_cols: usize) -> Self {
        assert!(n_cols >= 1);
        Self::full(0, 0, n_cols - 1, 1)
    }

    pub fn dim(&self) -> usize {
        1 + self.statics.len() + self.d * (self.exos.len() + self.nodes.len())
    }

    pub fn features(&self) -> Vec<Feature> {
        self.statics
            .iter()
            .map(|&j| Feature::Static(j))
            .chain(self.exos.iter().map(|&j| Feature::Exogenous(j)))
            .chain(self.nodes.iter().map(|&j| Feature::Node(j)))
            .collect()
    }

    pub fn contains(&self, f: Feature) -> bool {
        match f {
            Feature::Static(j) => self.statics.contains(&j),
            Feature::Exogenous(j) => self.exos.contains(&j),
            Feature::Node(j) => self.nodes.contains(&j),
        }
    }

    /// Column of `feature` at lag `lag` (1-based; ignored for statics).
    pub fn column(&self, feature: Feature, lag: usize) -> Option<usize> {
        let lag_ok = (1..=self.d).contains(&lag);
        match feature {
            Feature::Static(j) => self.statics.iter().position(|&s| s == j).map(|p| 1 + p),
            Feature::Exogenous(j) if lag_ok => self
                .exos
                .iter()
                .position(|&s| s == j)
                .map(|p| 1 + self.statics.len() + p * self.d + lag - 1),
            Feature::Node(j) if lag_ok => self.nodes.iter().position(|&s| s == j).map(|p| {
                1 + self.statics.len() + self.exos.len() * self.d + p * self.d + lag - 1
            }),
            _ => None,
        }
    }

    /// Same vocabulary sizes and memory depth.
    pub fn same_vocabulary(&self, other: &Layout) -> bool {
        self.d == other.d
            && self.n_static == other.n_static
            && self.n_exo == other.n_exo
            && self.n_node == other.n_node
    }

    /// Column labels given series names.
    pub fn column_labels(&self, nodes: &[String], exos: &[String], statics: &[String]) -> Vec<String> {
        let mut out = vec!["(intercept)".to_string()];
        out.extend(self.statics.iter().map(|&j| statics[j].clone()));
        for &j in &self.exos {
            out.extend((1..=self.d).map(|l| format!("{}[t-{l}]", exos[j])));
        }
        for &j in &self.nodes {
            out.extend((1..=self.d).map(|l| format!("{}[t-{l}]", nodes[j])));
        }
        out
    }
}

/// Node parameter vector θ = (ν, γ, β, α) in [`Layout`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaVector {
    pub layout: Layout,
    pub nu: f64,
    pub gamma: Vec<f64>,
    /// One lag vector (length d) per selected exogenous series.
    pub beta: Vec<Vec<f64>>,
    /// One lag vector (length d) per selected node.
    pub alpha: Vec<Vec<f64>>,
}

impl ThetaVector {
    pub fn zeros(layout: Layout) -> Self {
        let d = layout.d;
        Self {
            nu: 0.0,
            gamma: vec![0.0; layout.statics.len()],
            beta: vec![vec![0.0; d]; layout.exos.len()],
            alpha: vec![vec![0.0; d]; layout.nodes.len()],
            layout,
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.layout.dim());
        v.push(self.nu);
        v.extend_from_slice(&self.gamma);
        for b in &self.beta {
            v.extend_from_slice(b);
        }
        for a in &self.alpha {
            v.extend_from_slice(a);
        }
        v
    }

    pub fn from_flat(layout: Layout, flat: &[f64]) -> Result<Self> {
        if flat.len() != layout.dim() {
            return Err(Error::InvalidArgument(format!(
                "parameter length {} does not match layout dimension {}",
                flat.len(),
                layout.dim()
            )));
        }
        let d = layout.d;
        let ns = layout.statics.len();
        let ne = layout.exos.len();
        let nn = layout.nodes.len();
        let exo_start = 1 + ns;
        let node_start = exo_start + ne * d;
        Ok(Self {
            nu: flat[0],
            gamma: flat[1..exo_start].to_vec(),
            beta: (0..ne).map(|k| flat[exo_start + k * d..exo_start + (k + 1) * d].to_vec()).collect(),
            alpha: (0..nn).map(|k| flat[node_start + k * d..node_start + (k + 1) * d].to_vec()).collect(),
            layout,
        })
    }

    /// Lag coefficients of node `j`, zero when `j` is not in the layout.
    pub fn node_effect(&self, j: usize) -> Vec<f64> {
        match self.layout.nodes.iter().position(|&s| s == j) {
            Some(p) => self.alpha[p].clone(),
            None => vec![0.0; self.layout.d],
        }
    }

    pub fn exo_effect(&self, j: usize) -> Vec<f64> {
        match self.layout.exos.iter().position(|&s| s == j) {
            Some(p) => self.beta[p].clone(),
            None => vec![0.0; self.layout.d],
        }
    }

    /// Re-expresses this vector in a wider layout with the same vocabulary,
    /// filling absent series with zeros.
    pub fn embed(&self, target: &Layout) -> Result<ThetaVector> {
        if !self.layout.same_vocabulary(target) {
            return Err(Error::VocabularyMismatch("cannot embed across vocabularies".into()));
        }
        let mut out = ThetaVector::zeros(target.clone());
        out.nu = self.nu;
        for (p, &j) in target.statics.iter().enumerate() {
            if let Some(q) = self.layout.statics.iter().position(|&s| s == j) {
                out.gamma[p] = self.gamma[q];
            }
        }
        for (p, &j) in target.exos.iter().enumerate() {
            out.beta[p] = self.exo_effect(j);
        }
        for (p, &j) in target.nodes.iter().enumerate() {
            out.alpha[p] = self.node_effect(j);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dimension_formula() {
        assert_eq!(Layout::full(1, 0, 0, 1).dim(), 2);
        assert_eq!(Layout::full(2, 1, 1, 2).dim(), 1 + 1 + 2 + 4);
    }

    #[test]
    fn column_positions() {
        let l = Layout::full(2, 1, 1, 2);
        assert_eq!(l.column(Feature::Static(0), 1), Some(1));
        assert_eq!(l.column(Feature::Exogenous(0), 1), Some(2));
        assert_eq!(l.column(Feature::Exogenous(0), 2), Some(3));
        assert_eq!(l.column(Feature::Node(0), 1), Some(4));
        assert_eq!(l.column(Feature::Node(1), 2), Some(7));
        assert_eq!(l.column(Feature::Node(1), 3), None);
    }

    #[test]
    fn embed_fills_zeros() {
        let small = Layout::with_features(3, 0, 0, 1, &[Feature::Node(2)]).unwrap();
        let mut t = ThetaVector::zeros(small);
        t.alpha[0][0] = 0.7;
        let big = t.embed(&Layout::full(3, 0, 0, 1)).unwrap();
        assert_eq!(big.flatten(), vec![0.0, 0.0, 0.0, 0.7]);
    }

    proptest! {
        #[test]
        fn flatten_round_trip(
            n1 in 0usize..4, n2 in 0usize..3, n3 in 0usize..3, d in 1usize..4,
            seed in any::<u64>()
        ) {
            use rand::{Rng, SeedableRng};
            let layout = Layout::full(n1, n2, n3, d);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let flat: Vec<f64> = (0..layout.dim()).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let theta = ThetaVector::from_flat(layout, &flat).unwrap();
            prop_assert_eq!(theta.flatten(), flat);
        }
    }
}
