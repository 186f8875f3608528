//! Spectral blockmodelling of directed graphs.
//!
//! Nodes are embedded with the leading singular triplets of the adjacency
//! matrix, Z = [U Σ^{1/2} | V Σ^{1/2}], and the rows of Z are clustered by
//! k-means. Applying the procedure to the subgraph induced by each block
//! gives a hierarchy.

use std::fmt::Write as _;

use log::warn;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Target share of squared singular values for automatic dimension choice.
pub const EXPLAINED_VARIANCE_TARGET: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    pub assignment: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    pub inertia: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn kmeans_once(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> KMeansResult {
    let n = points.len();
    // k-means++ seeding
    let mut centers = vec![points[rng.gen_range(0..n)].clone()];
    let mut near: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = near.iter().sum();
        let pick = if total <= 0.0 {
            rng.gen_range(0..n)
        } else {
            let mut r = rng.gen::<f64>() * total;
            let mut idx = n - 1;
            for (i, &w) in near.iter().enumerate() {
                if r < w {
                    idx = i;
                    break;
                }
                r -= w;
            }
            idx
        };
        centers.push(points[pick].clone());
        for (i, p) in points.iter().enumerate() {
            near[i] = near[i].min(sq_dist(p, &centers[centers.len() - 1]));
        }
    }
    let dim = points[0].len();
    let mut assignment = vec![usize::MAX; n];
    for _ in 0..300 {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let c = (0..k)
                .min_by(|&a, &b| sq_dist(p, &centers[a]).total_cmp(&sq_dist(p, &centers[b])))
                .expect("k > 0");
            if assignment[i] != c {
                assignment[i] = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignment) {
            counts[c] += 1;
            sums[c].iter_mut().zip(p).for_each(|(s, v)| *s += v);
        }
        for c in 0..k {
            if counts[c] == 0 {
                // empty cluster: move it to the worst-served point
                let far = (0..n)
                    .max_by(|&a, &b| {
                        sq_dist(&points[a], &centers[assignment[a]]).total_cmp(&sq_dist(&points[b], &centers[assignment[b]]))
                    })
                    .expect("n > 0");
                centers[c] = points[far].clone();
                assignment[far] = c;
            } else {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    let inertia = points.iter().zip(&assignment).map(|(p, &c)| sq_dist(p, &centers[c])).sum();
    KMeansResult { assignment, centers, inertia }
}

/// k-means++ with `restarts` seeded restarts; keeps the lowest inertia.
/// Labels are renumbered by first appearance.
pub fn kmeans(points: &[Vec<f64>], k: usize, restarts: usize, seed: u64) -> Result<KMeansResult> {
    if k == 0 || k > points.len() {
        return Err(Error::InvalidArgument(format!("k = {k} must lie in 1..={}", points.len())));
    }
    let mut best: Option<KMeansResult> = None;
    for r in 0..restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        let res = kmeans_once(points, k, &mut rng);
        if best.as_ref().is_none_or(|b| res.inertia < b.inertia - 1e-12) {
            best = Some(res);
        }
    }
    let mut best = best.expect("at least one restart");
    let mut relabel = vec![usize::MAX; k];
    let mut next = 0;
    for c in best.assignment.iter_mut() {
        if relabel[*c] == usize::MAX {
            relabel[*c] = next;
            next += 1;
        }
        *c = relabel[*c];
    }
    let mut centers = vec![Vec::new(); k];
    for (old, &new) in relabel.iter().enumerate() {
        if new != usize::MAX {
            centers[new] = best.centers[old].clone();
        }
    }
    best.centers = centers.into_iter().filter(|c| !c.is_empty()).collect();
    Ok(best)
}

/// Singular values (nonincreasing) with matching left and right vectors.
pub struct SpectralEmbedding {
    pub singular_values: Vec<f64>,
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
}

pub fn svd_sorted(w: &DMatrix<f64>) -> SpectralEmbedding {
    let svd = w.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
    let n = w.nrows();
    let mut us = DMatrix::zeros(n, order.len());
    let mut vs = DMatrix::zeros(w.ncols(), order.len());
    for (k, &o) in order.iter().enumerate() {
        us.set_column(k, &u.column(o));
        vs.set_column(k, &vt.row(o).transpose());
    }
    SpectralEmbedding { singular_values: order.iter().map(|&o| svd.singular_values[o]).collect(), u: us, v: vs }
}

impl SpectralEmbedding {
    /// Smallest d whose share of squared singular values reaches `target`.
    pub fn auto_dim(&self, target: f64) -> usize {
        let total: f64 = self.singular_values.iter().map(|s| s * s).sum();
        if total <= 0.0 {
            return 1;
        }
        let mut acc = 0.0;
        for (k, s) in self.singular_values.iter().enumerate() {
            acc += s * s;
            if acc / total >= target - 1e-12 {
                return k + 1;
            }
        }
        self.singular_values.len()
    }

    pub fn explained(&self, d: usize) -> f64 {
        let total: f64 = self.singular_values.iter().map(|s| s * s).sum();
        if total <= 0.0 {
            return 0.0;
        }
        self.singular_values.iter().take(d).map(|s| s * s).sum::<f64>() / total
    }

    /// n x 2d matrix [U_d Σ_d^{1/2} | V_d Σ_d^{1/2}].
    pub fn embed(&self, d: usize) -> DMatrix<f64> {
        let n = self.u.nrows();
        let mut z = DMatrix::zeros(n, 2 * d);
        for k in 0..d {
            let s = self.singular_values[k].sqrt();
            for i in 0..n {
                z[(i, k)] = self.u[(i, k)] * s;
                z[(i, d + k)] = self.v[(i, k)] * s;
            }
        }
        z
    }

    /// U_d Σ_d V_dᵀ.
    pub fn reconstruct(&self, d: usize) -> DMatrix<f64> {
        let n = self.u.nrows();
        let mut m = DMatrix::zeros(n, self.v.nrows());
        for k in 0..d {
            m += self.singular_values[k] * self.u.column(k) * self.v.column(k).transpose();
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockClustering {
    /// Node indices of the clustered (sub)graph, in the original numbering.
    pub members: Vec<usize>,
    /// Block of each member; `None` for isolated nodes.
    pub assignment: Vec<Option<usize>>,
    pub k: usize,
    pub d: usize,
    pub explained_variance_ratio: f64,
    /// One entry per block; `None` when the block was not split further.
    pub children: Vec<Option<BlockClustering>>,
}

fn to_matrix(w: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = w.len();
    if w.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidArgument("adjacency must be square".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| w[i][j]))
}

/// Spectral blockmodel with `k` blocks and embedding dimension `dim`
/// (automatic when `None`). Nodes without in- or out-edges are left
/// unassigned; an all-zero graph is one block.
pub fn spectral_blockmodel(w: &[Vec<f64>], k: usize, dim: Option<usize>, seed: u64) -> Result<BlockClustering> {
    let members: Vec<usize> = (0..w.len()).collect();
    block_members(w, &members, k, dim, seed)
}

fn block_members(w: &[Vec<f64>], members: &[usize], k: usize, dim: Option<usize>, seed: u64) -> Result<BlockClustering> {
    let n = members.len();
    if k < 2 || k > n {
        return Err(Error::InvalidArgument(format!("K = {k} must lie in 2..={n}")));
    }
    let sub: Vec<Vec<f64>> = members.iter().map(|&i| members.iter().map(|&j| w[i][j]).collect()).collect();
    let m = to_matrix(&sub)?;
    let active: Vec<usize> =
        (0..n).filter(|&i| (0..n).any(|j| m[(i, j)] != 0.0 || m[(j, i)] != 0.0)).collect();
    if active.is_empty() {
        warn!("graph without edges: all {n} nodes form one block");
        return Ok(BlockClustering {
            members: members.to_vec(),
            assignment: vec![Some(0); n],
            k: 1,
            d: 0,
            explained_variance_ratio: 0.0,
            children: vec![None],
        });
    }
    let emb = svd_sorted(&m);
    let d = match dim {
        Some(d) if d == 0 || d > n => return Err(Error::InvalidArgument(format!("dimension {d} must lie in 1..={n}"))),
        Some(d) => d,
        None => emb.auto_dim(EXPLAINED_VARIANCE_TARGET),
    };
    let z = emb.embed(d);
    let points: Vec<Vec<f64>> = active.iter().map(|&i| z.row(i).iter().copied().collect()).collect();
    let k_eff = k.min(points.len());
    let km = kmeans(&points, k_eff, 20, seed)?;
    let mut assignment = vec![None; n];
    for (p, &i) in active.iter().enumerate() {
        assignment[i] = Some(km.assignment[p]);
    }
    Ok(BlockClustering {
        members: members.to_vec(),
        assignment,
        k: k_eff,
        d,
        explained_variance_ratio: emb.explained(d),
        children: vec![None; k_eff],
    })
}

/// Re-blocks the subgraph of every block with at least `min_size` members,
/// down to `max_depth` levels.
pub fn hierarchical_blockmodel(w: &[Vec<f64>], max_depth: usize, k: usize, min_size: usize, seed: u64) -> Result<BlockClustering> {
    let members: Vec<usize> = (0..w.len()).collect();
    recurse(w, &members, max_depth.max(1), k, min_size, seed)
}

fn recurse(w: &[Vec<f64>], members: &[usize], depth: usize, k: usize, min_size: usize, seed: u64) -> Result<BlockClustering> {
    let mut node = block_members(w, members, k, None, seed)?;
    if depth <= 1 || node.k < 2 {
        return Ok(node);
    }
    for b in 0..node.k {
        let inside: Vec<usize> =
            node.members.iter().zip(&node.assignment).filter(|(_, a)| **a == Some(b)).map(|(&m, _)| m).collect();
        if inside.len() >= min_size.max(k) {
            node.children[b] = Some(recurse(w, &inside, depth - 1, k, min_size, seed)?);
        }
    }
    Ok(node)
}

fn block_name(level: usize, b: usize) -> String {
    match level {
        0 => char::from(b'A' + (b % 26) as u8).to_string(),
        1 => (b + 1).to_string(),
        _ => format!(".{}", b + 1),
    }
}

impl BlockClustering {
    /// Leaf label per node of the original graph (`A1`, `A2`, `B` ...);
    /// `None` for unassigned nodes.
    pub fn leaf_labels(&self, n: usize) -> Vec<Option<String>> {
        let mut out = vec![None; n];
        self.fill_labels(String::new(), 0, &mut out);
        out
    }

    fn fill_labels(&self, prefix: String, level: usize, out: &mut [Option<String>]) {
        for (&m, a) in self.members.iter().zip(&self.assignment) {
            if let Some(b) = *a {
                out[m] = Some(format!("{prefix}{}", block_name(level, b)));
            }
        }
        for (b, child) in self.children.iter().enumerate() {
            if let Some(c) = child {
                c.fill_labels(format!("{prefix}{}", block_name(level, b)), level + 1, out);
            }
        }
    }

    /// Block ids at `level` (0 = top) for every node of the original graph.
    pub fn level_assignment(&self, n: usize, level: usize) -> Vec<Option<String>> {
        let mut out = vec![None; n];
        self.fill_level(String::new(), 0, level, &mut out);
        out
    }

    fn fill_level(&self, prefix: String, depth: usize, level: usize, out: &mut [Option<String>]) {
        for (&m, a) in self.members.iter().zip(&self.assignment) {
            if let Some(b) = *a {
                out[m] = Some(format!("{prefix}{}", block_name(depth, b)));
            }
        }
        if depth < level {
            for (b, child) in self.children.iter().enumerate() {
                if let Some(c) = child {
                    c.fill_level(format!("{prefix}{}", block_name(depth, b)), depth + 1, level, out);
                }
            }
        }
    }

    /// Indented block tree; unassigned nodes are listed under `NA`.
    pub fn to_text(&self, labels: &[String]) -> String {
        let mut out = String::new();
        self.write(String::new(), 0, labels, &mut out);
        let na: Vec<&str> = self
            .members
            .iter()
            .zip(&self.assignment)
            .filter(|(_, a)| a.is_none())
            .map(|(&m, _)| labels.get(m).map_or("?", String::as_str))
            .collect();
        if !na.is_empty() {
            let _ = writeln!(out, "NA: {}", na.join(", "));
        }
        out
    }

    fn write(&self, prefix: String, level: usize, labels: &[String], out: &mut String) {
        let pad = "  ".repeat(level);
        for b in 0..self.k {
            let name = format!("{prefix}{}", block_name(level, b));
            let names: Vec<&str> = self
                .members
                .iter()
                .zip(&self.assignment)
                .filter(|(_, a)| **a == Some(b))
                .map(|(&m, _)| labels.get(m).map_or("?", String::as_str))
                .collect();
            let _ = writeln!(out, "{pad}{name}: {}", names.join(", "));
            if let Some(Some(c)) = self.children.get(b) {
                c.write(name, level + 1, labels, out);
            }
        }
    }
}

/// Adjusted Rand index of two labelings (`None` entries are skipped
/// pairwise).
pub fn adjusted_rand_index<T: PartialEq + Clone>(a: &[T], b: &[T]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings differ in length");
    let ids = |x: &[T]| -> Vec<usize> {
        let mut seen: Vec<T> = Vec::new();
        x.iter()
            .map(|v| match seen.iter().position(|s| s == v) {
                Some(p) => p,
                None => {
                    seen.push(v.clone());
                    seen.len() - 1
                }
            })
            .collect()
    };
    let (ia, ib) = (ids(a), ids(b));
    let (ka, kb) = (ia.iter().max().map_or(0, |m| m + 1), ib.iter().max().map_or(0, |m| m + 1));
    let mut table = vec![vec![0.0f64; kb]; ka];
    for (&x, &y) in ia.iter().zip(&ib) {
        table[x][y] += 1.0;
    }
    let c2 = |x: f64| x * (x - 1.0) / 2.0;
    let index: f64 = table.iter().flatten().map(|&v| c2(v)).sum();
    let rows: f64 = table.iter().map(|r| c2(r.iter().sum())).sum();
    let cols: f64 = (0..kb).map(|j| c2(table.iter().map(|r| r[j]).sum())).sum();
    let total = c2(a.len() as f64);
    let expected = rows * cols / total;
    let max = 0.5 * (rows + cols);
    if (max - expected).abs() < 1e-12 {
        return 1.0;
    }
    (index - expected) / (max - expected)
}
