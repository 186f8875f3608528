//! Agglomerative clustering on a precomputed distance matrix.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linkage {
    #[default]
    Average,
    Complete,
    Single,
}

/// One merge. Leaves are 0..n; the cluster created by merge k is n + k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub n: usize,
    pub linkage: Linkage,
    pub merges: Vec<Merge>,
}

/// Merges the closest pair of clusters until one remains. Ties go to the
/// pair with the smallest cluster ids.
pub fn hierarchical_cluster(dist: &[Vec<f64>], linkage: Linkage) -> Result<Dendrogram> {
    let n = dist.len();
    for (i, row) in dist.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidArgument("distance matrix must be square".into()));
        }
        for (j, &v) in row.iter().enumerate() {
            if !(v >= 0.0) || (v - dist[j][i]).abs() > 1e-12 * v.abs().max(1.0) {
                return Err(Error::InvalidArgument(format!("distance ({i}, {j}) is negative or asymmetric")));
            }
        }
    }
    // active clusters: (id, size); d[a][b] between active slots
    let mut ids: Vec<usize> = (0..n).collect();
    let mut sizes = vec![1usize; n];
    let mut d: Vec<Vec<f64>> = dist.to_vec();
    let mut alive = vec![true; n];
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for step in 0..n.saturating_sub(1) {
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..n {
            if !alive[a] {
                continue;
            }
            for b in a + 1..n {
                if !alive[b] {
                    continue;
                }
                let v = d[a][b];
                let better = match best {
                    None => true,
                    Some((ba, bb, bv)) => {
                        v < bv || (v == bv && (ids[a].min(ids[b]), ids[a].max(ids[b])) < (ids[ba].min(ids[bb]), ids[ba].max(ids[bb])))
                    }
                };
                if better {
                    best = Some((a, b, v));
                }
            }
        }
        let (a, b, h) = best.expect("two clusters remain");
        let (sa, sb) = (sizes[a] as f64, sizes[b] as f64);
        for c in 0..n {
            if alive[c] && c != a && c != b {
                let v = match linkage {
                    Linkage::Average => (sa * d[a][c] + sb * d[b][c]) / (sa + sb),
                    Linkage::Complete => d[a][c].max(d[b][c]),
                    Linkage::Single => d[a][c].min(d[b][c]),
                };
                d[a][c] = v;
                d[c][a] = v;
            }
        }
        let (l, r) = (ids[a].min(ids[b]), ids[a].max(ids[b]));
        sizes[a] += sizes[b];
        alive[b] = false;
        ids[a] = n + step;
        merges.push(Merge { left: l, right: r, height: h, size: sizes[a] });
    }
    Ok(Dendrogram { n, linkage, merges })
}

impl Dendrogram {
    /// Flat labels from stopping with `k` clusters, numbered by first leaf.
    pub fn cut(&self, k: usize) -> Vec<usize> {
        let k = k.clamp(1, self.n.max(1));
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut Vec<usize>, x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        // map cluster id -> representative leaf
        let mut rep: Vec<usize> = (0..self.n).collect();
        for m in self.merges.iter().take(self.n - k) {
            let (ra, rb) = (find(&mut parent, rep[m.left]), find(&mut parent, rep[m.right]));
            parent[rb] = ra;
            rep.push(ra);
        }
        let mut label = vec![usize::MAX; self.n];
        let mut next = 0;
        let mut out = vec![0; self.n];
        for leaf in 0..self.n {
            let r = find(&mut parent, leaf);
            if label[r] == usize::MAX {
                label[r] = next;
                next += 1;
            }
            out[leaf] = label[r];
        }
        out
    }

    /// Indented text tree with merge heights.
    pub fn to_text(&self, labels: &[String]) -> String {
        let mut out = String::new();
        if self.n == 0 {
            return out;
        }
        let root = if self.merges.is_empty() { 0 } else { self.n + self.merges.len() - 1 };
        self.write_node(root, 0, labels, &mut out);
        out
    }

    fn write_node(&self, id: usize, depth: usize, labels: &[String], out: &mut String) {
        let pad = "  ".repeat(depth);
        if id < self.n {
            let name = labels.get(id).cloned().unwrap_or_else(|| id.to_string());
            let _ = writeln!(out, "{pad}{name}");
        } else {
            let m = &self.merges[id - self.n];
            let _ = writeln!(out, "{pad}+ {:.6} ({})", m.height, m.size);
            self.write_node(m.left, depth + 1, labels, out);
            self.write_node(m.right, depth + 1, labels, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_points() {
        let d = hierarchical_cluster(&[vec![0.0, 3.0], vec![3.0, 0.0]], Linkage::Average).unwrap();
        assert_eq!(d.merges, vec![Merge { left: 0, right: 1, height: 3.0, size: 2 }]);
    }

    #[test]
    fn nearest_pair_first() {
        let dist = vec![vec![0.0, 1.0, 100.0], vec![1.0, 0.0, 100.0], vec![100.0, 100.0, 0.0]];
        let d = hierarchical_cluster(&dist, Linkage::Average).unwrap();
        assert_eq!((d.merges[0].left, d.merges[0].right), (0, 1));
        assert_eq!(d.cut(2), vec![0, 0, 1]);
        assert!(d.to_text(&["a".into(), "b".into(), "c".into()]).contains("  c"));
    }

    /// Recomputes cluster distances from the point pairs at every step.
    fn naive_heights(dist: &[Vec<f64>], linkage: Linkage) -> Vec<f64> {
        let mut clusters: Vec<Vec<usize>> = (0..dist.len()).map(|i| vec![i]).collect();
        let mut heights = Vec::new();
        while clusters.len() > 1 {
            let mut best = (0, 1, f64::INFINITY);
            for a in 0..clusters.len() {
                for b in a + 1..clusters.len() {
                    let pairs: Vec<f64> =
                        clusters[a].iter().flat_map(|&i| clusters[b].iter().map(move |&j| dist[i][j])).collect();
                    let v = match linkage {
                        Linkage::Average => pairs.iter().sum::<f64>() / pairs.len() as f64,
                        Linkage::Complete => pairs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                        Linkage::Single => pairs.iter().copied().fold(f64::INFINITY, f64::min),
                    };
                    if v < best.2 {
                        best = (a, b, v);
                    }
                }
            }
            let merged = clusters.remove(best.1);
            clusters[best.0].extend(merged);
            heights.push(best.2);
        }
        heights
    }

    #[test]
    fn ten_point_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<(f64, f64)> = (0..10).map(|_| (rng.gen(), rng.gen())).collect();
        let dist: Vec<Vec<f64>> =
            pts.iter().map(|a| pts.iter().map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()).collect()).collect();
        for linkage in [Linkage::Average, Linkage::Complete, Linkage::Single] {
            let d = hierarchical_cluster(&dist, linkage).unwrap();
            let ours: Vec<f64> = d.merges.iter().map(|m| m.height).collect();
            for (a, b) in ours.iter().zip(naive_heights(&dist, linkage)) {
                assert!((a - b).abs() < 1e-12, "{linkage:?}");
            }
        }
    }

    #[test]
    fn far_constant_does_not_change_topology() {
        use crate::graph::correlation::correlation_to_distance;
        let corr = vec![
            vec![1.0, 0.8, -0.1, 0.05],
            vec![0.8, 1.0, 0.0, 0.1],
            vec![-0.1, 0.0, 1.0, 0.6],
            vec![0.05, 0.1, 0.6, 1.0],
        ];
        let a = hierarchical_cluster(&correlation_to_distance(&corr, 1e3), Linkage::Average).unwrap();
        let b = hierarchical_cluster(&correlation_to_distance(&corr, 1e6), Linkage::Average).unwrap();
        let topo = |d: &Dendrogram| d.merges.iter().map(|m| (m.left, m.right)).collect::<Vec<_>>();
        assert_eq!(topo(&a), topo(&b));
    }

    #[test]
    fn rejects_asymmetric() {
        assert!(hierarchical_cluster(&[vec![0.0, 1.0], vec![2.0, 0.0]], Linkage::Single).is_err());
    }
}
