//! Feasible parameter sets and Euclidean projection onto them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DesignMatrix, LinkFunction, LinkKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeasibleKind {
    LinearLinkPolytope,
    SigmoidBoxPolytope,
}

/// {θ : lower ≤ wᵀθ ≤ upper for every design row} ∩ {‖θ‖∞ ≤ theta_max}.
#[derive(Debug, Clone)]
pub struct FeasibleSet {
    pub kind: FeasibleKind,
    pub lower: f64,
    pub upper: f64,
    pub theta_max: f64,
    n: usize,
    rows: Vec<f64>,
    sq_norms: Vec<f64>,
}

pub const DEFAULT_THETA_MAX: f64 = 100.0;
const DYKSTRA_CYCLES: usize = 500;

impl FeasibleSet {
    pub fn for_design(design: &DesignMatrix, link: &LinkFunction, theta_max: f64) -> Result<Self> {
        let (lower, upper) = link.domain();
        let kind = match link.kind {
            LinkKind::Linear => FeasibleKind::LinearLinkPolytope,
            LinkKind::Sigmoid => FeasibleKind::SigmoidBoxPolytope,
        };
        let n = design.dim();
        let rows: Vec<f64> = (0..design.n_unique()).flat_map(|u| design.row(u).to_vec()).collect();
        Self::from_parts(kind, lower, upper, theta_max, n, rows)
    }

    pub(crate) fn from_parts(
        kind: FeasibleKind,
        lower: f64,
        upper: f64,
        theta_max: f64,
        n: usize,
        rows: Vec<f64>,
    ) -> Result<Self> {
        if !(lower <= upper) || !(theta_max > 0.0) {
            return Err(Error::Infeasible("empty predictor range or box".into()));
        }
        let sq_norms: Vec<f64> = rows.chunks(n).map(|w| w.iter().map(|v| v * v).sum()).collect();
        let set = Self { kind, lower, upper, theta_max, n, rows, sq_norms };
        let x0 = set.interior_point();
        if !set.contains(&x0, 1e-12) {
            return Err(Error::Infeasible("no interior point found".into()));
        }
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn n_rows(&self) -> usize {
        self.sq_norms.len()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.rows[k * self.n..(k + 1) * self.n]
    }

    /// Constant-only point with predictor at the middle of the range. Every
    /// design row starts with 1, so this is feasible.
    pub fn interior_point(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        x[0] = (0.5 * (self.lower + self.upper)).clamp(-self.theta_max, self.theta_max);
        x
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.max_violation(x) <= tol
    }

    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut v = x.iter().fold(0.0f64, |m, xi| m.max(xi.abs() - self.theta_max));
        for k in 0..self.n_rows() {
            let eta = dot(self.row(k), x);
            v = v.max(self.lower - eta).max(eta - self.upper);
        }
        v
    }

    /// Euclidean projection by Dykstra's alternating projections over the
    /// box and the slabs that are violated or nearly active. Slabs that turn
    /// out violated at the result are added and the projection rerun.
    pub fn project(&self, z: &[f64]) -> Vec<f64> {
        let tol = 1e-12 * (1.0 + self.upper.abs().max(self.lower.abs()));
        if self.contains(z, tol) {
            return z.to_vec();
        }
        let band = 1e-3 * (self.upper - self.lower).max(1e-9);
        let mut active: Vec<usize> = (0..self.n_rows())
            .filter(|&k| {
                let eta = dot(self.row(k), z);
                eta < self.lower + band || eta > self.upper - band
            })
            .collect();
        let mut in_active = vec![false; self.n_rows()];
        for &k in &active {
            in_active[k] = true;
        }
        let mut x = z.to_vec();
        for _ in 0..20 {
            x = self.dykstra(z, &active);
            if let Some(exact) = self.refine(z, &x) {
                x = exact;
            }
            let mut added = false;
            for k in 0..self.n_rows() {
                let eta = dot(self.row(k), &x);
                if (eta < self.lower - tol || eta > self.upper + tol) && !in_active[k] {
                    in_active[k] = true;
                    active.push(k);
                    added = true;
                }
            }
            if !added {
                break;
            }
        }
        x
    }

    /// Constraint `c` as (a, b) meaning aᵀx ≤ b. Rows give 2 constraints
    /// each, then the box gives 2 per coordinate.
    fn constraint(&self, c: usize) -> (Vec<f64>, f64) {
        let rows = self.n_rows();
        if c < 2 * rows {
            let w = self.row(c / 2);
            if c.is_multiple_of(2) {
                (w.to_vec(), self.upper)
            } else {
                (w.iter().map(|v| -v).collect(), -self.lower)
            }
        } else {
            let i = (c - 2 * rows) / 2;
            let mut a = vec![0.0; self.n];
            a[i] = if c.is_multiple_of(2) { 1.0 } else { -1.0 };
            (a, self.theta_max)
        }
    }

    /// Exact projection by an active-set loop seeded with the constraints
    /// nearly active at `guess`. Returns `None` if KKT is not reached.
    fn refine(&self, z: &[f64], guess: &[f64]) -> Option<Vec<f64>> {
        let n_con = 2 * (self.n_rows() + self.n);
        let scale = 1.0 + self.upper.abs().max(self.lower.abs()).max(self.theta_max);
        let slack = |c: usize, x: &[f64]| {
            let (a, b) = self.constraint(c);
            b - dot(&a, x)
        };
        let mut set: Vec<usize> = (0..n_con).filter(|&c| slack(c, guess) <= 1e-6 * scale).collect();
        for _ in 0..4 * self.n + 20 {
            let (x, lambda) = self.equality_projection(z, &set)?;
            if let Some((pos, _)) = lambda
                .iter()
                .enumerate()
                .filter(|(_, &l)| l < -1e-12)
                .min_by(|a, b| a.1.total_cmp(b.1))
            {
                set.remove(pos);
                continue;
            }
            let worst = (0..n_con)
                .filter(|c| !set.contains(c))
                .map(|c| (c, slack(c, &x)))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match worst {
                Some((c, s)) if s < -1e-12 * scale => set.push(c),
                _ => return Some(x),
            }
        }
        None
    }

    /// Projection of `z` onto {aᵀx = b for the constraints in `set`} and the
    /// multipliers, via the (pseudo-inverse of the) active Gram matrix.
    fn equality_projection(&self, z: &[f64], set: &[usize]) -> Option<(Vec<f64>, Vec<f64>)> {
        if set.is_empty() {
            return Some((z.to_vec(), Vec::new()));
        }
        let m = set.len();
        let cons: Vec<(Vec<f64>, f64)> = set.iter().map(|&c| self.constraint(c)).collect();
        let a = nalgebra::DMatrix::from_fn(m, self.n, |r, c| cons[r].0[c]);
        let rhs = nalgebra::DVector::from_fn(m, |r, _| dot(&cons[r].0, z) - cons[r].1);
        let gram = &a * a.transpose();
        let lambda = gram.svd(true, true).solve(&rhs, 1e-12).ok()?;
        let shift = a.transpose() * &lambda;
        let x: Vec<f64> = z.iter().zip(shift.iter()).map(|(zi, si)| zi - si).collect();
        Some((x, lambda.iter().copied().collect()))
    }

    fn dykstra(&self, z: &[f64], active: &[usize]) -> Vec<f64> {
        let n = self.n;
        let mut x = z.to_vec();
        let mut p_box = vec![0.0; n];
        let mut p = vec![vec![0.0; n]; active.len()];
        let mut y = vec![0.0; n];
        for _ in 0..DYKSTRA_CYCLES {
            let start = x.clone();
            for (slot, &k) in active.iter().enumerate() {
                let w = self.row(k);
                for i in 0..n {
                    y[i] = x[i] + p[slot][i];
                }
                let eta = dot(w, &y);
                let shift = if eta < self.lower {
                    (self.lower - eta) / self.sq_norms[k]
                } else if eta > self.upper {
                    (self.upper - eta) / self.sq_norms[k]
                } else {
                    0.0
                };
                for i in 0..n {
                    x[i] = y[i] + shift * w[i];
                    p[slot][i] = y[i] - x[i];
                }
            }
            for i in 0..n {
                y[i] = x[i] + p_box[i];
                x[i] = y[i].clamp(-self.theta_max, self.theta_max);
                p_box[i] = y[i] - x[i];
            }
            let moved: f64 = x.iter().zip(&start).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if moved <= 1e-15 * (1.0 + norm(&x)) {
                break;
            }
        }
        x
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(rows: &[[f64; 2]]) -> FeasibleSet {
        let flat = rows.iter().flatten().copied().collect();
        FeasibleSet::from_parts(FeasibleKind::LinearLinkPolytope, 0.0, 1.0, 100.0, 2, flat).unwrap()
    }

    #[test]
    fn feasible_points_unchanged() {
        let s = set(&[[1.0, 0.0], [1.0, 1.0]]);
        assert_eq!(s.project(&[0.2, 0.3]), vec![0.2, 0.3]);
    }

    #[test]
    fn projection_onto_single_slab() {
        let s = set(&[[1.0, 1.0]]);
        let x = s.project(&[1.0, 1.0]);
        assert!((x[0] - 0.5).abs() < 1e-12 && (x[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn projection_onto_corner() {
        // wᵀθ ≤ 1 for w = (1,0) and (1,1): point (2, 1) projects to (1, 0)
        let s = set(&[[1.0, 0.0], [1.0, 1.0]]);
        let x = s.project(&[2.0, 1.0]);
        assert!((x[0] - 1.0).abs() < 1e-9 && x[1].abs() < 1e-9, "{x:?}");
    }

    proptest! {
        #[test]
        fn projection_is_feasible_and_optimal(a in -3.0f64..3.0, b in -3.0f64..3.0, c in 0.0f64..1.0) {
            let s = set(&[[1.0, 0.0], [1.0, 1.0], [1.0, c]]);
            let z = [a, b];
            let x = s.project(&z);
            prop_assert!(s.max_violation(&x) < 1e-8);
            // variational characterization: (z - x)ᵀ(v - x) ≤ 0 for feasible v
            for v in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.5, -0.5], [1.0, -1.0], [0.2, 0.1]] {
                if s.contains(&v, 0.0) {
                    let ip = (z[0] - x[0]) * (v[0] - x[0]) + (z[1] - x[1]) * (v[1] - x[1]);
                    prop_assert!(ip <= 1e-7, "ip {ip}");
                }
            }
        }
    }
}
