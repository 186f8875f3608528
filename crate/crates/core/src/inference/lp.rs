//! Dense two-phase simplex for max cᵀθ s.t. Aθ ≤ b with θ free.
//!
//! The problem is solved through its dual, min bᵀu s.t. Aᵀu = c, u ≥ 0,
//! whose tableau has only dim(θ) rows. The primal solution is read off the
//! simplex multipliers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub theta: Vec<f64>,
    pub objective: f64,
    /// |cᵀθ − bᵀu| for the recovered primal and dual points.
    pub duality_gap: f64,
    /// max(Aθ − b, 0).
    pub primal_violation: f64,
    pub pivots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
}

const EPS: f64 = 1e-10;

struct Tableau {
    rows: usize,
    width: usize,
    // rows x (width + 1), last column is the right-hand side
    t: Vec<f64>,
    obj: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * (self.width + 1) + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width + 1;
        let p = self.t[r * w + c];
        for j in 0..w {
            self.t[r * w + j] /= p;
        }
        let prow: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.t[i * w + c];
            if f != 0.0 {
                for j in 0..w {
                    self.t[i * w + j] -= f * prow[j];
                }
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for j in 0..w {
                self.obj[j] -= f * prow[j];
            }
        }
        self.basis[r] = c;
    }

    fn set_objective(&mut self, cost: &[f64]) {
        let w = self.width + 1;
        self.obj = cost.to_vec();
        self.obj.push(0.0);
        for i in 0..self.rows {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for j in 0..w {
                    self.obj[j] -= cb * self.t[i * w + j];
                }
            }
        }
    }

    /// Minimizes the current objective over columns `< allowed`. Returns
    /// false when unbounded.
    fn run(&mut self, allowed: usize, pivots: &mut usize) -> bool {
        let mut stall = 0usize;
        loop {
            let bland = stall > 50;
            let mut enter = None;
            let mut best = -EPS;
            for j in 0..allowed {
                let d = self.obj[j];
                if d < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(c) = enter else { return true };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, c);
                if a > EPS {
                    let ratio = self.rhs(i) / a;
                    let better = match leave {
                        None => true,
                        Some((l, r)) => ratio < r - 1e-12 || (ratio <= r + 1e-12 && self.basis[i] < self.basis[l]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else { return false };
            stall = if ratio <= 1e-12 { stall + 1 } else { 0 };
            self.pivot(r, c);
            *pivots += 1;
            if *pivots > 50_000 {
                return true;
            }
        }
    }
}

/// Maximizes cᵀθ subject to Aθ ≤ b (rows of `a`), θ free.
pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpOutcome> {
    let n = c.len();
    let m = a.len();
    if b.len() != m || a.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidArgument("constraint shapes do not match".into()));
    }
    let width = m + n;
    let mut flip = vec![1.0; n];
    let mut t = vec![0.0; n * (width + 1)];
    for i in 0..n {
        if c[i] < 0.0 {
            flip[i] = -1.0;
        }
        for (j, row) in a.iter().enumerate() {
            t[i * (width + 1) + j] = flip[i] * row[i];
        }
        t[i * (width + 1) + m + i] = 1.0;
        t[i * (width + 1) + width] = flip[i] * c[i];
    }
    let mut tab = Tableau { rows: n, width, t, obj: Vec::new(), basis: (m..m + n).collect() };
    let mut pivots = 0;

    let mut phase1 = vec![0.0; width];
    phase1[m..].iter_mut().for_each(|v| *v = 1.0);
    tab.set_objective(&phase1);
    tab.run(width, &mut pivots);
    let infeas = -tab.obj[width];
    let scale = 1.0 + c.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if infeas > 1e-9 * scale {
        return Ok(LpOutcome::Infeasible);
    }
    for i in 0..n {
        if tab.basis[i] >= m {
            if let Some(j) = (0..m).find(|&j| tab.at(i, j).abs() > 1e-9) {
                tab.pivot(i, j);
            }
        }
    }

    let mut phase2 = b.to_vec();
    phase2.extend(std::iter::repeat_n(0.0, n));
    tab.set_objective(&phase2);
    if !tab.run(m, &mut pivots) {
        return Ok(LpOutcome::Infeasible);
    }

    let theta: Vec<f64> = (0..n).map(|k| -tab.obj[m + k] * flip[k]).collect();
    let mut u = vec![0.0; m];
    for i in 0..n {
        if tab.basis[i] < m {
            u[tab.basis[i]] = tab.rhs(i);
        }
    }
    let primal: f64 = c.iter().zip(&theta).map(|(x, y)| x * y).sum();
    let dual: f64 = b.iter().zip(&u).map(|(x, y)| x * y).sum();
    let violation = a
        .iter()
        .zip(b)
        .map(|(row, bi)| row.iter().zip(&theta).map(|(x, y)| x * y).sum::<f64>() - bi)
        .fold(0.0, f64::max);
    Ok(LpOutcome::Optimal(LpSolution {
        objective: primal,
        duality_gap: (primal - dual).abs(),
        primal_violation: violation,
        theta,
        pivots,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn optimal(o: LpOutcome) -> LpSolution {
        match o {
            LpOutcome::Optimal(s) => s,
            LpOutcome::Infeasible => panic!("unexpectedly infeasible"),
        }
    }

    #[test]
    fn unit_box() {
        let a = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0], vec![1.0, 1.0]];
        let b = vec![1.0, 1.0, 1.0, 1.0, 1.5];
        let s = optimal(maximize(&[1.0, 2.0], &a, &b).unwrap());
        assert!((s.objective - 2.5).abs() < 1e-12);
        assert!((s.theta[0] - 0.5).abs() < 1e-12 && (s.theta[1] - 1.0).abs() < 1e-12);
        assert!(s.duality_gap < 1e-12);
    }

    #[test]
    fn infeasible_detected() {
        let a = vec![vec![1.0], vec![-1.0], vec![1.0], vec![-1.0]];
        let b = vec![1.0, 1.0, -2.0, 3.0];
        assert_eq!(maximize(&[1.0], &a, &b).unwrap(), LpOutcome::Infeasible);
    }

    /// Brute-force optimum over all 2-constraint vertices.
    fn vertex_enumeration(c: [f64; 2], a: &[Vec<f64>], b: &[f64]) -> Option<f64> {
        let mut best: Option<f64> = None;
        for i in 0..a.len() {
            for j in i + 1..a.len() {
                let det = a[i][0] * a[j][1] - a[i][1] * a[j][0];
                if det.abs() < 1e-12 {
                    continue;
                }
                let x = (b[i] * a[j][1] - a[i][1] * b[j]) / det;
                let y = (a[i][0] * b[j] - b[i] * a[j][0]) / det;
                if a.iter().zip(b).all(|(r, bk)| r[0] * x + r[1] * y <= bk + 1e-9) {
                    let v = c[0] * x + c[1] * y;
                    best = Some(best.map_or(v, |b: f64| b.max(v)));
                }
            }
        }
        best
    }

    proptest! {
        #[test]
        fn matches_vertex_enumeration(
            rows in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0, -1.0f64..2.0), 1..6),
            c0 in -1.0f64..1.0, c1 in -1.0f64..1.0,
        ) {
            let mut a: Vec<Vec<f64>> = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]];
            let mut b = vec![5.0; 4];
            for (p, q, r) in rows {
                a.push(vec![p, q]);
                b.push(r);
            }
            let out = maximize(&[c0, c1], &a, &b).unwrap();
            match (out, vertex_enumeration([c0, c1], &a, &b)) {
                (LpOutcome::Optimal(s), Some(v)) => {
                    prop_assert!((s.objective - v).abs() < 1e-7, "{} vs {v}", s.objective);
                    prop_assert!(s.duality_gap < 1e-7);
                    prop_assert!(s.primal_violation < 1e-7);
                }
                (LpOutcome::Infeasible, None) => {}
                (o, v) => prop_assert!(false, "mismatch {o:?} vs {v:?}"),
            }
        }
    }
}
