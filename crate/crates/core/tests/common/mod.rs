//! Independent reference computations shared by the integration tests.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
}

/// Ordinary least squares through the normal equations XᵀXθ = Xᵀy.
pub fn normal_equations(rows: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let x = to_matrix(rows);
    let yv = DVector::from_column_slice(y);
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * yv;
    xtx.cholesky().map(|c| c.solve(&xty).iter().copied().collect())
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Unpenalized logistic regression by Newton's method; `None` when it does
/// not converge (separable data).
pub fn newton_logistic(rows: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let x = to_matrix(rows);
    let n = x.ncols();
    let mut theta = DVector::zeros(n);
    for _ in 0..100 {
        let eta = &x * &theta;
        let p: Vec<f64> = eta.iter().map(|&e| sigmoid(e)).collect();
        let grad = x.transpose() * DVector::from_iterator(y.len(), p.iter().zip(y).map(|(p, y)| p - y));
        let mut h = DMatrix::zeros(n, n);
        for (i, pi) in p.iter().enumerate() {
            let r = x.row(i);
            h += pi * (1.0 - pi) * r.transpose() * r;
        }
        let step = h.cholesky()?.solve(&grad);
        theta -= &step;
        if step.amax() < 1e-13 {
            return Some(theta.iter().copied().collect());
        }
    }
    None
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
