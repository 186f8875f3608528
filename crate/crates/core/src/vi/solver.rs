use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::feasible::{norm, FeasibleSet, DEFAULT_THETA_MAX};
use super::field::field;
use crate::error::{Error, Result};
use crate::model::{build_design_multi, DesignMatrix, Feature, LinkFunction, ThetaVector};
use crate::panel::PatientPanel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Natural-residual tolerance.
    pub tol: f64,
    pub max_iter: usize,
    pub theta_max: f64,
    /// Emit one diagnostic record every `log_every` iterations.
    pub verbose: bool,
    pub log_every: usize,
    /// Starting point; the feasible set's interior point when absent.
    #[serde(default)]
    pub initial: Option<Vec<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 20_000, theta_max: DEFAULT_THETA_MAX, verbose: false, log_every: 100, initial: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VIResult {
    pub theta_hat: ThetaVector,
    /// ‖θ − P(θ − γF(θ))‖ at the base step γ = 0.9 / (M_g λmax).
    pub residual: f64,
    pub iterations: usize,
    pub field_norm: f64,
    pub lambda1: f64,
    pub converged: bool,
}

fn check_options(opts: &SolverOptions, feasible: &FeasibleSet, design: &DesignMatrix) -> Result<Vec<f64>> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if feasible.dim() != design.dim() {
        return Err(Error::InvalidArgument("feasible set and design differ in dimension".into()));
    }
    match &opts.initial {
        Some(x) if x.len() != design.dim() => Err(Error::InvalidArgument("initial point has wrong length".into())),
        Some(x) => Ok(feasible.project(x)),
        None => Ok(feasible.interior_point()),
    }
}

fn natural_residual(x: &[f64], f: &[f64], step: f64, feasible: &FeasibleSet) -> f64 {
    let z: Vec<f64> = x.iter().zip(f).map(|(xi, fi)| xi - step * fi).collect();
    let p = feasible.project(&z);
    x.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

fn finish(design: &DesignMatrix, x: Vec<f64>, f: &[f64], residual: f64, iterations: usize, tol: f64) -> Result<VIResult> {
    Ok(VIResult {
        theta_hat: ThetaVector::from_flat(design.layout().clone(), &x)?,
        residual,
        iterations,
        field_norm: norm(f),
        lambda1: design.lambda1(),
        converged: residual <= tol,
    })
}

/// Solves VI[F, Θ] by extragradient with projection onto Θ.
///
/// The step starts at 0.9 / (M_g λmax) and is adapted upward while the
/// local condition γ‖F(x) − F(x̄)‖ ≤ 0.9‖x − x̄‖ holds, never dropping below
/// the starting value. Stops when the natural residual is at most `tol`.
pub fn solve_vi(design: &DesignMatrix, link: &LinkFunction, feasible: &FeasibleSet, opts: &SolverOptions) -> Result<VIResult> {
    let mut x = check_options(opts, feasible, design)?;
    let base = 0.9 / (link.upper_derivative() * design.lambda_max());
    let mut step = base;
    let n = x.len();
    let mut z = vec![0.0; n];
    let mut best: Option<(f64, Vec<f64>)> = None;
    for it in 0..opts.max_iter {
        let fx = field(design, &x, link);
        let (fbar, r) = loop {
            for i in 0..n {
                z[i] = x[i] - step * fx[i];
            }
            let xbar = feasible.project(&z);
            let fbar = field(design, &xbar, link);
            let dx = x.iter().zip(&xbar).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let df = fx.iter().zip(&fbar).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if step <= base || step * df <= 0.9 * dx {
                break (fbar, dx);
            }
            step = (0.5 * step).max(base);
        };
        if opts.verbose && it % opts.log_every.max(1) == 0 {
            info!(target: "vi", "iter={it} residual={r:.6e} field_norm={:.6e} step={step:.4e}", norm(&fx));
        }
        if r <= opts.tol {
            let res = natural_residual(&x, &fx, base, feasible);
            if opts.verbose {
                info!(target: "vi", "iter={it} residual={res:.6e} field_norm={:.6e} converged", norm(&fx));
            }
            return finish(design, x, &fx, res, it, opts.tol);
        }
        if best.as_ref().is_none_or(|(b, _)| r < *b) {
            best = Some((r, x.clone()));
        }
        for i in 0..n {
            z[i] = x[i] - step * fbar[i];
        }
        x = feasible.project(&z);
        step = (step * 1.5).min(1e4 * base);
    }
    let x = best.map_or(x, |(_, b)| b);
    let fx = field(design, &x, link);
    let res = natural_residual(&x, &fx, base, feasible);
    if opts.verbose {
        info!(target: "vi", "iter={} residual={res:.6e} field_norm={:.6e} not converged", opts.max_iter, norm(&fx));
    }
    finish(design, x, &fx, res, opts.max_iter, opts.tol)
}

/// Builds the feasible set for `design` and solves.
pub fn fit_node(design: &DesignMatrix, link: &LinkFunction, opts: &SolverOptions) -> Result<VIResult> {
    let feasible = FeasibleSet::for_design(design, link, opts.theta_max)?;
    solve_vi(design, link, &feasible, opts)
}

/// Fits every node independently over the pooled panels.
pub fn fit_network(
    panels: &[PatientPanel],
    link: &LinkFunction,
    d: usize,
    features: Option<&[Feature]>,
    opts: &SolverOptions,
) -> Result<Vec<VIResult>> {
    let n1 = panels.first().map_or(0, PatientPanel::n_nodes);
    (0..n1)
        .into_par_iter()
        .map(|i| {
            let design = build_design_multi(panels, i, d, features)?;
            fit_node(&design, link, opts)
        })
        .collect()
}

/// Constrained least squares (1/2T) Σ (y − wᵀθ)² over Θ by projected
/// gradient on the Gram form. Kept as an independent oracle for the
/// linear-link VI solution.
pub fn fit_lse_linear(design: &DesignMatrix, feasible: &FeasibleSet, opts: &SolverOptions) -> Result<VIResult> {
    let mut x = check_options(opts, feasible, design)?;
    let gram = design.gram();
    let a = design.response_moment();
    let step = 0.9 / design.lambda_max();
    let grad = |x: &[f64]| -> Vec<f64> {
        let v = gram * nalgebra::DVector::from_column_slice(x);
        v.iter().zip(&a).map(|(g, ai)| g - ai).collect()
    };
    for it in 0..opts.max_iter {
        let g = grad(&x);
        let z: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - step * gi).collect();
        let next = feasible.project(&z);
        let r = x.iter().zip(&next).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        if r <= opts.tol {
            return finish(design, x, &g, r, it, opts.tol);
        }
        x = next;
    }
    let g = grad(&x);
    let r = natural_residual(&x, &g, step, feasible);
    finish(design, x, &g, r, opts.max_iter, opts.tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vi::field::least_squares_objective;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};

    fn random_rows(seed: u64, t: usize, n: usize, p: f64) -> DesignMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..t)
            .map(|_| {
                let mut r = vec![1.0];
                r.extend((1..n).map(|_| f64::from(u8::from(rng.gen_bool(0.5)))));
                r
            })
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| f64::from(u8::from(rng.gen_bool(p + 0.1 * r[1..].iter().sum::<f64>() / n as f64))))
            .collect();
        DesignMatrix::from_rows(&rows, &y).unwrap()
    }

    fn normal_equations(dm: &DesignMatrix) -> Vec<f64> {
        let g: DMatrix<f64> = dm.gram().clone();
        let a = DVector::from_vec(dm.response_moment());
        g.lu().solve(&a).unwrap().iter().copied().collect()
    }

    fn opts(tol: f64) -> SolverOptions {
        SolverOptions { tol, max_iter: 200_000, ..Default::default() }
    }

    #[test]
    fn linear_interior_matches_normal_equations() {
        let dm = random_rows(1, 400, 3, 0.3);
        let ls = normal_equations(&dm);
        let fs = FeasibleSet::for_design(&dm, &LinkFunction::linear(), 100.0).unwrap();
        assert!(fs.contains(&ls, 0.0), "oracle solution should be interior");
        let r = solve_vi(&dm, &LinkFunction::linear(), &fs, &opts(1e-10)).unwrap();
        assert!(r.converged);
        let th = r.theta_hat.flatten();
        for k in 0..3 {
            assert!((th[k] - ls[k]).abs() < 1e-6, "{th:?} vs {ls:?}");
        }
        let l = fit_lse_linear(&dm, &fs, &opts(1e-12)).unwrap();
        for (p, q) in l.theta_hat.flatten().iter().zip(&ls) {
            assert!((p - q).abs() < 1e-8);
        }
    }

    #[test]
    fn sigmoid_solution_zeroes_field() {
        let dm = random_rows(2, 500, 3, 0.3);
        let link = LinkFunction::sigmoid(10.0);
        let r = fit_node(&dm, &link, &opts(1e-9)).unwrap();
        assert!(r.converged);
        assert!(r.field_norm < 1e-7, "field norm {}", r.field_norm);
    }

    #[test]
    fn binding_constraint_kkt() {
        // rows (1,0),(1,1),(1,2), y = 0,1,1: least squares predicts 7/6 at the
        // third row, so θ0 + 2θ1 ≤ 1 binds. Solving by hand on that face gives
        // θ = (0.2, 0.4) with multiplier 1/15.
        let rows = vec![vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 2.0]];
        let dm = DesignMatrix::from_rows(&rows, &[0.0, 1.0, 1.0]).unwrap();
        let fs = FeasibleSet::for_design(&dm, &LinkFunction::linear(), 100.0).unwrap();
        let th = fit_lse_linear(&dm, &fs, &opts(1e-13)).unwrap().theta_hat.flatten();
        assert!((th[0] - 0.2).abs() < 1e-6 && (th[1] - 0.4).abs() < 1e-6, "{th:?}");
        let f = field(&dm, &th, &LinkFunction::linear());
        let mu = 1.0 / 15.0;
        let kkt = ((f[0] + mu).powi(2) + (f[1] + 2.0 * mu).powi(2)).sqrt();
        assert!(kkt <= 1e-6, "kkt residual {kkt}");
    }

    #[test]
    fn active_constraint_vi_equals_lse() {
        // strongly positive data push predictors against the upper bound
        let rows: Vec<Vec<f64>> = (0..6).map(|k| vec![1.0, f64::from(k % 2), f64::from((k / 2) % 2)]).collect();
        let y = [1.0, 1.0, 1.0, 1.0, 0.0, 1.0];
        let dm = DesignMatrix::from_rows(&rows, &y).unwrap();
        let link = LinkFunction::linear();
        let fs = FeasibleSet::for_design(&dm, &link, 100.0).unwrap();
        let a = solve_vi(&dm, &link, &fs, &opts(1e-11)).unwrap();
        let b = fit_lse_linear(&dm, &fs, &opts(1e-11)).unwrap();
        let (ta, tb) = (a.theta_hat.flatten(), b.theta_hat.flatten());
        assert!(ta.iter().zip(&tb).all(|(p, q)| (p - q).abs() < 1e-6), "{ta:?} {tb:?}");
        assert!(fs.max_violation(&ta) < 1e-9);
        assert!(least_squares_objective(&dm, &ta) <= least_squares_objective(&dm, &tb) + 1e-10);
    }

    #[test]
    fn independent_of_start() {
        let dm = random_rows(3, 300, 4, 0.2);
        let link = LinkFunction::sigmoid(10.0);
        let fs = FeasibleSet::for_design(&dm, &link, 100.0).unwrap();
        let tol = 1e-8;
        let a = solve_vi(&dm, &link, &fs, &opts(tol)).unwrap();
        let mut o = opts(tol);
        o.initial = Some(vec![-1.0, 0.5, 0.3, -0.2]);
        let b = solve_vi(&dm, &link, &fs, &o).unwrap();
        let diff: f64 = a.theta_hat.flatten().iter().zip(b.theta_hat.flatten()).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        // residual tolerance converts to parameter error through the modulus
        assert!(diff < 1e-5, "diff {diff}");
    }

    #[test]
    fn nonconvergence_is_reported() {
        let dm = random_rows(4, 200, 3, 0.3);
        let r = fit_node(&dm, &LinkFunction::sigmoid(10.0), &SolverOptions { tol: 1e-14, max_iter: 3, ..Default::default() }).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
    }
}
