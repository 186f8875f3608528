use crate::error::Result;
use crate::model::{DesignMatrix, LinkFunction, ThetaVector};

/// Empirical field F(θ) = (1/T) Σ w (g(wᵀθ) − y).
///
/// Fails with a domain error when some row's predictor leaves the link domain.
pub fn empirical_field(design: &DesignMatrix, theta: &ThetaVector, link: &LinkFunction) -> Result<Vec<f64>> {
    let flat = theta.flatten();
    for eta in design.predictors(&flat) {
        link.check_domain(eta, 1e-9)?;
    }
    Ok(field(design, &flat, link))
}

/// Field without the domain check.
pub(crate) fn field(design: &DesignMatrix, theta: &[f64], link: &LinkFunction) -> Vec<f64> {
    let n = design.dim();
    let inv_t = 1.0 / design.total();
    let mut f = vec![0.0; n];
    for u in 0..design.n_unique() {
        let w = design.row(u);
        let eta: f64 = w.iter().zip(theta).map(|(a, b)| a * b).sum();
        let c = (design.count(u) * link.value(eta) - design.positives(u)) * inv_t;
        if c != 0.0 {
            for (fk, wk) in f.iter_mut().zip(w) {
                *fk += c * wk;
            }
        }
    }
    f
}

/// Mean negative log-likelihood of the Bernoulli model with link g.
pub fn negative_log_likelihood(design: &DesignMatrix, theta: &[f64], link: &LinkFunction) -> f64 {
    let mut s = 0.0;
    for (u, eta) in design.predictors(theta).into_iter().enumerate() {
        let p = link.value(eta).clamp(1e-300, 1.0 - 1e-16);
        s -= design.positives(u) * p.ln() + design.negatives(u) * (1.0 - p).ln();
    }
    s / design.total()
}

/// (1/2T) Σ (y − wᵀθ)².
pub fn least_squares_objective(design: &DesignMatrix, theta: &[f64]) -> f64 {
    let mut s = 0.0;
    for (u, eta) in design.predictors(theta).into_iter().enumerate() {
        s += design.positives(u) * (1.0 - eta).powi(2) + design.negatives(u) * eta.powi(2);
    }
    s / (2.0 * design.total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Layout;
    use rand::{Rng, SeedableRng};

    fn random_design(seed: u64, t: usize, n: usize) -> (Vec<Vec<f64>>, Vec<f64>, DesignMatrix) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..t)
            .map(|_| {
                let mut r = vec![1.0];
                r.extend((1..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { rng.gen_range(0.0..1.0) }));
                r
            })
            .collect();
        let y: Vec<f64> = (0..t).map(|_| f64::from(u8::from(rng.gen_bool(0.4)))).collect();
        let dm = DesignMatrix::from_rows(&rows, &y).unwrap();
        (rows, y, dm)
    }

    #[test]
    fn matches_loop_free_reimplementation() {
        let (rows, y, dm) = random_design(1, 12, 4);
        let theta = [0.1, 0.2, -0.05, 0.3];
        let link = LinkFunction::sigmoid(10.0);
        let f = field(&dm, &theta, &link);
        let t = rows.len() as f64;
        let brute: Vec<f64> = (0..4)
            .map(|k| {
                rows.iter()
                    .zip(&y)
                    .map(|(w, yt)| w[k] * (link.value(w.iter().zip(&theta).map(|(a, b)| a * b).sum()) - yt))
                    .sum::<f64>()
                    / t
            })
            .collect();
        for k in 0..4 {
            assert!((f[k] - brute[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_field_is_gram_minus_moment() {
        let (_, _, dm) = random_design(2, 20, 3);
        let theta = [0.3, 0.1, 0.2];
        let f = field(&dm, &theta, &LinkFunction::linear());
        let a = dm.response_moment();
        let g = dm.gram() * nalgebra::DVector::from_column_slice(&theta);
        for k in 0..3 {
            assert!((f[k] - (g[k] - a[k])).abs() < 1e-13);
        }
    }

    #[test]
    fn exact_interpolation_gives_zero() {
        // responses are deterministic functions of the window: all y = 0 with g = 0
        let rows = vec![vec![1.0, 0.0], vec![1.0, 1.0]];
        let dm = DesignMatrix::from_rows(&rows, &[0.0, 0.0]).unwrap();
        let f = field(&dm, &[0.0, 0.0], &LinkFunction::linear());
        assert_eq!(f, vec![0.0, 0.0]);
    }

    #[test]
    fn domain_violation_reported() {
        let (_, _, dm) = random_design(3, 10, 2);
        let th = ThetaVector::from_flat(Layout::plain(2), &[2.0, 0.0]).unwrap();
        assert!(empirical_field(&dm, &th, &LinkFunction::linear()).is_err());
    }

    #[test]
    fn sigmoid_field_is_likelihood_gradient() {
        let (_, _, dm) = random_design(4, 30, 3);
        let link = LinkFunction::sigmoid(10.0);
        let theta = [0.2, -0.4, 0.7];
        let f = field(&dm, &theta, &link);
        for k in 0..3 {
            let h = 1e-5;
            let mut a = theta;
            let mut b = theta;
            a[k] += h;
            b[k] -= h;
            let fd = (negative_log_likelihood(&dm, &a, &link) - negative_log_likelihood(&dm, &b, &link)) / (2.0 * h);
            assert!((fd - f[k]).abs() <= 1e-6 * f[k].abs().max(1e-3), "{fd} vs {}", f[k]);
        }
    }

    #[test]
    fn linear_field_is_affine() {
        let (_, _, dm) = random_design(5, 15, 3);
        let link = LinkFunction::linear();
        let f0 = field(&dm, &[0.0; 3], &link);
        let lin = |th: &[f64]| -> Vec<f64> { field(&dm, th, &link).iter().zip(&f0).map(|(a, b)| a - b).collect() };
        let x = [0.1, 0.2, 0.3];
        let y = [-0.2, 0.05, 0.4];
        let xy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + 2.5 * b).collect();
        let (lx, ly, lxy) = (lin(&x), lin(&y), lin(&xy));
        for k in 0..3 {
            assert!((lxy[k] - lx[k] - 2.5 * ly[k]).abs() < 1e-13);
        }
    }
}
