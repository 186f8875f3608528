//! Ground-truth simulator for the discrete Hawkes model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::link::LinkFunction;
use super::theta::{Layout, ThetaVector};
use crate::error::{Error, Result};
use crate::panel::PatientPanel;

/// Clipped AR(1) process driving every exogenous series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExoProcess {
    pub ar_coef: f64,
    pub noise_scale: f64,
    pub clip: f64,
}

impl Default for ExoProcess {
    fn default() -> Self {
        Self { ar_coef: 0.5, noise_scale: 1.0, clip: 3.0 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HistoryMode {
    /// Only lags 1..=d act, as in the estimated model.
    #[default]
    Truncated,
    /// Every past step acts with exponentially decaying weight.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub n_nodes: usize,
    #[serde(default)]
    pub n_exo: usize,
    #[serde(default)]
    pub n_static: usize,
    pub d: usize,
    pub t: usize,
    pub nu: Vec<f64>,
    /// N1 x N1 node effects, `alpha[i][j]` is the effect of j on i.
    pub alpha: Vec<Vec<f64>>,
    pub alpha_decay: Vec<Vec<f64>>,
    /// N1 x N2 exogenous effects.
    #[serde(default)]
    pub beta: Vec<Vec<f64>>,
    #[serde(default)]
    pub beta_decay: Vec<Vec<f64>>,
    /// N1 x N3 static effects.
    #[serde(default)]
    pub gamma: Vec<Vec<f64>>,
    /// Static covariate values.
    #[serde(default)]
    pub z: Vec<f64>,
    pub link: LinkFunction,
    #[serde(default)]
    pub exo: ExoProcess,
    #[serde(default)]
    pub history: HistoryMode,
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub panel: PatientPanel,
    /// True lag-expanded parameters, one per node, in the full layout.
    pub thetas: Vec<ThetaVector>,
    /// Per node, how many predictors had to be clamped into the link domain.
    pub clamp_counts: Vec<usize>,
}

impl SimulationSpec {
    /// Spec with no interactions: every node has baseline `nu`.
    pub fn independent(n_nodes: usize, d: usize, t: usize, nu: f64, link: LinkFunction) -> Self {
        Self {
            n_nodes,
            n_exo: 0,
            n_static: 0,
            d,
            t,
            nu: vec![nu; n_nodes],
            alpha: vec![vec![0.0; n_nodes]; n_nodes],
            alpha_decay: vec![vec![1.0; n_nodes]; n_nodes],
            beta: vec![vec![]; n_nodes],
            beta_decay: vec![vec![]; n_nodes],
            gamma: vec![vec![]; n_nodes],
            z: vec![],
            link,
            exo: ExoProcess::default(),
            history: HistoryMode::Truncated,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let (n1, n2, n3) = (self.n_nodes, self.n_exo, self.n_static);
        if n1 == 0 || self.d == 0 || self.t == 0 {
            return bad("n_nodes, d and t must be positive".into());
        }
        if self.nu.len() != n1 {
            return bad(format!("nu has {} entries, expected {n1}", self.nu.len()));
        }
        let shape = |m: &Vec<Vec<f64>>, cols: usize, name: &str| -> Result<()> {
            if m.len() != n1 || m.iter().any(|r| r.len() != cols) {
                return Err(Error::Config(format!("{name} must be {n1} x {cols}")));
            }
            Ok(())
        };
        shape(&self.alpha, n1, "alpha")?;
        shape(&self.alpha_decay, n1, "alpha_decay")?;
        shape(&self.beta, n2, "beta")?;
        shape(&self.beta_decay, n2, "beta_decay")?;
        shape(&self.gamma, n3, "gamma")?;
        if self.z.len() != n3 {
            return bad(format!("z has {} entries, expected {n3}", self.z.len()));
        }
        let decays = self.alpha_decay.iter().chain(&self.beta_decay).flatten();
        if decays.clone().any(|&r| !(r > 0.0) || !r.is_finite()) {
            return bad("decay rates must be positive".into());
        }
        if !(self.exo.clip > 0.0) || !(self.exo.noise_scale >= 0.0) || self.exo.ar_coef.abs() >= 1.0 {
            return bad("exogenous process needs clip > 0, noise >= 0 and |ar| < 1".into());
        }
        if !(self.link.bound > 0.0) {
            return bad("link bound must be positive".into());
        }
        Ok(())
    }

    /// Lag-expanded true parameters of node `i` (lags 1..=d).
    pub fn true_theta(&self, i: usize) -> ThetaVector {
        let layout = Layout::full(self.n_nodes, self.n_exo, self.n_static, self.d);
        let mut th = ThetaVector::zeros(layout);
        th.nu = self.nu[i];
        th.gamma = self.gamma[i].clone();
        for j in 0..self.n_exo {
            th.beta[j] = (1..=self.d).map(|tau| decay(self.beta[i][j], self.beta_decay[i][j], tau)).collect();
        }
        for j in 0..self.n_nodes {
            th.alpha[j] = (1..=self.d).map(|tau| decay(self.alpha[i][j], self.alpha_decay[i][j], tau)).collect();
        }
        th
    }
}

fn decay(coef: f64, rate: f64, tau: usize) -> f64 {
    coef * (-rate * tau as f64).exp()
}

/// Draws one panel of length `spec.t`. History before the first step is
/// zero. Identical `(spec, seed)` gives an identical panel.
pub fn simulate_panel(spec: &SimulationSpec, seed: u64) -> Result<SimulationOutput> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n1, n2, t_len) = (spec.n_nodes, spec.n_exo, spec.t);
    let max_lag = match spec.history {
        HistoryMode::Truncated => spec.d,
        HistoryMode::Full => t_len,
    };
    // per-lag coefficient tables, index [i][j][tau-1]
    let table = |coef: &Vec<Vec<f64>>, rate: &Vec<Vec<f64>>| -> Vec<Vec<Vec<f64>>> {
        coef.iter()
            .zip(rate)
            .map(|(cr, rr)| {
                cr.iter().zip(rr).map(|(&c, &r)| (1..=max_lag).map(|tau| decay(c, r, tau)).collect()).collect()
            })
            .collect()
    };
    let a_tab = table(&spec.alpha, &spec.alpha_decay);
    let b_tab = table(&spec.beta, &spec.beta_decay);
    let base: Vec<f64> = (0..n1)
        .map(|i| spec.nu[i] + spec.gamma[i].iter().zip(&spec.z).map(|(g, z)| g * z).sum::<f64>())
        .collect();

    let mut x = vec![vec![0.0; t_len]; n2];
    for series in x.iter_mut() {
        let mut prev = 0.0;
        for v in series.iter_mut() {
            let e: f64 = rng.sample(StandardNormal);
            prev = (spec.exo.ar_coef * prev + spec.exo.noise_scale * e).clamp(-spec.exo.clip, spec.exo.clip);
            *v = prev;
        }
    }

    let mut y = vec![vec![0.0; t_len]; n1];
    let mut clamp_counts = vec![0usize; n1];
    for t in 0..t_len {
        let lags = max_lag.min(t);
        for i in 0..n1 {
            let mut eta = base[i];
            for j in 0..n2 {
                let coefs = &b_tab[i][j];
                eta += (1..=lags).map(|tau| coefs[tau - 1] * x[j][t - tau]).sum::<f64>();
            }
            for j in 0..n1 {
                let coefs = &a_tab[i][j];
                eta += (1..=lags).filter(|&tau| y[j][t - tau] != 0.0).map(|tau| coefs[tau - 1]).sum::<f64>();
            }
            let clamped = spec.link.clamp(eta);
            if clamped != eta {
                clamp_counts[i] += 1;
            }
            let p = spec.link.value(clamped).clamp(0.0, 1.0);
            y[i][t] = f64::from(u8::from(rng.gen_bool(p)));
        }
    }

    let panel = PatientPanel::new(format!("sim-{seed}"), y, x, spec.z.clone())?;
    let thetas = (0..n1).map(|i| spec.true_theta(i)).collect();
    Ok(SimulationOutput { panel, thetas, clamp_counts })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_reparametrization() {
        let mut spec = SimulationSpec::independent(1, 3, 10, 0.1, LinkFunction::linear());
        spec.alpha[0][0] = 0.8;
        let th = spec.true_theta(0);
        for tau in 1..=3 {
            assert!((th.alpha[0][tau - 1] - 0.8 * (-(tau as f64)).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn fair_coin_without_interactions() {
        let spec = SimulationSpec::independent(1, 1, 4000, 0.0, LinkFunction::sigmoid(10.0));
        let out = simulate_panel(&spec, 3).unwrap();
        let mean = out.panel.y[0].iter().sum::<f64>() / 4000.0;
        let sigma = (0.25f64 / 4000.0).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn deterministic_per_seed() {
        let mut spec = SimulationSpec::independent(2, 2, 50, 0.2, LinkFunction::linear());
        spec.alpha[0][1] = 0.3;
        let a = simulate_panel(&spec, 11).unwrap();
        let b = simulate_panel(&spec, 11).unwrap();
        let c = simulate_panel(&spec, 12).unwrap();
        assert_eq!(a.panel, b.panel);
        assert_ne!(a.panel, c.panel);
    }

    #[test]
    fn rejects_nonpositive_decay() {
        let mut spec = SimulationSpec::independent(1, 1, 10, 0.1, LinkFunction::linear());
        spec.alpha_decay[0][0] = 0.0;
        assert!(matches!(simulate_panel(&spec, 0), Err(Error::Config(_))));
    }

    #[test]
    fn clamps_are_counted() {
        let spec = SimulationSpec::independent(1, 1, 20, 1.5, LinkFunction::linear());
        let out = simulate_panel(&spec, 0).unwrap();
        assert_eq!(out.clamp_counts[0], 20);
        assert!(out.panel.y[0].iter().all(|&v| v == 1.0));
    }

    #[test]
    fn toml_round_trip() {
        let mut spec = SimulationSpec::independent(2, 2, 30, 0.2, LinkFunction::sigmoid(6.0));
        spec.history = HistoryMode::Full;
        let text = toml::to_string(&spec).unwrap();
        let back: SimulationSpec = toml::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }
}
