//! Greedy forward feature selection on a patient-level hold-out split.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{evaluate, weights_from_counts, Criterion, Scored};
use crate::error::{Error, Result};
use crate::model::{build_design_multi, Feature, LinkFunction};
use crate::panel::PatientPanel;
use crate::vi::{fit_node, SolverOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvConfig {
    pub criterion: Criterion,
    /// Fraction of patients used for training.
    pub split: f64,
    pub threshold: f64,
    pub class_weighting: bool,
    pub max_iter_grid: Vec<usize>,
    /// Smallest improvement that accepts a candidate.
    pub min_gain: f64,
    /// Size of the default initial subset.
    pub initial_k: usize,
    pub d: usize,
    pub link: LinkFunction,
    pub solver: SolverOptions,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            criterion: Criterion::TpRate,
            split: 0.8,
            threshold: 0.5,
            class_weighting: true,
            max_iter_grid: vec![50, 100, 200, 500, 1000],
            min_gain: 1e-4,
            initial_k: 3,
            d: 1,
            link: LinkFunction::sigmoid(LinkFunction::DEFAULT_SIGMOID_BOUND),
            solver: SolverOptions::default(),
            seed: 0,
        }
    }
}

impl CvConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(Error::Config(format!("split {} must lie in (0, 1)", self.split)));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config(format!("threshold {} must lie in (0, 1)", self.threshold)));
        }
        if self.d == 0 {
            return Err(Error::Config("memory depth d must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    pub feature: Feature,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub target: usize,
    pub criterion: Criterion,
    pub initial_subset: Vec<Feature>,
    /// Criterion of the initial subset.
    pub baseline: f64,
    pub steps: Vec<SelectionStep>,
    pub final_subset: Vec<Feature>,
}

impl SelectionTrace {
    /// Criterion values: baseline followed by one value per accepted step.
    pub fn values(&self) -> Vec<f64> {
        std::iter::once(self.baseline).chain(self.steps.iter().map(|s| s.value)).collect()
    }

    /// Plain-text table in selection order.
    pub fn report(&self, label: impl Fn(Feature) -> String) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "target\t{}", self.target);
        let _ = writeln!(out, "criterion\t{}", self.criterion.name());
        let initial: Vec<String> = self.initial_subset.iter().map(|&f| label(f)).collect();
        let _ = writeln!(out, "initial\t{}", initial.join(","));
        let _ = writeln!(out, "baseline\t{:.6}", self.baseline);
        let _ = writeln!(out, "order\tfeature\tvalue");
        for (k, s) in self.steps.iter().enumerate() {
            let _ = writeln!(out, "{}\t{}\t{:.6}", k + 1, label(s.feature), s.value);
        }
        out
    }
}

/// Splits patients into train and test sets. A single patient is split in
/// time instead.
pub fn patient_split(panels: &[PatientPanel], split: f64, seed: u64) -> Result<(Vec<PatientPanel>, Vec<PatientPanel>)> {
    match panels.len() {
        0 => Err(Error::InsufficientData("no panels given".into())),
        1 => {
            let p = &panels[0];
            let cut = ((p.len() as f64) * split).round() as usize;
            let cut = cut.clamp(1, p.len().saturating_sub(1).max(1));
            Ok((vec![p.slice(0..cut)], vec![p.slice(cut..p.len())]))
        }
        n => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let n_train = ((n as f64 * split).round() as usize).clamp(1, n - 1);
            let (tr, te) = idx.split_at(n_train);
            Ok((tr.iter().map(|&i| panels[i].clone()).collect(), te.iter().map(|&i| panels[i].clone()).collect()))
        }
    }
}

/// Fits `features` on `train` and evaluates the criterion on `test`.
pub fn holdout_score(
    train: &[PatientPanel],
    test: &[PatientPanel],
    target: usize,
    features: &[Feature],
    cv: &CvConfig,
    max_iter: usize,
) -> Result<f64> {
    let mut design = build_design_multi(train, target, cv.d, Some(features))?;
    if cv.class_weighting {
        let p = design.total_positive();
        if let Ok((wp, wn)) = weights_from_counts(p, design.total() - p) {
            design = design.reweighted(wp, wn)?;
        }
    }
    let solver = SolverOptions { max_iter, ..cv.solver.clone() };
    let fit = fit_node(&design, &cv.link, &solver)?;
    let test_design = build_design_multi(test, target, cv.d, Some(features))?;
    let weights = if cv.class_weighting {
        let p = test_design.total_positive();
        weights_from_counts(p, test_design.total() - p).ok()
    } else {
        None
    };
    let scored = Scored::from_design(&test_design, &fit.theta_hat.flatten(), &cv.link);
    evaluate(&scored, cv.criterion, cv.threshold, weights)
}

/// Absolute point-biserial correlation between the lag-1 value of `feature`
/// and the response of `target`; 0 for a constant feature.
pub fn point_biserial(panels: &[PatientPanel], target: usize, feature: Feature, d: usize) -> Result<f64> {
    let design = build_design_multi(panels, target, d, Some(&[feature]))?;
    let c = design.layout().column(feature, 1).expect("feature in layout");
    let t = design.total();
    let (mut sx, mut sxx, mut sxy) = (0.0, 0.0, 0.0);
    for u in 0..design.n_unique() {
        let x = design.row(u)[c];
        sx += design.count(u) * x;
        sxx += design.count(u) * x * x;
        sxy += design.positives(u) * x;
    }
    let (mx, my) = (sx / t, design.total_positive() / t);
    let vx = sxx / t - mx * mx;
    let vy = my * (1.0 - my);
    if vx <= 1e-15 || vy <= 0.0 {
        return Ok(0.0);
    }
    Ok(((sxy / t - mx * my) / (vx * vy).sqrt()).abs())
}

/// The `k` candidates most correlated with the response on the training
/// split, ties to the smaller feature.
pub fn default_initial_subset(train: &[PatientPanel], target: usize, candidates: &[Feature], k: usize, d: usize) -> Result<Vec<Feature>> {
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let corr: Vec<f64> = sorted.iter().map(|&f| point_biserial(train, target, f, d).unwrap_or(0.0)).collect();
    let mut order: Vec<usize> = (0..sorted.len()).collect();
    order.sort_by(|&a, &b| corr[b].total_cmp(&corr[a]).then(a.cmp(&b)));
    Ok(order.into_iter().take(k).map(|i| sorted[i]).collect())
}

/// Greedy forward selection. Each round fits one model per remaining
/// candidate and adds the best one if it improves the held-out criterion by
/// at least `min_gain`. Ties go to the smaller feature. With `initial` unset
/// the top-`initial_k` correlated candidates seed the subset.
pub fn forward_select(
    panels: &[PatientPanel],
    target: usize,
    candidates: &[Feature],
    initial: Option<&[Feature]>,
    cv: &CvConfig,
) -> Result<SelectionTrace> {
    cv.validate()?;
    let (train, test) = patient_split(panels, cv.split, cv.seed)?;
    let mut current: Vec<Feature> = match initial {
        Some(init) => {
            if let Some(f) = init.iter().find(|f| !candidates.contains(f)) {
                return Err(Error::InvalidArgument(format!("initial feature {f} is not a candidate")));
            }
            init.to_vec()
        }
        None => default_initial_subset(&train, target, candidates, cv.initial_k, cv.d)?,
    };
    let initial_subset = current.clone();
    let max_iter = cv.solver.max_iter;
    let mut best = holdout_score(&train, &test, target, &current, cv, max_iter)?;
    let baseline = best;
    let mut steps = Vec::new();
    let mut remaining: Vec<Feature> = candidates.iter().copied().filter(|f| !current.contains(f)).collect();
    remaining.sort_unstable();
    remaining.dedup();
    while !remaining.is_empty() {
        let scores: Vec<Option<f64>> = remaining
            .par_iter()
            .map(|&f| {
                let mut trial = current.clone();
                trial.push(f);
                holdout_score(&train, &test, target, &trial, cv, max_iter).ok()
            })
            .collect();
        let mut pick: Option<(usize, f64)> = None;
        for (k, s) in scores.iter().enumerate() {
            if let Some(v) = *s {
                if pick.is_none_or(|(_, b)| cv.criterion.score(v) > cv.criterion.score(b)) {
                    pick = Some((k, v));
                }
            }
        }
        let Some((k, v)) = pick else { break };
        if cv.criterion.score(v) < cv.criterion.score(best) + cv.min_gain {
            break;
        }
        let f = remaining.remove(k);
        current.push(f);
        steps.push(SelectionStep { feature: f, value: v });
        best = v;
    }
    Ok(SelectionTrace { target, criterion: cv.criterion, initial_subset, baseline, steps, final_subset: current })
}

/// Held-out criterion for every value of `grid`.
pub fn max_iter_scores(panels: &[PatientPanel], target: usize, features: &[Feature], grid: &[usize], cv: &CvConfig) -> Result<Vec<f64>> {
    cv.validate()?;
    let (train, test) = patient_split(panels, cv.split, cv.seed)?;
    grid.par_iter().map(|&m| holdout_score(&train, &test, target, features, cv, m)).collect()
}

/// Grid value with the best held-out criterion; ties go to the smallest.
pub fn tune_max_iter(panels: &[PatientPanel], target: usize, features: &[Feature], grid: &[usize], cv: &CvConfig) -> Result<usize> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty max_iter grid".into()));
    }
    let scores = max_iter_scores(panels, target, features, grid, cv)?;
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by_key(|&k| grid[k]);
    let mut best = order[0];
    for &k in &order[1..] {
        if cv.criterion.score(scores[k]) > cv.criterion.score(scores[best]) {
            best = k;
        }
    }
    Ok(grid[best])
}
