//! Held-out classification criteria.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DesignMatrix, LinkFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    TpRate,
    ClassificationError,
    Auc,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::TpRate => "tp_rate",
            Criterion::ClassificationError => "classification_error",
            Criterion::Auc => "auc",
        }
    }

    /// Value oriented so that larger is better.
    pub fn score(self, value: f64) -> f64 {
        match self {
            Criterion::ClassificationError => -value,
            _ => value,
        }
    }
}

/// Balanced class weights T/(2 T_c) for (positive, negative).
pub fn class_weights(labels: &[f64]) -> Result<(f64, f64)> {
    let t = labels.len() as f64;
    let p = labels.iter().filter(|&&y| y > 0.0).count() as f64;
    weights_from_counts(p, t - p)
}

pub(crate) fn weights_from_counts(p: f64, n: f64) -> Result<(f64, f64)> {
    if p <= 0.0 || n <= 0.0 {
        return Err(Error::InvalidArgument("class weights need both classes present".into()));
    }
    let t = p + n;
    Ok((t / (2.0 * p), t / (2.0 * n)))
}

/// Predicted probabilities with positive and negative multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub prob: Vec<f64>,
    pub pos: Vec<f64>,
    pub neg: Vec<f64>,
}

impl Scored {
    /// One observation per entry, label y > 0 positive.
    pub fn from_labels(prob: &[f64], labels: &[f64]) -> Self {
        Self {
            prob: prob.to_vec(),
            pos: labels.iter().map(|&y| f64::from(u8::from(y > 0.0))).collect(),
            neg: labels.iter().map(|&y| f64::from(u8::from(y <= 0.0))).collect(),
        }
    }

    /// Scores every distinct window of a design under θ; predictors are
    /// clamped into the link domain.
    pub fn from_design(design: &DesignMatrix, theta: &[f64], link: &LinkFunction) -> Self {
        let prob = design
            .predictors(theta)
            .into_iter()
            .map(|eta| link.value(link.clamp(eta)).clamp(0.0, 1.0))
            .collect();
        let u = 0..design.n_unique();
        Self { prob, pos: u.clone().map(|k| design.positives(k)).collect(), neg: u.map(|k| design.negatives(k)).collect() }
    }
}

/// Criterion value. `weights` are (positive, negative) class weights used by
/// the classification error and the AUC; ties at `threshold` count as
/// positive predictions and tied AUC pairs count one half.
pub fn evaluate(scored: &Scored, criterion: Criterion, threshold: f64, weights: Option<(f64, f64)>) -> Result<f64> {
    let (wp, wn) = weights.unwrap_or((1.0, 1.0));
    let p: f64 = scored.pos.iter().sum();
    let n: f64 = scored.neg.iter().sum();
    let undefined = |reason: &str| Error::CriterionUndefined { criterion: criterion.name().into(), reason: reason.into() };
    let predicted = |k: usize| scored.prob[k] >= threshold;
    match criterion {
        Criterion::TpRate => {
            if p <= 0.0 {
                return Err(undefined("no positive rows"));
            }
            let tp: f64 = (0..scored.prob.len()).filter(|&k| predicted(k)).map(|k| scored.pos[k]).sum();
            Ok(tp / p)
        }
        Criterion::ClassificationError => {
            if p + n <= 0.0 {
                return Err(undefined("empty test set"));
            }
            let wrong: f64 = (0..scored.prob.len())
                .map(|k| if predicted(k) { wn * scored.neg[k] } else { wp * scored.pos[k] })
                .sum();
            Ok(wrong / (wp * p + wn * n))
        }
        Criterion::Auc => {
            if p <= 0.0 || n <= 0.0 {
                return Err(undefined("needs positive and negative rows"));
            }
            // sweep distinct scores in increasing order
            let mut order: Vec<usize> = (0..scored.prob.len()).collect();
            order.sort_by(|&a, &b| scored.prob[a].total_cmp(&scored.prob[b]));
            let mut below_neg = 0.0;
            let mut acc = 0.0;
            let mut k = 0;
            while k < order.len() {
                let mut end = k;
                let (mut gp, mut gn) = (0.0, 0.0);
                while end < order.len() && scored.prob[order[end]] == scored.prob[order[k]] {
                    gp += scored.pos[order[end]];
                    gn += scored.neg[order[end]];
                    end += 1;
                }
                acc += gp * (below_neg + 0.5 * gn);
                below_neg += gn;
                k = end;
            }
            // class weights scale numerator and denominator alike
            Ok(acc / (p * n))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_example() {
        let s = Scored::from_labels(&[0.9, 0.6, 0.4, 0.2], &[1.0, 0.0, 1.0, 0.0]);
        assert_eq!(evaluate(&s, Criterion::TpRate, 0.5, None).unwrap(), 0.5);
        assert_eq!(evaluate(&s, Criterion::Auc, 0.5, None).unwrap(), 0.75);
        assert_eq!(evaluate(&s, Criterion::ClassificationError, 0.5, None).unwrap(), 0.5);
    }

    #[test]
    fn perfect_and_constant() {
        let s = Scored::from_labels(&[0.9, 0.8, 0.1, 0.2], &[1.0, 1.0, 0.0, 0.0]);
        assert_eq!(evaluate(&s, Criterion::TpRate, 0.5, None).unwrap(), 1.0);
        assert_eq!(evaluate(&s, Criterion::ClassificationError, 0.5, None).unwrap(), 0.0);
        assert_eq!(evaluate(&s, Criterion::Auc, 0.5, None).unwrap(), 1.0);
        let c = Scored::from_labels(&[0.5; 4], &[1.0, 1.0, 0.0, 0.0]);
        assert_eq!(evaluate(&c, Criterion::TpRate, 0.5, None).unwrap(), 1.0);
        assert_eq!(evaluate(&c, Criterion::Auc, 0.5, None).unwrap(), 0.5);
    }

    #[test]
    fn degenerate_sets_name_the_criterion() {
        let s = Scored::from_labels(&[0.3, 0.7], &[0.0, 0.0]);
        let err = evaluate(&s, Criterion::Auc, 0.5, None).unwrap_err();
        assert!(err.to_string().contains("auc"));
        assert!(evaluate(&s, Criterion::TpRate, 0.5, None).is_err());
        assert!(evaluate(&s, Criterion::ClassificationError, 0.5, None).is_ok());
    }

    #[test]
    fn balanced_weights() {
        let mut labels = vec![1.0; 450];
        labels.extend(vec![0.0; 4772]);
        let (wp, wn) = class_weights(&labels).unwrap();
        assert!((wp - 5222.0 / 900.0).abs() < 1e-12 && (wp - 5.802).abs() < 1e-3);
        assert!((wn - 5222.0 / 9544.0).abs() < 1e-12 && (wn - 0.547).abs() < 1e-3);
        assert!((wp * 450.0 - wn * 4772.0).abs() < 1e-9);
        assert_eq!(class_weights(&[1.0, 0.0, 1.0, 0.0]).unwrap(), (1.0, 1.0));
        assert!(class_weights(&[1.0, 1.0]).is_err());
    }

    /// Quadratic pair count.
    fn auc_pairs(prob: &[f64], labels: &[f64]) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..prob.len() {
            for j in 0..prob.len() {
                if labels[i] > 0.0 && labels[j] <= 0.0 {
                    den += 1.0;
                    num += if prob[i] > prob[j] { 1.0 } else if prob[i] == prob[j] { 0.5 } else { 0.0 };
                }
            }
        }
        num / den
    }

    proptest! {
        #[test]
        fn auc_matches_pair_count(data in proptest::collection::vec((0u8..5, any::<bool>()), 2..40)) {
            let prob: Vec<f64> = data.iter().map(|(p, _)| f64::from(*p) / 4.0).collect();
            let labels: Vec<f64> = data.iter().map(|(_, y)| f64::from(u8::from(*y))).collect();
            let s = Scored::from_labels(&prob, &labels);
            match evaluate(&s, Criterion::Auc, 0.5, None) {
                Ok(v) => prop_assert!((v - auc_pairs(&prob, &labels)).abs() < 1e-12),
                Err(_) => prop_assert!(labels.iter().all(|&y| y > 0.0) || labels.iter().all(|&y| y <= 0.0)),
            }
        }

        #[test]
        fn tp_rate_is_one_minus_miss_rate(data in proptest::collection::vec((0.0f64..1.0, any::<bool>()), 1..40)) {
            let prob: Vec<f64> = data.iter().map(|d| d.0).collect();
            let labels: Vec<f64> = data.iter().map(|d| f64::from(u8::from(d.1))).collect();
            let pos = labels.iter().filter(|&&y| y > 0.0).count();
            prop_assume!(pos > 0);
            let fneg = prob.iter().zip(&labels).filter(|(p, y)| **y > 0.0 && **p < 0.5).count();
            let v = evaluate(&Scored::from_labels(&prob, &labels), Criterion::TpRate, 0.5, None).unwrap();
            prop_assert!((v - (1.0 - fneg as f64 / pos as f64)).abs() < 1e-12);
        }
    }
}
