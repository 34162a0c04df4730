//! Multiclass gradient boosting with second-order, L1/L2-regularized
//! regression trees (one tree per class per round, softmax objective).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{
    check_dim, class_indices, fit_regression_indexed, ColumnIndex, RegressionTree, SecondOrderParams, TreeParams,
};
use super::{softmax, Classifier, ModelError};
use crate::features::{FeatureMatrix, SparseVector};
use crate::language::LanguageId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub min_child_weight: f64,
    pub max_depth: usize,
    pub seed: u64,
}

impl Default for BoostParams {
    fn default() -> Self {
        BoostParams {
            n_rounds: 40,
            learning_rate: 0.3,
            lambda: 1.0,
            alpha: 0.0,
            gamma: 0.0,
            min_child_weight: 1e-3,
            max_depth: 4,
            seed: 0,
        }
    }
}

impl BoostParams {
    fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidParam(m.to_string()));
        if self.n_rounds == 0 {
            return bad("n_rounds must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must lie in (0, 1]");
        }
        let nonnegative = |v: f64| v >= 0.0;
        if ![self.lambda, self.alpha, self.gamma, self.min_child_weight]
            .into_iter()
            .all(nonnegative)
        {
            return bad("lambda, alpha, gamma and min_child_weight must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub classes: Vec<LanguageId>,
    pub dim: usize,
    pub params: BoostParams,
    /// Initial per-class score: log of the class frequency.
    pub base_score: Vec<f64>,
    /// `rounds[r][k]` is the round-`r` tree of class `k`; leaves hold
    /// unscaled weights.
    pub rounds: Vec<Vec<RegressionTree>>,
}

/// Gradient and hessian of the softmax log-loss with respect to each
/// class score: `g = p − y`, `h = p(1 − p)`.
pub fn softmax_grad_hess(scores: &[f64], label: usize) -> (Vec<f64>, Vec<f64>) {
    let p = softmax(scores);
    let g = p
        .iter()
        .enumerate()
        .map(|(k, &pk)| pk - if k == label { 1.0 } else { 0.0 })
        .collect();
    let h = p.iter().map(|&pk| pk * (1.0 - pk)).collect();
    (g, h)
}

/// `−ln softmax(scores)[label]`, computed stably.
pub fn softmax_log_loss(scores: &[f64], label: usize) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
    lse - scores[label]
}

pub fn gbt_fit(matrix: &FeatureMatrix, params: &BoostParams) -> Result<BoostedModel, ModelError> {
    gbt_fit_traced(matrix, params).map(|(m, _)| m)
}

/// Like [`gbt_fit`], also returning the mean training log-loss before
/// round 1 and after every round.
pub fn gbt_fit_traced(matrix: &FeatureMatrix, params: &BoostParams) -> Result<(BoostedModel, Vec<f64>), ModelError> {
    params.validate()?;
    if matrix.is_empty() {
        return Err(ModelError::EmptyMatrix);
    }
    let classes = matrix.classes();
    let labels = class_indices(matrix, &classes);
    let k = classes.len();
    let n = matrix.len();
    let mut freq = vec![0usize; k];
    labels.iter().for_each(|&l| freq[l] += 1);
    let base_score: Vec<f64> = freq.iter().map(|&c| (c as f64 / n as f64).ln()).collect();

    let columns = ColumnIndex::build(matrix);
    let mut scores: Vec<Vec<f64>> = vec![base_score.clone(); n];
    let reg = SecondOrderParams {
        lambda: params.lambda,
        alpha: params.alpha,
        gamma: params.gamma,
        min_child_weight: params.min_child_weight,
    };
    let mean_loss = |scores: &[Vec<f64>]| {
        scores
            .iter()
            .zip(&labels)
            .map(|(s, &l)| softmax_log_loss(s, l))
            .sum::<f64>()
            / n as f64
    };
    let mut trace = vec![mean_loss(&scores)];
    let mut rounds = Vec::with_capacity(params.n_rounds);

    for round in 0..params.n_rounds {
        // Per class: gradient and hessian columns.
        let mut grads = vec![vec![0.0; n]; k];
        let mut hess = vec![vec![0.0; n]; k];
        for (i, s) in scores.iter().enumerate() {
            if s.iter().any(|v| !v.is_finite()) {
                return Err(ModelError::NonFiniteScore { round, row: i });
            }
            let (g, h) = softmax_grad_hess(s, labels[i]);
            for c in 0..k {
                grads[c][i] = g[c];
                hess[c][i] = h[c];
            }
        }
        let trees: Vec<RegressionTree> = (0..k)
            .into_par_iter()
            .map(|c| {
                let tp = TreeParams {
                    max_depth: params.max_depth,
                    min_samples_leaf: 1,
                    features_per_split: None,
                    seed: crate::rng::derive_seed(params.seed, (round * k + c) as u64),
                };
                fit_regression_indexed(matrix, &columns, &grads[c], &hess[c], reg, &tp)
            })
            .collect();
        for (i, row) in matrix.rows().iter().enumerate() {
            for (c, t) in trees.iter().enumerate() {
                scores[i][c] += params.learning_rate * t.leaf(row);
            }
        }
        trace.push(mean_loss(&scores));
        rounds.push(trees);
    }

    Ok((
        BoostedModel {
            classes,
            dim: matrix.dim(),
            params: *params,
            base_score,
            rounds,
        },
        trace,
    ))
}

impl BoostedModel {
    pub fn raw_scores(&self, vec: &SparseVector) -> Result<Vec<f64>, ModelError> {
        check_dim(self.dim, vec)?;
        let mut s = self.base_score.clone();
        for round in &self.rounds {
            for (c, t) in round.iter().enumerate() {
                s[c] += self.params.learning_rate * t.leaf(vec);
            }
        }
        Ok(s)
    }
}

pub fn gbt_predict_proba(model: &BoostedModel, vec: &SparseVector) -> Result<Vec<f64>, ModelError> {
    Ok(softmax(&model.raw_scores(vec)?))
}

impl Classifier for BoostedModel {
    fn classes(&self) -> &[LanguageId] {
        &self.classes
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn predict_proba(&self, vec: &SparseVector) -> Result<Vec<f64>, ModelError> {
        gbt_predict_proba(self, vec)
    }
}
