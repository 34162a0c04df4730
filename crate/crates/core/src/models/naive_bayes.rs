//! Multinomial naive Bayes with additive (Laplace) smoothing.

use serde::{Deserialize, Serialize};

use super::tree::check_dim;
use super::{softmax, Classifier, ModelError};
use crate::features::{FeatureMatrix, SparseVector};
use crate::language::LanguageId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub classes: Vec<LanguageId>,
    pub alpha: f64,
    pub class_log_prior: Vec<f64>,
    /// `term_log_prob[c][j] = ln P(term j | class c)`
    pub term_log_prob: Vec<Vec<f64>>,
}

/// Fits on the classes present in `matrix`.
pub fn nb_fit(matrix: &FeatureMatrix, alpha: f64) -> Result<NaiveBayesModel, ModelError> {
    nb_fit_for_classes(matrix, &matrix.classes(), alpha)
}

/// Fits for an explicit class list; every listed class must have at least
/// one training row.
pub fn nb_fit_for_classes(
    matrix: &FeatureMatrix,
    classes: &[LanguageId],
    alpha: f64,
) -> Result<NaiveBayesModel, ModelError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(ModelError::InvalidParam(format!("alpha must be positive, got {alpha}")));
    }
    if matrix.is_empty() {
        return Err(ModelError::EmptyMatrix);
    }
    let mut classes = classes.to_vec();
    classes.sort();
    classes.dedup();
    let v = matrix.dim();
    let k = classes.len();
    let mut doc_counts = vec![0usize; k];
    let mut term_counts = vec![vec![0.0f64; v]; k];
    for (row, label) in matrix.rows().iter().zip(matrix.labels()) {
        let c = classes
            .binary_search(label)
            .map_err(|_| ModelError::UnknownLabel(*label))?;
        doc_counts[c] += 1;
        for &(j, w) in row.entries() {
            if w < 0.0 {
                return Err(ModelError::InvalidParam(
                    "naive Bayes needs nonnegative features".into(),
                ));
            }
            term_counts[c][j] += w;
        }
    }
    if let Some(c) = doc_counts.iter().position(|&n| n == 0) {
        return Err(ModelError::MissingClass(classes[c]));
    }
    let n = matrix.len() as f64;
    let class_log_prior = doc_counts.iter().map(|&d| (d as f64 / n).ln()).collect();
    let term_log_prob = term_counts
        .iter()
        .map(|counts| {
            let denom = (counts.iter().sum::<f64>() + alpha * v as f64).ln();
            counts.iter().map(|&c| (c + alpha).ln() - denom).collect()
        })
        .collect();
    Ok(NaiveBayesModel {
        classes,
        alpha,
        class_log_prior,
        term_log_prob,
    })
}

impl NaiveBayesModel {
    pub fn dim(&self) -> usize {
        self.term_log_prob.first().map_or(0, Vec::len)
    }

    pub fn joint_log_likelihood(&self, vec: &SparseVector) -> Result<Vec<f64>, ModelError> {
        check_dim(self.dim(), vec)?;
        Ok(self
            .class_log_prior
            .iter()
            .zip(&self.term_log_prob)
            .map(|(prior, logp)| prior + vec.entries().iter().map(|&(j, w)| w * logp[j]).sum::<f64>())
            .collect())
    }
}

pub fn nb_predict_proba(model: &NaiveBayesModel, vec: &SparseVector) -> Result<Vec<f64>, ModelError> {
    Ok(softmax(&model.joint_log_likelihood(vec)?))
}

impl Classifier for NaiveBayesModel {
    fn classes(&self) -> &[LanguageId] {
        &self.classes
    }

    fn dim(&self) -> usize {
        NaiveBayesModel::dim(self)
    }

    fn predict_proba(&self, vec: &SparseVector) -> Result<Vec<f64>, ModelError> {
        nb_predict_proba(self, vec)
    }
}
