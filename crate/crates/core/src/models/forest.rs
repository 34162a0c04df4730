//! Bagged Gini trees with per-node feature sampling and plurality voting.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{
    argmax, check_dim, class_indices, fit_classification_weighted, ColumnIndex, DecisionTree, TreeParams,
};
use super::{Classifier, ModelError};
use crate::features::{FeatureMatrix, SparseVector};
use crate::language::LanguageId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// `None` means `ceil(sqrt(dim))`.
    pub features_per_split: Option<usize>,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_estimators: 100,
            max_depth: 32,
            min_samples_leaf: 1,
            features_per_split: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub classes: Vec<LanguageId>,
    pub dim: usize,
    pub n_estimators: usize,
    pub features_per_split: usize,
    pub seed: u64,
    pub trees: Vec<DecisionTree>,
}

pub fn default_features_per_split(dim: usize) -> usize {
    ((dim as f64).sqrt().ceil() as usize).max(1)
}

pub fn rf_fit(matrix: &FeatureMatrix, params: &ForestParams) -> Result<RandomForestModel, ModelError> {
    if params.n_estimators == 0 {
        return Err(ModelError::InvalidParam("n_estimators must be at least 1".into()));
    }
    if matrix.is_empty() {
        return Err(ModelError::EmptyMatrix);
    }
    let classes = matrix.classes();
    let labels = class_indices(matrix, &classes);
    let columns = ColumnIndex::build(matrix);
    let fps = params
        .features_per_split
        .unwrap_or_else(|| default_features_per_split(matrix.dim()))
        .clamp(1, matrix.dim().max(1));
    let n = matrix.len();

    let trees = (0..params.n_estimators)
        .into_par_iter()
        .map(|t| {
            let tree_seed = crate::rng::derive_seed(params.seed, t as u64);
            let mut rng = crate::rng::seeded(tree_seed, u64::MAX);
            let mut weights = vec![0.0; n];
            for _ in 0..n {
                weights[rng.random_range(0..n)] += 1.0;
            }
            let tp = TreeParams {
                max_depth: params.max_depth,
                min_samples_leaf: params.min_samples_leaf,
                features_per_split: Some(fps),
                seed: tree_seed,
            };
            fit_classification_weighted(matrix, &columns, &classes, &labels, &weights, &tp)
        })
        .collect();

    Ok(RandomForestModel {
        classes,
        dim: matrix.dim(),
        n_estimators: params.n_estimators,
        features_per_split: fps,
        seed: params.seed,
        trees,
    })
}

impl RandomForestModel {
    pub fn votes(&self, vec: &SparseVector) -> Result<Vec<usize>, ModelError> {
        check_dim(self.dim, vec)?;
        let mut votes = vec![0usize; self.classes.len()];
        for t in &self.trees {
            votes[t.predict_index(vec)] += 1;
        }
        Ok(votes)
    }
}

/// Plurality vote; ties go to the lowest class code.
pub fn rf_predict(model: &RandomForestModel, vec: &SparseVector) -> Result<LanguageId, ModelError> {
    let votes = model.votes(vec)?;
    Ok(model.classes[plurality(&votes)])
}

pub(crate) fn plurality(votes: &[usize]) -> usize {
    let counts: Vec<f64> = votes.iter().map(|&v| v as f64).collect();
    argmax(&counts)
}

impl Classifier for RandomForestModel {
    fn classes(&self) -> &[LanguageId] {
        &self.classes
    }

    fn dim(&self) -> usize {
        self.dim
    }

    /// Vote shares.
    fn predict_proba(&self, vec: &SparseVector) -> Result<Vec<f64>, ModelError> {
        let votes = self.votes(vec)?;
        let n = self.trees.len() as f64;
        Ok(votes.into_iter().map(|v| v as f64 / n).collect())
    }

    fn predict(&self, vec: &SparseVector) -> Result<LanguageId, ModelError> {
        rf_predict(self, vec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use LanguageId::{Assembly as A, C as B};

    fn separable() -> FeatureMatrix {
        FeatureMatrix::from_dense(&[vec![0.0], vec![0.1], vec![1.0], vec![1.1]], vec![A, A, B, B]).unwrap()
    }

    #[test]
    fn plurality_ties_go_low() {
        assert_eq!(plurality(&[2, 1]), 0);
        assert_eq!(plurality(&[1, 1]), 0);
        assert_eq!(plurality(&[0, 1, 1]), 1);
    }

    #[test]
    fn deterministic_under_seed() {
        let p = ForestParams {
            n_estimators: 10,
            seed: 9,
            ..ForestParams::default()
        };
        let a = rf_fit(&separable(), &p).unwrap();
        let b = rf_fit(&separable(), &p).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn hundred_trees_fit_separable_data() {
        let m = separable();
        let model = rf_fit(
            &m,
            &ForestParams {
                n_estimators: 100,
                seed: 3,
                ..ForestParams::default()
            },
        )
        .unwrap();
        for (row, &label) in m.rows().iter().zip(m.labels()) {
            assert_eq!(rf_predict(&model, row).unwrap(), label);
        }
    }

    #[test]
    fn rejects_zero_estimators_and_bad_dim() {
        let p = ForestParams {
            n_estimators: 0,
            ..ForestParams::default()
        };
        assert!(rf_fit(&separable(), &p).is_err());
        let model = rf_fit(
            &separable(),
            &ForestParams {
                n_estimators: 2,
                ..ForestParams::default()
            },
        )
        .unwrap();
        assert!(rf_predict(&model, &SparseVector::zero(2)).is_err());
    }
}
