//! Classifiers over sparse TF-IDF features: multinomial naive Bayes, a
//! random forest and regularized gradient-boosted trees.

mod boost;
mod forest;
mod naive_bayes;
pub mod tree;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::features::SparseVector;
use crate::language::LanguageId;

pub use boost::{
    gbt_fit, gbt_fit_traced, gbt_predict_proba, softmax_grad_hess, softmax_log_loss, BoostParams, BoostedModel,
};
pub use forest::{default_features_per_split, rf_fit, rf_predict, ForestParams, RandomForestModel};
pub use naive_bayes::{nb_fit, nb_fit_for_classes, nb_predict_proba, NaiveBayesModel};
pub use tree::{
    fit_classification_tree, fit_regression_tree, leaf_weight, split_gain, tree_fit, DecisionTree, FittedTree,
    RegressionTree, SecondOrderParams, SplitCriterion, TreeParams,
};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("training matrix is empty")]
    EmptyMatrix,
    #[error("class {0} has no training samples")]
    MissingClass(LanguageId),
    #[error("label {0} is not in the model's class list")]
    UnknownLabel(LanguageId),
    #[error("dimension mismatch: model expects {expected}, got {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("gradient/hessian length ({gradients}/{hessians}) does not match {rows} rows")]
    GradientLength {
        rows: usize,
        gradients: usize,
        hessians: usize,
    },
    #[error("non-finite score at round {round}, row {row}")]
    NonFiniteScore { round: usize, row: usize },
    #[error("vocabulary hash mismatch for {channel}: model was trained with {expected}, got {found}")]
    VocabHashMismatch {
        channel: String,
        expected: String,
        found: String,
    },
    #[error("unsupported model format version {0}")]
    FormatVersion(u32),
    #[error("model file: {0}")]
    Json(#[from] serde_json::Error),
}

/// Numerically stable softmax (max subtraction).
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub trait Classifier {
    /// Class list in code order; probability vectors follow it.
    fn classes(&self) -> &[LanguageId];

    fn dim(&self) -> usize;

    fn predict_proba(&self, vec: &SparseVector) -> Result<Vec<f64>, ModelError>;

    /// Most probable class; ties go to the lowest class code.
    fn predict(&self, vec: &SparseVector) -> Result<LanguageId, ModelError> {
        let p = self.predict_proba(vec)?;
        Ok(self.classes()[tree::argmax(&p)])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Nb,
    Rf,
    Gbt,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Nb => "nb",
            ModelKind::Rf => "rf",
            ModelKind::Gbt => "gbt",
        })
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nb" => Ok(ModelKind::Nb),
            "rf" => Ok(ModelKind::Rf),
            "gbt" => Ok(ModelKind::Gbt),
            other => Err(format!("unknown model `{other}` (expected nb, rf or gbt)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnyModel {
    NaiveBayes(NaiveBayesModel),
    RandomForest(RandomForestModel),
    Boosted(BoostedModel),
}

impl AnyModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            AnyModel::NaiveBayes(_) => ModelKind::Nb,
            AnyModel::RandomForest(_) => ModelKind::Rf,
            AnyModel::Boosted(_) => ModelKind::Gbt,
        }
    }

    fn inner(&self) -> &dyn Classifier {
        match self {
            AnyModel::NaiveBayes(m) => m,
            AnyModel::RandomForest(m) => m,
            AnyModel::Boosted(m) => m,
        }
    }
}

impl Classifier for AnyModel {
    fn classes(&self) -> &[LanguageId] {
        self.inner().classes()
    }

    fn dim(&self) -> usize {
        self.inner().dim()
    }

    fn predict_proba(&self, vec: &SparseVector) -> Result<Vec<f64>, ModelError> {
        self.inner().predict_proba(vec)
    }

    fn predict(&self, vec: &SparseVector) -> Result<LanguageId, ModelError> {
        self.inner().predict(vec)
    }
}

/// Versioned, self-describing model document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub model_type: ModelKind,
    pub hyperparams: serde_json::Value,
    /// Channel name → content hash of the vocabulary the model was fit on.
    pub vocab_hashes: BTreeMap<String, String>,
    /// Free-form provenance (run config, seed, input hashes).
    pub metadata: serde_json::Value,
    pub model: AnyModel,
}

impl ModelFile {
    pub fn new(
        model: AnyModel,
        hyperparams: serde_json::Value,
        vocab_hashes: BTreeMap<String, String>,
        metadata: serde_json::Value,
    ) -> Self {
        ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            model_type: model.kind(),
            hyperparams,
            vocab_hashes,
            metadata,
            model,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(src: &str) -> Result<Self, ModelError> {
        let file: ModelFile = serde_json::from_str(src)?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(ModelError::FormatVersion(file.format_version));
        }
        Ok(file)
    }

    /// Fails unless every recorded vocabulary hash equals the supplied one.
    pub fn check_vocab_hashes(&self, actual: &BTreeMap<String, String>) -> Result<(), ModelError> {
        for (channel, expected) in &self.vocab_hashes {
            let found = actual.get(channel).cloned().unwrap_or_default();
            if &found != expected {
                return Err(ModelError::VocabHashMismatch {
                    channel: channel.clone(),
                    expected: expected.clone(),
                    found,
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureMatrix;

    #[test]
    fn model_file_round_trip_and_hash_check() {
        let m = FeatureMatrix::from_dense(&[vec![1.0], vec![0.0]], vec![LanguageId::C, LanguageId::Go]).unwrap();
        let nb = nb_fit(&m, 1.0).unwrap();
        let mut hashes = BTreeMap::new();
        hashes.insert("text".to_string(), "abc".to_string());
        let file = ModelFile::new(
            AnyModel::NaiveBayes(nb),
            serde_json::json!({"alpha": 1.0}),
            hashes.clone(),
            serde_json::Value::Null,
        );
        let back = ModelFile::from_json(&file.to_json()).unwrap();
        assert_eq!(back, file);
        assert!(back.check_vocab_hashes(&hashes).is_ok());
        hashes.insert("text".to_string(), "xyz".to_string());
        assert!(matches!(
            back.check_vocab_hashes(&hashes),
            Err(ModelError::VocabHashMismatch { .. })
        ));
        let bumped = file.to_json().replace("\"format_version\":1", "\"format_version\":9");
        assert!(matches!(
            ModelFile::from_json(&bumped),
            Err(ModelError::FormatVersion(9))
        ));
    }
}

/// A model family plus its hyperparameters; the unit that tuning samples
/// and the pipeline trains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelSpec {
    Nb { alpha: f64 },
    Rf(ForestParams),
    Gbt(BoostParams),
}

impl ModelSpec {
    pub fn default_for(kind: ModelKind, seed: u64) -> Self {
        match kind {
            ModelKind::Nb => ModelSpec::Nb { alpha: 1.0 },
            ModelKind::Rf => ModelSpec::Rf(ForestParams {
                seed,
                ..ForestParams::default()
            }),
            ModelKind::Gbt => ModelSpec::Gbt(BoostParams {
                seed,
                ..BoostParams::default()
            }),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Nb { .. } => ModelKind::Nb,
            ModelSpec::Rf(_) => ModelKind::Rf,
            ModelSpec::Gbt(_) => ModelKind::Gbt,
        }
    }

    pub fn fit(&self, matrix: &crate::features::FeatureMatrix) -> Result<AnyModel, ModelError> {
        Ok(match self {
            ModelSpec::Nb { alpha } => AnyModel::NaiveBayes(nb_fit(matrix, *alpha)?),
            ModelSpec::Rf(p) => AnyModel::RandomForest(rf_fit(matrix, p)?),
            ModelSpec::Gbt(p) => AnyModel::Boosted(gbt_fit(matrix, p)?),
        })
    }

    /// Hyperparameters as a JSON object keyed by parameter name.
    pub fn hyperparams(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("spec serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("model");
        }
        v
    }

    /// Overrides named parameters; unknown names are an error.
    pub fn with_overrides(&self, overrides: &BTreeMap<String, serde_json::Value>) -> Result<Self, ModelError> {
        let mut v = serde_json::to_value(self).expect("spec serializes");
        let obj = v.as_object_mut().expect("spec is an object");
        for (k, val) in overrides {
            if k == "model" || !obj.contains_key(k) {
                return Err(ModelError::InvalidParam(format!(
                    "`{k}` is not a {} parameter",
                    self.kind()
                )));
            }
            // Integer-valued parameters must stay integers.
            let val = match (&obj[k], val) {
                (serde_json::Value::Number(old), serde_json::Value::Number(new)) if old.is_u64() && !new.is_u64() => {
                    let f = new.as_f64().unwrap_or(0.0).round().max(0.0) as u64;
                    serde_json::Value::from(f)
                }
                _ => val.clone(),
            };
            obj.insert(k.clone(), val);
        }
        Ok(serde_json::from_value(v)?)
    }
}
