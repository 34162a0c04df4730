//! Splitting, cross-validation, random search, metrics and the snippet
//! length experiment.

pub mod metrics;
pub mod search;
pub mod snippet_study;
pub mod split;

pub use metrics::{
    accuracy, confusion_matrix, confusion_matrix_with_classes, evaluate_labels, f1_score, metrics_from_confusion,
    ClassMetrics, ConfusionMatrix, MetricsReport,
};
pub use search::{random_search, spec_trainer, Config, HyperparamSpace, ParamRange, SearchOutcome, TrialResult};
pub use snippet_study::{snippet_length_experiment, SnippetStudyConfig, ThresholdOutcome, ThresholdResult};
pub use split::{fold_split, stratified_holdout, stratified_holdout_indices, stratified_kfold, train_count, SplitSpec};

use crate::corpus::Question;
use crate::features::{FeatureError, FeatureMatrix, Featurizer, FeaturizerConfig};
use crate::language::LanguageId;
use crate::models::{AnyModel, Classifier, ModelError, ModelSpec};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("class {class} has {have} samples, at least {need} required")]
    UndersizedClass {
        class: LanguageId,
        have: usize,
        need: usize,
    },
    #[error("label vectors differ in length: {truth} true vs {predicted} predicted")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("every search trial failed; first error: {first_error}")]
    AllTrialsFailed { first_error: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

/// Predicts every row of `matrix`.
pub fn predict_all<M: Classifier + ?Sized>(model: &M, matrix: &FeatureMatrix) -> Result<Vec<LanguageId>, EvalError> {
    Ok(matrix
        .rows()
        .iter()
        .map(|r| model.predict(r))
        .collect::<Result<Vec<_>, _>>()?)
}

pub fn accuracy_on<M: Classifier + ?Sized>(model: &M, matrix: &FeatureMatrix) -> Result<f64, EvalError> {
    Ok(accuracy(matrix.labels(), &predict_all(model, matrix)?))
}

/// Report over the union of the model's classes and the test labels.
pub fn evaluate_model<M: Classifier + ?Sized>(model: &M, test: &FeatureMatrix) -> Result<MetricsReport, EvalError> {
    let predicted = predict_all(model, test)?;
    let mut classes = model.classes().to_vec();
    classes.extend_from_slice(test.labels());
    metrics_from_confusion(&confusion_matrix_with_classes(test.labels(), &predicted, &classes)?)
}

/// Everything produced by one hold-out run.
#[derive(Debug, Clone)]
pub struct HoldoutRun {
    pub featurizer: Featurizer,
    pub model: AnyModel,
    pub report: MetricsReport,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

/// Fits the vocabularies on `questions`, splits 80:20 stratified, trains on
/// the training part and evaluates on the rest.
pub fn holdout_evaluate(
    questions: &[Question],
    featurizer: &FeaturizerConfig,
    model: &ModelSpec,
    split: &SplitSpec,
) -> Result<HoldoutRun, EvalError> {
    let featurizer = featurizer.fit(questions)?;
    let matrix = featurizer.transform(questions);
    let (train_rows, test_rows) = stratified_holdout_indices(matrix.labels(), split)?;
    let fitted = model.fit(&matrix.subset(&train_rows))?;
    let report = evaluate_model(&fitted, &matrix.subset(&test_rows))?;
    Ok(HoldoutRun {
        featurizer,
        model: fitted,
        report,
        train_rows,
        test_rows,
    })
}
