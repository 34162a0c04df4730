//! Accuracy of the code channel as a function of the minimum snippet length.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::metrics::MetricsReport;
use super::split::SplitSpec;
use super::{holdout_evaluate, EvalError};
use crate::corpus::Corpus;
use crate::features::{FeatureChannel, FeaturizerConfig};
use crate::language::LanguageId;
use crate::models::ModelSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnippetStudyConfig {
    /// The channel is forced to `code`.
    pub featurizer: FeaturizerConfig,
    pub model: ModelSpec,
    pub split: SplitSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum ThresholdOutcome {
    Evaluated { report: MetricsReport },
    Skipped { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub threshold: usize,
    pub retained: usize,
    pub retained_per_class: BTreeMap<LanguageId, usize>,
    pub outcome: ThresholdOutcome,
}

impl ThresholdResult {
    pub fn accuracy(&self) -> Option<f64> {
        match &self.outcome {
            ThresholdOutcome::Evaluated { report } => Some(report.accuracy),
            ThresholdOutcome::Skipped { .. } => None,
        }
    }
}

/// For each threshold, keeps questions whose snippet has at least that many
/// characters and reruns the code-channel train/evaluate pipeline.
pub fn snippet_length_experiment(
    corpus: &Corpus,
    thresholds: &[usize],
    config: &SnippetStudyConfig,
) -> Result<Vec<ThresholdResult>, EvalError> {
    if thresholds.is_empty() {
        return Err(EvalError::InvalidArgument("no thresholds given".into()));
    }
    if thresholds.iter().any(|&t| t < 1) {
        return Err(EvalError::InvalidArgument("thresholds must be at least 1".into()));
    }
    if thresholds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EvalError::InvalidArgument(
            "thresholds must be strictly ascending".into(),
        ));
    }
    let featurizer = FeaturizerConfig {
        channel: FeatureChannel::Code,
        ..config.featurizer.clone()
    };
    let languages = corpus.languages();
    thresholds
        .iter()
        .map(|&threshold| {
            let kept = corpus.filter(|q| q.snippet_chars() >= threshold);
            let retained_per_class: BTreeMap<LanguageId, usize> = languages
                .iter()
                .map(|l| (*l, kept.counts.get(l).copied().unwrap_or(0)))
                .collect();
            let empty: Vec<String> = retained_per_class
                .iter()
                .filter(|(_, &n)| n == 0)
                .map(|(l, _)| l.to_string())
                .collect();
            let outcome = if !empty.is_empty() {
                ThresholdOutcome::Skipped {
                    reason: format!(
                        "no snippets of at least {threshold} characters for: {}",
                        empty.join(", ")
                    ),
                }
            } else {
                match holdout_evaluate(&kept.questions, &featurizer, &config.model, &config.split) {
                    Ok(run) => ThresholdOutcome::Evaluated { report: run.report },
                    Err(e) => ThresholdOutcome::Skipped { reason: e.to_string() },
                }
            };
            Ok(ThresholdResult {
                threshold,
                retained: kept.len(),
                retained_per_class,
                outcome,
            })
        })
        .collect()
}
