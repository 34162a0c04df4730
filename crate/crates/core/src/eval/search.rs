//! Random hyperparameter search scored by stratified k-fold accuracy.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::split::{fold_split, stratified_kfold};
use super::{accuracy_on, EvalError};
use crate::features::FeatureMatrix;
use crate::models::{Classifier, ModelKind, ModelSpec};

/// A sampled configuration: parameter name → value.
pub type Config = BTreeMap<String, Value>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ParamRange {
    /// Uniform over the inclusive integer range.
    Int { low: i64, high: i64 },
    /// Uniform over `[low, high)`.
    Real { low: f64, high: f64 },
    /// Log-uniform over `[low, high)`; both bounds must be positive.
    LogReal { low: f64, high: f64 },
}

impl ParamRange {
    fn validate(&self, name: &str) -> Result<(), EvalError> {
        let ok = match *self {
            ParamRange::Int { low, high } => low <= high,
            ParamRange::Real { low, high } => low.is_finite() && high.is_finite() && low <= high,
            ParamRange::LogReal { low, high } => low > 0.0 && high.is_finite() && low <= high,
        };
        if ok {
            Ok(())
        } else {
            Err(EvalError::InvalidArgument(format!(
                "invalid range for `{name}`: {self:?}"
            )))
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Value {
        match *self {
            ParamRange::Int { low, high } => Value::from(rng.random_range(low..=high)),
            ParamRange::Real { low, high } => Value::from(uniform(rng, low, high)),
            ParamRange::LogReal { low, high } => Value::from(uniform(rng, low.ln(), high.ln()).exp().clamp(low, high)),
        }
    }

    pub fn contains(&self, v: &Value) -> bool {
        match *self {
            ParamRange::Int { low, high } => v.as_i64().is_some_and(|x| (low..=high).contains(&x)),
            ParamRange::Real { low, high } | ParamRange::LogReal { low, high } => {
                v.as_f64().is_some_and(|x| x >= low && x <= high)
            }
        }
    }
}

fn uniform<R: Rng>(rng: &mut R, low: f64, high: f64) -> f64 {
    if low == high {
        low
    } else {
        rng.random_range(low..high)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct HyperparamSpace {
    pub params: BTreeMap<String, ParamRange>,
}

impl HyperparamSpace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, range: ParamRange) -> Self {
        self.params.insert(name.to_string(), range);
        self
    }

    /// Built-in search space for a model family.
    pub fn default_for(kind: ModelKind) -> Self {
        use ParamRange::*;
        match kind {
            ModelKind::Nb => Self::new().with("alpha", LogReal { low: 0.01, high: 10.0 }),
            ModelKind::Rf => Self::new()
                .with("n_estimators", Int { low: 20, high: 200 })
                .with("max_depth", Int { low: 4, high: 48 })
                .with("min_samples_leaf", Int { low: 1, high: 5 }),
            ModelKind::Gbt => Self::new()
                .with("n_rounds", Int { low: 10, high: 80 })
                .with("learning_rate", LogReal { low: 0.05, high: 0.5 })
                .with("max_depth", Int { low: 2, high: 8 })
                .with("lambda", LogReal { low: 0.1, high: 10.0 })
                .with("gamma", Real { low: 0.0, high: 0.5 }),
        }
    }

    /// Draws one value per parameter, in name order.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Config {
        self.params.iter().map(|(k, r)| (k.clone(), r.sample(rng))).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub index: usize,
    pub config: Config,
    pub fold_accuracies: Vec<f64>,
    /// `None` when the trial failed.
    pub mean_accuracy: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub best: usize,
    pub trials: Vec<TrialResult>,
}

impl SearchOutcome {
    pub fn best_trial(&self) -> &TrialResult {
        &self.trials[self.best]
    }
}

/// Samples `budget` configurations up front, scores each by mean
/// stratified k-fold accuracy and returns the best (ties go to the earliest
/// trial). `trainer` fits a model from a configuration and a training fold.
pub fn random_search<M, E, F>(
    matrix: &FeatureMatrix,
    space: &HyperparamSpace,
    budget: usize,
    folds: usize,
    seed: u64,
    trainer: F,
) -> Result<SearchOutcome, EvalError>
where
    M: Classifier,
    E: std::fmt::Display,
    F: Fn(&Config, &FeatureMatrix) -> Result<M, E> + Sync,
{
    if budget == 0 {
        return Err(EvalError::InvalidArgument("budget must be at least 1".into()));
    }
    if folds < 2 {
        return Err(EvalError::InvalidArgument(format!(
            "folds must be at least 2, got {folds}"
        )));
    }
    for (name, range) in &space.params {
        range.validate(name)?;
    }
    let fold_sets = stratified_kfold(matrix.labels(), folds, seed)?;
    let mut rng = crate::rng::seeded(seed, u64::MAX);
    let configs: Vec<Config> = (0..budget).map(|_| space.sample(&mut rng)).collect();

    let trials: Vec<TrialResult> = configs
        .into_par_iter()
        .enumerate()
        .map(|(index, config)| {
            let mut fold_accuracies = Vec::with_capacity(folds);
            for i in 0..folds {
                let (tr, va) = fold_split(&fold_sets, i);
                let scored = trainer(&config, &matrix.subset(&tr))
                    .map_err(|e| e.to_string())
                    .and_then(|m| accuracy_on(&m, &matrix.subset(&va)).map_err(|e| e.to_string()));
                match scored {
                    Ok(acc) => fold_accuracies.push(acc),
                    Err(e) => {
                        return TrialResult {
                            index,
                            config,
                            fold_accuracies,
                            mean_accuracy: None,
                            error: Some(e),
                        }
                    }
                }
            }
            let mean = fold_accuracies.iter().sum::<f64>() / folds as f64;
            TrialResult {
                index,
                config,
                fold_accuracies,
                mean_accuracy: Some(mean),
                error: None,
            }
        })
        .collect();

    let mut best: Option<(usize, f64)> = None;
    for t in &trials {
        if let Some(m) = t.mean_accuracy {
            if best.is_none_or(|(_, b)| m > b) {
                best = Some((t.index, m));
            }
        }
    }
    match best {
        Some((best, _)) => Ok(SearchOutcome { best, trials }),
        None => Err(EvalError::AllTrialsFailed {
            first_error: trials[0].error.clone().unwrap_or_default(),
        }),
    }
}

/// Trainer that overrides `base` with each sampled configuration.
pub fn spec_trainer(
    base: ModelSpec,
) -> impl Fn(&Config, &FeatureMatrix) -> Result<crate::models::AnyModel, EvalError> + Sync {
    move |config, train| Ok(base.with_overrides(config)?.fit(train)?)
}
