//! Run configuration: built-in defaults, optionally replaced by a TOML file,
//! then by command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::PipelineError;
use crate::eval::SplitSpec;
use crate::features::{FeatureChannel, FeaturizerConfig};
use crate::models::{ModelKind, ModelSpec};
use crate::textprep::PipelineConfig;

/// Text-channel preprocessing switches. The stop list is always the
/// bundled one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextOptions {
    pub strip_non_alphanumeric: bool,
    pub remove_stopwords: bool,
    pub retain_entities: bool,
    pub stem: bool,
    pub min_token_len: usize,
}

impl Default for TextOptions {
    fn default() -> Self {
        let d = PipelineConfig::default();
        TextOptions {
            strip_non_alphanumeric: d.strip_non_alphanumeric,
            remove_stopwords: d.remove_stopwords,
            retain_entities: d.retain_entities,
            stem: d.stem,
            min_token_len: d.min_token_len,
        }
    }
}

impl TextOptions {
    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            strip_non_alphanumeric: self.strip_non_alphanumeric,
            remove_stopwords: self.remove_stopwords,
            retain_entities: self.retain_entities,
            stem: self.stem,
            min_token_len: self.min_token_len,
            ..PipelineConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub channel: FeatureChannel,
    pub model: ModelKind,
    pub seed: u64,
    pub min_df: usize,
    pub min_snippet_chars: usize,
    pub per_language: usize,
    pub code_punct_tokens: bool,
    pub train_fraction: f64,
    pub folds: usize,
    pub budget: usize,
    pub text: TextOptions,
    /// Model hyperparameters by name, applied over the model defaults.
    pub hyperparams: BTreeMap<String, Value>,
    /// Input and output locations are not echoed into artifacts; inputs are
    /// identified by content hash instead.
    #[serde(skip_serializing)]
    pub paths: Paths,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub model_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            channel: FeatureChannel::Combined,
            model: ModelKind::Gbt,
            seed: 0,
            min_df: 2,
            min_snippet_chars: crate::corpus::DEFAULT_MIN_SNIPPET_CHARS,
            per_language: 1000,
            code_punct_tokens: false,
            train_fraction: 0.8,
            folds: 10,
            budget: 20,
            text: TextOptions::default(),
            hyperparams: BTreeMap::new(),
            paths: Paths::default(),
        }
    }
}

/// Values given on the command line; `None` leaves the lower layer alone.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOverrides {
    pub channel: Option<FeatureChannel>,
    pub model: Option<ModelKind>,
    pub seed: Option<u64>,
    pub min_df: Option<usize>,
    pub min_snippet_chars: Option<usize>,
    pub per_language: Option<usize>,
    pub code_punct_tokens: Option<bool>,
    pub folds: Option<usize>,
    pub budget: Option<usize>,
    pub stem: Option<bool>,
    pub remove_stopwords: Option<bool>,
    pub min_token_len: Option<usize>,
    pub hyperparams: BTreeMap<String, Value>,
    pub corpus: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub model_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml_str(src: &str) -> Result<Self, PipelineError> {
        toml::from_str(src).map_err(|e| PipelineError::Config(e.message().to_string()))
    }

    /// Defaults, replaced by `path` when given.
    pub fn load(path: Option<&Path>) -> Result<Self, PipelineError> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => Self::from_toml_str(&super::read_to_string(p)?),
        }
    }

    pub fn apply(mut self, o: &RunOverrides) -> Self {
        fn set<T: Clone>(slot: &mut T, v: &Option<T>) {
            if let Some(v) = v {
                *slot = v.clone();
            }
        }
        set(&mut self.channel, &o.channel);
        set(&mut self.model, &o.model);
        set(&mut self.seed, &o.seed);
        set(&mut self.min_df, &o.min_df);
        set(&mut self.min_snippet_chars, &o.min_snippet_chars);
        set(&mut self.per_language, &o.per_language);
        set(&mut self.code_punct_tokens, &o.code_punct_tokens);
        set(&mut self.folds, &o.folds);
        set(&mut self.budget, &o.budget);
        set(&mut self.text.stem, &o.stem);
        set(&mut self.text.remove_stopwords, &o.remove_stopwords);
        set(&mut self.text.min_token_len, &o.min_token_len);
        self.hyperparams
            .extend(o.hyperparams.iter().map(|(k, v)| (k.clone(), v.clone())));
        if o.corpus.is_some() {
            self.paths.corpus = o.corpus.clone();
        }
        if o.out_dir.is_some() {
            self.paths.out_dir = o.out_dir.clone();
        }
        if o.model_dir.is_some() {
            self.paths.model_dir = o.model_dir.clone();
        }
        self
    }

    pub fn featurizer(&self) -> Result<FeaturizerConfig, PipelineError> {
        let text = self.text.pipeline();
        text.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(FeaturizerConfig {
            channel: self.channel,
            min_df: self.min_df,
            text,
            code_punct_tokens: self.code_punct_tokens,
        })
    }

    /// Model defaults (seeded with the run seed) with `hyperparams` applied.
    pub fn model_spec(&self) -> Result<ModelSpec, PipelineError> {
        Ok(ModelSpec::default_for(self.model, self.seed).with_overrides(&self.hyperparams)?)
    }

    pub fn split(&self) -> SplitSpec {
        SplitSpec {
            train_fraction: self.train_fraction,
            seed: self.seed,
            stratified: true,
        }
    }

    pub fn corpus_path(&self) -> Result<&Path, PipelineError> {
        self.paths
            .corpus
            .as_deref()
            .ok_or_else(|| PipelineError::Config("no corpus path given".into()))
    }

    pub fn out_dir(&self) -> Result<&Path, PipelineError> {
        self.paths
            .out_dir
            .as_deref()
            .ok_or_else(|| PipelineError::Config("no output directory given".into()))
    }
}

/// Parses `key=value`; the value is read as JSON when possible, otherwise
/// as a string.
pub fn parse_hyperparam(arg: &str) -> Result<(String, Value), PipelineError> {
    let (k, v) = arg
        .split_once('=')
        .ok_or_else(|| PipelineError::Config(format!("expected key=value, got `{arg}`")))?;
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::from(v));
    Ok((k.trim().to_string(), value))
}
