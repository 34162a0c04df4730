//! End-to-end operations behind the command-line tool: ingest, sample,
//! train/evaluate, tune, predict, the snippet-length study, embedding and
//! projection. Every JSON artifact carries the format version, the
//! effective configuration, the seed and the content hashes of its inputs.

mod config;

pub use config::{parse_hyperparam, Paths, RunConfig, RunOverrides, TextOptions};

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::corpus::{self, Corpus, CorpusError, DumpError, TagMap};
use crate::embed::{self, EmbedError, EmbeddingModel, Projection2D, SkipGramParams, TsneParams};
use crate::eval::{
    self, EvalError, HyperparamSpace, MetricsReport, SearchOutcome, SnippetStudyConfig, ThresholdResult,
};
use crate::features::{Channel, FeatureChannel, FeatureError, Featurizer, FeaturizerConfig, Vocabulary};
use crate::language::LanguageId;
use crate::models::{Classifier, ModelError, ModelFile, MODEL_FORMAT_VERSION};

pub const MODEL_FILE: &str = "model.json";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error("{channel} channel requires {requirement}")]
    MissingField {
        channel: FeatureChannel,
        requirement: &'static str,
    },
    #[error("{path}: {message}")]
    Artifact { path: PathBuf, message: String },
    #[error("dump: {0}")]
    Dump(#[from] DumpError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

pub(crate) fn read_to_string(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn io_err(path: &Path, e: std::io::Error) -> PipelineError {
    PipelineError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Pretty JSON with a trailing newline; creates parent directories.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut s = serde_json::to_string_pretty(value).expect("artifact serializes");
    s.push('\n');
    write_text(path, &s)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, PipelineError> {
    serde_json::from_str(&read_to_string(path)?).map_err(|e| PipelineError::Artifact {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Envelope of every JSON artifact except the model file, which carries the
/// same information in its own layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub format_version: u32,
    pub artifact: String,
    pub config: Value,
    pub seed: u64,
    /// Input name → sha256 of its bytes.
    pub inputs: BTreeMap<String, String>,
    pub payload: T,
}

impl<T> Artifact<T> {
    pub fn new(artifact: &str, config: Value, seed: u64, inputs: BTreeMap<String, String>, payload: T) -> Self {
        Artifact {
            format_version: MODEL_FORMAT_VERSION,
            artifact: artifact.to_string(),
            config,
            seed,
            inputs,
            payload,
        }
    }
}

/// A corpus file's contents plus its hash.
pub struct LoadedCorpus {
    pub corpus: Corpus,
    pub sha256: String,
}

pub fn load_corpus(path: &Path) -> Result<LoadedCorpus, PipelineError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    let corpus = Corpus::read_jsonl(&bytes[..])?;
    Ok(LoadedCorpus {
        sha256: sha256_hex(&bytes),
        corpus,
    })
}

pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<(), PipelineError> {
    let mut buf = Vec::new();
    corpus.write_jsonl(&mut buf)?;
    write_text(path, &String::from_utf8(buf).expect("jsonl is utf-8"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub rows_skipped: usize,
    pub questions: usize,
    pub counts: BTreeMap<LanguageId, usize>,
    pub warnings: Vec<String>,
}

/// Streams a `Posts.xml` dump and keeps single-language questions with a
/// code block of at least `min_snippet_chars` characters. Rows with
/// missing or malformed attributes are skipped and reported; structural
/// XML errors abort.
pub fn ingest(dump: &Path, tags: &TagMap, min_snippet_chars: usize) -> Result<(Corpus, IngestSummary), PipelineError> {
    let file = fs::File::open(dump).map_err(|e| io_err(dump, e))?;
    let mut questions = Vec::new();
    let mut warnings = Vec::new();
    let mut rows_skipped = 0;
    for row in corpus::parse_posts_stream(BufReader::new(file)) {
        match row {
            Ok(post) => questions.extend(corpus::extract_question(&post, tags, min_snippet_chars)),
            Err(e) if e.is_recoverable() => {
                rows_skipped += 1;
                if warnings.len() < 20 {
                    warnings.push(e.to_string());
                }
            }
            Err(e) => return Err(e.into()),
        }
    }
    let corpus = Corpus::from_questions(questions);
    let summary = IngestSummary {
        rows_skipped,
        questions: corpus.len(),
        counts: corpus.counts.clone(),
        warnings,
    };
    Ok((corpus, summary))
}

fn vocab_file(channel: Channel) -> String {
    format!("vocab_{channel}.json")
}

fn config_value(config: &RunConfig) -> Value {
    serde_json::to_value(config).expect("config serializes")
}

/// Everything `run_train_eval` produced.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub report: MetricsReport,
    pub written: Vec<PathBuf>,
}

/// Fits vocabularies on the corpus, splits 80:20 stratified, trains,
/// evaluates on the held-out part and writes the model, vocabularies and
/// report to the output directory.
pub fn run_train_eval(config: &RunConfig) -> Result<TrainOutcome, PipelineError> {
    let input = load_corpus(config.corpus_path()?)?;
    let out = config.out_dir()?;
    let featurizer_config = config.featurizer()?;
    let spec = config.model_spec()?;
    let run = eval::holdout_evaluate(&input.corpus.questions, &featurizer_config, &spec, &config.split())?;

    let inputs: BTreeMap<String, String> = [("corpus".to_string(), input.sha256)].into();
    let cfg = config_value(config);
    let mut written = Vec::new();
    for vocab in [&run.featurizer.text_vocab, &run.featurizer.code_vocab]
        .into_iter()
        .flatten()
    {
        let path = out.join(vocab_file(vocab.channel()));
        let payload: Value = serde_json::from_str(&vocab.to_json()).expect("vocabulary json");
        write_json(
            &path,
            &Artifact::new("vocabulary", cfg.clone(), config.seed, inputs.clone(), payload),
        )?;
        written.push(path);
    }
    let metadata = serde_json::json!({
        "config": cfg,
        "seed": config.seed,
        "inputs": inputs,
        "featurizer": featurizer_config,
        "train_rows": run.train_rows.len(),
        "test_rows": run.test_rows.len(),
    });
    let file = ModelFile::new(run.model, spec.hyperparams(), run.featurizer.vocab_hashes(), metadata);
    let path = out.join(MODEL_FILE);
    write_text(&path, &(file.to_json() + "\n"))?;
    written.push(path);
    written.extend(write_report(out, &run.report, &cfg, config.seed, &inputs)?);
    Ok(TrainOutcome {
        report: run.report,
        written,
    })
}

/// Writes `report.json`, `report.txt` and `confusion.csv`.
pub fn write_report(
    out: &Path,
    report: &MetricsReport,
    cfg: &Value,
    seed: u64,
    inputs: &BTreeMap<String, String>,
) -> Result<Vec<PathBuf>, PipelineError> {
    let json = out.join(REPORT_FILE);
    write_json(
        &json,
        &Artifact::new("report", cfg.clone(), seed, inputs.clone(), report),
    )?;
    let txt = out.join("report.txt");
    write_text(&txt, &report.to_table())?;
    let csv = out.join("confusion.csv");
    write_text(&csv, &report.confusion.to_csv())?;
    Ok(vec![json, txt, csv])
}

/// A persisted model with the featurizer rebuilt from its artifacts.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub file: ModelFile,
    pub featurizer: Featurizer,
}

impl LoadedModel {
    /// Reads `model.json` and the vocabularies next to it, and checks the
    /// vocabulary hashes.
    pub fn load(dir: &Path) -> Result<Self, PipelineError> {
        let path = dir.join(MODEL_FILE);
        let file = ModelFile::from_json(&read_to_string(&path)?).map_err(|e| PipelineError::Artifact {
            path: path.clone(),
            message: e.to_string(),
        })?;
        let featurizer_config: FeaturizerConfig =
            serde_json::from_value(file.metadata["featurizer"].clone()).map_err(|e| PipelineError::Artifact {
                path: path.clone(),
                message: format!("featurizer: {e}"),
            })?;
        let load_vocab = |channel: Channel| -> Result<Vocabulary, PipelineError> {
            let p = dir.join(vocab_file(channel));
            let artifact: Artifact<Value> = read_json(&p)?;
            Vocabulary::from_json(&artifact.payload.to_string()).map_err(|e| PipelineError::Artifact {
                path: p,
                message: e.to_string(),
            })
        };
        let channel = featurizer_config.channel;
        let featurizer = Featurizer {
            text_vocab: channel.uses_text().then(|| load_vocab(Channel::Text)).transpose()?,
            code_vocab: channel.uses_code().then(|| load_vocab(Channel::Code)).transpose()?,
            config: featurizer_config,
        };
        file.check_vocab_hashes(&featurizer.vocab_hashes())?;
        if featurizer.dim() != file.model.dim() {
            return Err(ModelError::DimMismatch {
                expected: file.model.dim(),
                found: featurizer.dim(),
            }
            .into());
        }
        Ok(LoadedModel { file, featurizer })
    }

    pub fn channel(&self) -> FeatureChannel {
        self.featurizer.config.channel
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictInput {
    pub title: Option<String>,
    pub body: Option<String>,
    pub snippet: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: LanguageId,
    pub probabilities: BTreeMap<LanguageId, f64>,
    pub channel: FeatureChannel,
}

/// Applies the persisted preprocessing, vocabularies and model.
pub fn predict(model: &LoadedModel, input: &PredictInput) -> Result<Prediction, PipelineError> {
    let channel = model.channel();
    let has_text = input.title.is_some() || input.body.is_some();
    let has_code = input.snippet.is_some();
    let requirement = match channel {
        FeatureChannel::Text if !has_text => Some("title/body"),
        FeatureChannel::Code if !has_code => Some("snippet"),
        FeatureChannel::Combined if !(has_text && has_code) => Some("title/body and snippet"),
        _ => None,
    };
    if let Some(requirement) = requirement {
        return Err(PipelineError::MissingField { channel, requirement });
    }
    let vec = model.featurizer.vectorize_parts(
        input.title.as_deref().unwrap_or(""),
        input.body.as_deref().unwrap_or(""),
        input.snippet.as_deref().unwrap_or(""),
    );
    let m = &model.file.model;
    let p = m.predict_proba(&vec)?;
    let label = m.predict(&vec)?;
    Ok(Prediction {
        label,
        probabilities: m.classes().iter().copied().zip(p).collect(),
        channel,
    })
}

/// Scores a saved model on every question of a corpus.
pub fn run_evaluate(model: &LoadedModel, corpus: &Corpus) -> Result<MetricsReport, PipelineError> {
    let matrix = model.featurizer.transform(&corpus.questions);
    Ok(eval::evaluate_model(&model.file.model, &matrix)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub space: HyperparamSpace,
    pub best_hyperparams: Value,
    pub outcome: SearchOutcome,
}

/// Random search over the model's default space, scored by stratified
/// k-fold accuracy on the whole corpus. Writes `tune.json`.
pub fn run_tune(config: &RunConfig) -> Result<TuneResult, PipelineError> {
    let input = load_corpus(config.corpus_path()?)?;
    let featurizer = config.featurizer()?.fit(&input.corpus.questions)?;
    let matrix = featurizer.transform(&input.corpus.questions);
    let base = config.model_spec()?;
    let space = HyperparamSpace::default_for(config.model);
    let outcome = eval::random_search(
        &matrix,
        &space,
        config.budget,
        config.folds,
        config.seed,
        eval::spec_trainer(base),
    )?;
    let best = base.with_overrides(&outcome.best_trial().config)?;
    let result = TuneResult {
        space,
        best_hyperparams: best.hyperparams(),
        outcome,
    };
    let inputs = [("corpus".to_string(), input.sha256)].into();
    write_json(
        &config.out_dir()?.join("tune.json"),
        &Artifact::new("tune", config_value(config), config.seed, inputs, &result),
    )?;
    Ok(result)
}

/// Code-channel accuracy per minimum snippet length. Writes
/// `snippet_study.json` and `snippet_study.txt`.
pub fn run_snippet_study(config: &RunConfig, thresholds: &[usize]) -> Result<Vec<ThresholdResult>, PipelineError> {
    let input = load_corpus(config.corpus_path()?)?;
    let study = SnippetStudyConfig {
        featurizer: config.featurizer()?,
        model: config.model_spec()?,
        split: config.split(),
    };
    let results = eval::snippet_length_experiment(&input.corpus, thresholds, &study)?;
    let out = config.out_dir()?;
    let inputs = [("corpus".to_string(), input.sha256)].into();
    write_json(
        &out.join("snippet_study.json"),
        &Artifact::new("snippet_study", config_value(config), config.seed, inputs, &results),
    )?;
    write_text(&out.join("snippet_study.txt"), &snippet_study_table(&results))?;
    Ok(results)
}

pub fn snippet_study_table(results: &[ThresholdResult]) -> String {
    let mut s = String::from("min chars  questions  accuracy  macro F1\n");
    for r in results {
        match &r.outcome {
            eval::ThresholdOutcome::Evaluated { report } => s.push_str(&format!(
                "{:>9}  {:>9}  {:>7.1}%  {:>8.2}\n",
                r.threshold,
                r.retained,
                100.0 * report.accuracy,
                report.macro_f1
            )),
            eval::ThresholdOutcome::Skipped { reason } => {
                s.push_str(&format!("{:>9}  {:>9}  skipped: {reason}\n", r.threshold, r.retained))
            }
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub language: LanguageId,
    pub channel: Channel,
    pub params: SkipGramParams,
}

/// Trains skip-gram vectors on one language's questions for one channel.
/// Writes `embedding.json`.
pub fn run_embed(config: &RunConfig, request: &EmbedRequest) -> Result<EmbeddingModel, PipelineError> {
    let input = load_corpus(config.corpus_path()?)?;
    let docs = embed::language_documents(
        &input.corpus.questions,
        request.language,
        request.channel,
        &config.featurizer()?,
    );
    if docs.is_empty() {
        return Err(PipelineError::Config(format!(
            "corpus has no {} questions",
            request.language
        )));
    }
    let model = embed::train_skipgram(&docs, &request.params)?;
    let inputs = [("corpus".to_string(), input.sha256)].into();
    let cfg = serde_json::json!({ "run": config_value(config), "embed": request });
    write_json(
        &config.out_dir()?.join("embedding.json"),
        &Artifact::new("embedding", cfg, request.params.seed, inputs, &model),
    )?;
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectRequest {
    pub fraction: f64,
    pub neighbors: usize,
    pub tsne: TsneParams,
}

impl Default for ProjectRequest {
    fn default() -> Self {
        ProjectRequest {
            fraction: 0.03,
            neighbors: 10,
            tsne: TsneParams::default(),
        }
    }
}

/// Projects the most frequent terms of a saved embedding. Writes
/// `projection.csv`, `projection.json` (with the KL trace) and
/// `neighbors.json`.
pub fn run_project(embedding: &Path, out: &Path, request: &ProjectRequest) -> Result<Projection2D, PipelineError> {
    let bytes = fs::read(embedding).map_err(|e| io_err(embedding, e))?;
    let artifact: Artifact<EmbeddingModel> = serde_json::from_slice(&bytes).map_err(|e| PipelineError::Artifact {
        path: embedding.to_path_buf(),
        message: e.to_string(),
    })?;
    let model = artifact.payload;
    let projection = embed::project_top_terms(&model, request.fraction, &request.tsne)?;
    let inputs: BTreeMap<String, String> = [("embedding".to_string(), sha256_hex(&bytes))].into();
    let cfg = serde_json::to_value(request).expect("request serializes");

    let mut csv = Vec::new();
    embed::write_projection_csv(&projection, &model, &mut csv)?;
    write_text(
        &out.join("projection.csv"),
        &String::from_utf8(csv).expect("csv is utf-8"),
    )?;
    write_json(
        &out.join("projection.json"),
        &Artifact::new(
            "projection",
            cfg.clone(),
            request.tsne.seed,
            inputs.clone(),
            &projection,
        ),
    )?;
    let terms: Vec<String> = projection.points.iter().map(|p| p.term.clone()).collect();
    let k = request.neighbors.min(model.len().saturating_sub(1)).max(1);
    let table = embed::neighbor_table(&model, &terms, k)?;
    write_json(
        &out.join("neighbors.json"),
        &Artifact::new("neighbors", cfg, request.tsne.seed, inputs, &table),
    )?;
    Ok(projection)
}

/// Renders a saved `report.json` as the plain-text table.
pub fn render_report(path: &Path) -> Result<String, PipelineError> {
    let artifact: Artifact<MetricsReport> = read_json(path)?;
    Ok(artifact.payload.to_table())
}
