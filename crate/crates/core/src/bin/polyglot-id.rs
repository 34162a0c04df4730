use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use polyglot_id::corpus::{sample_balanced, TagMap};
use polyglot_id::embed::{SkipGramParams, TsneParams};
use polyglot_id::features::{Channel, FeatureChannel};
use polyglot_id::models::ModelKind;
use polyglot_id::pipeline::{self, PipelineError, RunConfig, RunOverrides};
use polyglot_id::synth::{generate_corpus, write_posts_xml, SynthConfig, SYNTH_SEED};
use polyglot_id::LanguageId;

#[derive(Parser)]
#[command(
    name = "polyglot-id",
    version,
    about = "Predict the programming language of Q&A posts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract labeled questions from a Posts.xml dump into a JSON-lines corpus.
    Ingest {
        #[arg(long)]
        dump: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Tag-to-language TSV replacing the bundled map.
        #[arg(long)]
        tag_map: Option<PathBuf>,
        #[arg(long, default_value_t = polyglot_id::corpus::DEFAULT_MIN_SNIPPET_CHARS)]
        min_snippet_chars: usize,
    },
    /// Draw a balanced sample of at most N questions per language.
    Sample {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1000)]
        per_language: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Split 80:20, train, evaluate and write model, vocabulary and report.
    Train(RunArgs),
    /// Random hyperparameter search with stratified k-fold accuracy.
    Tune(RunArgs),
    /// Score a saved model on a corpus.
    Evaluate {
        #[arg(long)]
        model_dir: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        /// Directory for report.json, report.txt and confusion.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predict the language of one question; prints JSON.
    Predict {
        #[arg(long)]
        model_dir: PathBuf,
        #[arg(long)]
        title: Option<String>,
        #[arg(long)]
        body: Option<String>,
        #[arg(long)]
        snippet: Option<String>,
    },
    /// Code-channel accuracy per minimum snippet length.
    SnippetLengthStudy {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [10usize, 25, 50, 100])]
        thresholds: Vec<usize>,
    },
    /// Train skip-gram vectors for one language and channel.
    Embed {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        language: LanguageId,
        #[arg(long = "embed-channel", default_value = "code")]
        embed_channel: Channel,
        #[arg(long, default_value_t = 300)]
        dim: usize,
        #[arg(long, default_value_t = 5)]
        window: usize,
        #[arg(long, default_value_t = 5)]
        negatives: usize,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        #[arg(long, default_value_t = 0.025)]
        lr: f64,
    },
    /// Project the most frequent terms of an embedding to 2-D.
    Project {
        #[arg(long)]
        embedding: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.03)]
        fraction: f64,
        #[arg(long, default_value_t = 30.0)]
        perplexity: f64,
        #[arg(long, default_value_t = 1000)]
        iterations: usize,
        #[arg(long, default_value_t = 10)]
        neighbors: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print a saved report as a table, or its confusion matrix as CSV.
    Report {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        csv: bool,
    },
    /// Write the synthetic corpus as JSON lines (and optionally as a dump).
    GenerateCorpus {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = SYNTH_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        per_language: usize,
        /// Share of questions given a 10 to 40 character snippet.
        #[arg(long, default_value_t = 0.0)]
        short_snippet_fraction: f64,
        /// Also write a Posts.xml-style dump here.
        #[arg(long)]
        xml: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration; flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    channel: Option<FeatureChannel>,
    #[arg(long)]
    model: Option<ModelKind>,
    #[arg(long)]
    min_df: Option<usize>,
    #[arg(long)]
    min_snippet_chars: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    per_language: Option<usize>,
    #[arg(long)]
    no_stem: bool,
    #[arg(long)]
    no_stopwords: bool,
    #[arg(long)]
    min_token_len: Option<usize>,
    #[arg(long)]
    code_punct_tokens: bool,
    /// Model hyperparameter as key=value; repeatable.
    #[arg(long = "param")]
    params: Vec<String>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, PipelineError> {
        let hyperparams = self
            .params
            .iter()
            .map(|p| pipeline::parse_hyperparam(p))
            .collect::<Result<_, _>>()?;
        let overrides = RunOverrides {
            channel: self.channel,
            model: self.model,
            seed: self.seed,
            min_df: self.min_df,
            min_snippet_chars: self.min_snippet_chars,
            per_language: self.per_language,
            code_punct_tokens: self.code_punct_tokens.then_some(true),
            folds: self.folds,
            budget: self.budget,
            stem: self.no_stem.then_some(false),
            remove_stopwords: self.no_stopwords.then_some(false),
            min_token_len: self.min_token_len,
            hyperparams,
            corpus: self.corpus.clone(),
            out_dir: self.out.clone(),
            model_dir: None,
        };
        Ok(RunConfig::load(self.config.as_deref())?.apply(&overrides))
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable")
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Ingest {
            dump,
            out,
            tag_map,
            min_snippet_chars,
        } => {
            let tags = match tag_map {
                Some(p) => TagMap::from_tsv(&std::fs::read_to_string(&p).map_err(|e| PipelineError::Io {
                    path: p.clone(),
                    message: e.to_string(),
                })?)?,
                None => TagMap::bundled(),
            };
            let (corpus, summary) = pipeline::ingest(&dump, &tags, min_snippet_chars)?;
            pipeline::save_corpus(&corpus, &out)?;
            println!("{}", to_json(&summary));
        }
        Command::Sample {
            corpus,
            out,
            per_language,
            seed,
        } => {
            let input = pipeline::load_corpus(&corpus)?;
            let sampled = sample_balanced(&input.corpus, per_language, seed)?;
            pipeline::save_corpus(&sampled, &out)?;
            for w in &sampled.warnings {
                eprintln!("warning: {w}");
            }
            println!("{}", to_json(&sampled.counts));
        }
        Command::Train(args) => {
            let outcome = pipeline::run_train_eval(&args.resolve()?)?;
            print!("{}", outcome.report.to_table());
        }
        Command::Tune(args) => {
            let result = pipeline::run_tune(&args.resolve()?)?;
            let best = result.outcome.best_trial();
            println!(
                "best trial {} mean accuracy {:.4}: {}",
                best.index,
                best.mean_accuracy.unwrap_or(0.0),
                to_json(&result.best_hyperparams)
            );
        }
        Command::Evaluate { model_dir, corpus, out } => {
            let model = pipeline::LoadedModel::load(&model_dir)?;
            let input = pipeline::load_corpus(&corpus)?;
            let report = pipeline::run_evaluate(&model, &input.corpus)?;
            if let Some(out) = out {
                let seed = model.file.metadata["seed"].as_u64().unwrap_or(0);
                let inputs = [
                    ("corpus".to_string(), input.sha256),
                    (
                        "model".to_string(),
                        pipeline::sha256_hex(model.file.to_json().as_bytes()),
                    ),
                ]
                .into();
                pipeline::write_report(&out, &report, &model.file.metadata["config"], seed, &inputs)?;
            }
            print!("{}", report.to_table());
        }
        Command::Predict {
            model_dir,
            title,
            body,
            snippet,
        } => {
            let model = pipeline::LoadedModel::load(&model_dir)?;
            let p = pipeline::predict(&model, &pipeline::PredictInput { title, body, snippet })?;
            println!("{}", to_json(&p));
        }
        Command::SnippetLengthStudy { run, thresholds } => {
            let mut config = run.resolve()?;
            config.channel = FeatureChannel::Code;
            let results = pipeline::run_snippet_study(&config, &thresholds)?;
            print!("{}", pipeline::snippet_study_table(&results));
        }
        Command::Embed {
            run,
            language,
            embed_channel,
            dim,
            window,
            negatives,
            epochs,
            lr,
        } => {
            let config = run.resolve()?;
            let request = pipeline::EmbedRequest {
                language,
                channel: embed_channel,
                params: SkipGramParams {
                    dim,
                    window,
                    negatives,
                    epochs,
                    initial_lr: lr,
                    min_count: 1,
                    seed: config.seed,
                },
            };
            let model = pipeline::run_embed(&config, &request)?;
            println!(
                "{} terms, loss {:.4} -> {:.4}",
                model.len(),
                model.loss_trace.first().copied().unwrap_or(0.0),
                model.loss_trace.last().copied().unwrap_or(0.0)
            );
        }
        Command::Project {
            embedding,
            out,
            fraction,
            perplexity,
            iterations,
            neighbors,
            seed,
        } => {
            let request = pipeline::ProjectRequest {
                fraction,
                neighbors,
                tsne: TsneParams {
                    perplexity,
                    iterations,
                    seed,
                    ..TsneParams::default()
                },
            };
            let p = pipeline::run_project(&embedding, &out, &request)?;
            let first = p.kl_trace.first().map_or(0.0, |k| k.1);
            let last = p.kl_trace.last().map_or(0.0, |k| k.1);
            println!("{} points, KL {first:.4} -> {last:.4}", p.points.len());
        }
        Command::Report { report, csv } => {
            if csv {
                let a: pipeline::Artifact<polyglot_id::eval::MetricsReport> = pipeline::read_json(&report)?;
                print!("{}", a.payload.confusion.to_csv());
            } else {
                print!("{}", pipeline::render_report(&report)?);
            }
        }
        Command::GenerateCorpus {
            out,
            seed,
            per_language,
            short_snippet_fraction,
            xml,
        } => {
            let corpus = generate_corpus(&SynthConfig {
                seed,
                per_language,
                short_snippet_fraction,
                ..SynthConfig::default()
            });
            pipeline::save_corpus(&corpus, &out)?;
            if let Some(xml) = xml {
                let mut buf = Vec::new();
                write_posts_xml(&corpus.questions, &mut buf).expect("in-memory write");
                pipeline::write_text(&xml, &String::from_utf8(buf).expect("utf-8"))?;
            }
            println!("{}", to_json(&corpus.counts));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("POLYGLOT_ID_WORKERS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = e.to_string().replace(['\n', '\r'], " ");
            eprintln!("error: {line}");
            ExitCode::FAILURE
        }
    }
}
