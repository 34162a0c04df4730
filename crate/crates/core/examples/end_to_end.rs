//! Generates the bundled synthetic corpus and trains one model per channel.
//!
//! ```text
//! cargo run --release --example end_to_end -- [nb|rf|gbt]
//! ```

use std::time::Instant;

use polyglot_id::eval::{holdout_evaluate, SplitSpec};
use polyglot_id::features::{FeatureChannel, FeaturizerConfig};
use polyglot_id::models::{ModelKind, ModelSpec};
use polyglot_id::synth::{generate_corpus, SynthConfig, SYNTH_SEED};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kind: ModelKind = std::env::args().nth(1).unwrap_or_else(|| "gbt".into()).parse()?;
    let corpus = generate_corpus(&SynthConfig::default());
    let majority = *corpus.counts.values().max().unwrap_or(&0) as f64 / corpus.len() as f64;
    println!("{} questions, majority baseline {:.3}", corpus.len(), majority);
    for channel in [FeatureChannel::Text, FeatureChannel::Code, FeatureChannel::Combined] {
        let start = Instant::now();
        let run = holdout_evaluate(
            &corpus.questions,
            &FeaturizerConfig::new(channel, 2),
            &ModelSpec::default_for(kind, SYNTH_SEED),
            &SplitSpec::with_seed(SYNTH_SEED),
        )?;
        println!(
            "{:<8} {kind}: accuracy {:.3}, macro F1 {:.3} ({} features, {:.1?})",
            channel.to_string(),
            run.report.accuracy,
            run.report.macro_f1,
            run.featurizer.dim(),
            start.elapsed()
        );
    }
    Ok(())
}
