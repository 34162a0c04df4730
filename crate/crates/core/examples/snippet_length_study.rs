//! Code-channel accuracy as the minimum snippet length rises, on the
//! synthetic corpus with short snippets injected.
//!
//! ```text
//! cargo run --release --example snippet_length_study
//! ```

use polyglot_id::eval::{snippet_length_experiment, SnippetStudyConfig, SplitSpec};
use polyglot_id::features::{FeatureChannel, FeaturizerConfig};
use polyglot_id::models::{ModelKind, ModelSpec};
use polyglot_id::pipeline::snippet_study_table;
use polyglot_id::synth::{generate_corpus, SynthConfig, SYNTH_SEED};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = generate_corpus(&SynthConfig::with_short_snippets(0.3));
    let config = SnippetStudyConfig {
        featurizer: FeaturizerConfig::new(FeatureChannel::Code, 2),
        model: ModelSpec::default_for(ModelKind::Gbt, SYNTH_SEED),
        split: SplitSpec::with_seed(SYNTH_SEED),
    };
    let results = snippet_length_experiment(&corpus, &[10, 25, 50, 100, 10_000], &config)?;
    print!("{}", snippet_study_table(&results));
    Ok(())
}
