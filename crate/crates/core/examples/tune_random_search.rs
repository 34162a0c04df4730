//! Random search over the forest's hyperparameters with stratified k-fold
//! cross-validation.
//!
//! ```text
//! cargo run --release --example tune_random_search -- [budget]
//! ```

use polyglot_id::eval::{random_search, spec_trainer, HyperparamSpace};
use polyglot_id::features::{FeatureChannel, FeaturizerConfig};
use polyglot_id::models::{ModelKind, ModelSpec};
use polyglot_id::synth::{generate_corpus, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let budget: usize = std::env::args().nth(1).map(|b| b.parse()).transpose()?.unwrap_or(6);
    let corpus = generate_corpus(&SynthConfig {
        per_language: 40,
        ..SynthConfig::default()
    });
    let matrix = FeaturizerConfig::new(FeatureChannel::Text, 2)
        .fit(&corpus.questions)?
        .transform(&corpus.questions);
    let space = HyperparamSpace::default_for(ModelKind::Rf);
    let base = ModelSpec::default_for(ModelKind::Rf, 3);
    let outcome = random_search(&matrix, &space, budget, 5, 3, spec_trainer(base))?;
    for t in &outcome.trials {
        match t.mean_accuracy {
            Some(acc) => println!("trial {}: {:.4} {}", t.index, acc, serde_json::to_string(&t.config)?),
            None => println!("trial {}: failed: {}", t.index, t.error.as_deref().unwrap_or("")),
        }
    }
    println!("best: trial {}", outcome.best);
    Ok(())
}
