//! Trains naive Bayes, a random forest and boosted trees on the combined
//! channel, prints their reports, and round-trips the boosted model through
//! its JSON file.
//!
//! ```text
//! cargo run --release --example train_classifiers
//! ```

use polyglot_id::eval::{evaluate_model, stratified_holdout, SplitSpec};
use polyglot_id::features::{FeatureChannel, FeaturizerConfig};
use polyglot_id::models::{Classifier, ModelFile, ModelKind, ModelSpec};
use polyglot_id::synth::{generate_corpus, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = generate_corpus(&SynthConfig {
        per_language: 80,
        ..SynthConfig::default()
    });
    let featurizer = FeaturizerConfig::new(FeatureChannel::Combined, 2).fit(&corpus.questions)?;
    let matrix = featurizer.transform(&corpus.questions);
    let (train, test) = stratified_holdout(&matrix, &SplitSpec::with_seed(7))?;
    println!(
        "{} train / {} test rows, {} features",
        train.len(),
        test.len(),
        matrix.dim()
    );

    for kind in [ModelKind::Nb, ModelKind::Rf, ModelKind::Gbt] {
        let spec = ModelSpec::default_for(kind, 7);
        let model = spec.fit(&train)?;
        let report = evaluate_model(&model, &test)?;
        println!("\n== {kind} {}", spec.hyperparams());
        print!("{}", report.to_table());
        if kind == ModelKind::Gbt {
            let file = ModelFile::new(
                model,
                spec.hyperparams(),
                featurizer.vocab_hashes(),
                serde_json::json!({}),
            );
            let back = ModelFile::from_json(&file.to_json())?;
            back.check_vocab_hashes(&featurizer.vocab_hashes())?;
            let q = &corpus.questions[0];
            let p = back.model.predict_proba(&featurizer.vectorize_question(q))?;
            println!(
                "reloaded model: first question ({}) -> {}",
                q.label,
                back.model.classes()[argmax(&p)]
            );
        }
    }
    Ok(())
}

fn argmax(p: &[f64]) -> usize {
    (0..p.len()).fold(0, |b, i| if p[i] > p[b] { i } else { b })
}
