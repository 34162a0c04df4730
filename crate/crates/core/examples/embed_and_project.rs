//! Trains skip-gram vectors on one language's code snippets, lists nearest
//! neighbors and projects the most frequent terms to 2-D.
//!
//! ```text
//! cargo run --release --example embed_and_project -- [language] [out.csv]
//! ```

use polyglot_id::embed::{
    language_documents, most_similar, project_top_terms, train_skipgram, write_projection_csv, SkipGramParams,
    TsneParams,
};
use polyglot_id::features::{Channel, FeatureChannel, FeaturizerConfig};
use polyglot_id::synth::{generate_corpus, SynthConfig};
use polyglot_id::LanguageId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let language: LanguageId = std::env::args().nth(1).unwrap_or_else(|| "java".into()).parse()?;
    let corpus = generate_corpus(&SynthConfig::default());
    let docs = language_documents(
        &corpus.questions,
        language,
        Channel::Code,
        &FeaturizerConfig::new(FeatureChannel::Code, 1),
    );
    let model = train_skipgram(
        &docs,
        &SkipGramParams {
            dim: 50,
            ..SkipGramParams::default()
        },
    )?;
    println!(
        "{language}: {} terms, loss per epoch {:?}",
        model.len(),
        model.loss_trace
    );
    let top = &model.terms[model
        .frequencies
        .iter()
        .enumerate()
        .max_by_key(|&(i, f)| (f, std::cmp::Reverse(i)))
        .map(|(i, _)| i)
        .unwrap_or(0)];
    for n in most_similar(&model, top, 5)? {
        println!("  {top} ~ {} ({:.3})", n.term, n.cosine);
    }
    // The bundled corpus has a small vocabulary, so project a larger share
    // at a lower perplexity than the defaults.
    let projection = project_top_terms(
        &model,
        0.5,
        &TsneParams {
            perplexity: 10.0,
            ..TsneParams::default()
        },
    )?;
    println!("KL trace: {:?}", projection.kl_trace);
    let out = std::env::args()
        .nth(2)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("projection.csv"));
    write_projection_csv(&projection, &model, std::fs::File::create(&out)?)?;
    println!("wrote {} points to {}", projection.points.len(), out.display());
    Ok(())
}
