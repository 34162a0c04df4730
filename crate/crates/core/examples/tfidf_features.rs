//! Fits text and code vocabularies on a few questions and prints their
//! TF-IDF vectors.
//!
//! ```text
//! cargo run --example tfidf_features
//! ```

use polyglot_id::features::{fit_vocabulary, tokenize_code, vectorize, Channel};
use polyglot_id::textprep::{preprocess_text, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let docs = [
        (
            "Reading a file line by line",
            "with open(path) as f:\n    for line in f: print(line)",
        ),
        ("Reading a file into a list", "lines = open(path).readlines()"),
        ("Printing a list", "for x in xs: print(x)"),
    ];
    let config = PipelineConfig::default();
    let text: Vec<_> = docs.iter().map(|(t, _)| preprocess_text(t, &config)).collect();
    let code: Vec<_> = docs.iter().map(|(_, c)| tokenize_code(c)).collect();
    for (channel, seqs) in [(Channel::Text, &text), (Channel::Code, &code)] {
        let vocab = fit_vocabulary(seqs, 1, channel)?;
        println!(
            "{channel} vocabulary ({} terms, hash {})",
            vocab.len(),
            &vocab.content_hash()[..12]
        );
        for (i, term) in vocab.terms().iter().enumerate() {
            println!("  {term:<10} df={} idf={:.4}", vocab.doc_freq(i), vocab.idf(i));
        }
        for (d, seq) in seqs.iter().enumerate() {
            let v = vectorize(seq, &vocab);
            let entries: Vec<String> = v
                .entries()
                .iter()
                .map(|&(j, w)| format!("{}:{w:.3}", vocab.terms()[j]))
                .collect();
            println!("  doc {d}: |v|={:.3} {}", v.norm(), entries.join(" "));
        }
    }
    Ok(())
}
