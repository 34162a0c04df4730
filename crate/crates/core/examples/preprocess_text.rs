//! Runs the text preprocessing pipeline with and without each step.
//!
//! ```text
//! cargo run --example preprocess_text -- "How do I call getElementById from my_module?"
//! ```

use polyglot_id::textprep::{preprocess_text, PipelineConfig};

fn main() {
    let text = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "How can I call document.getElementById() when the pages are loading in Python3?".into());
    let full = PipelineConfig::default();
    let variants = [
        ("full pipeline", full.clone()),
        (
            "no stemming",
            PipelineConfig {
                stem: false,
                ..full.clone()
            },
        ),
        (
            "keep stop words",
            PipelineConfig {
                remove_stopwords: false,
                ..full.clone()
            },
        ),
        (
            "no entity protection",
            PipelineConfig {
                retain_entities: false,
                ..full.clone()
            },
        ),
        ("skeleton", PipelineConfig::skeleton()),
    ];
    println!("input: {text}");
    for (name, config) in variants {
        println!("{name:<22} {:?}", preprocess_text(&text, &config).0);
    }
}
