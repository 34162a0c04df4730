//! Streams a `Posts.xml` dump into labeled questions and draws a balanced
//! sample. Without an argument a small dump is generated first.
//!
//! ```text
//! cargo run --example ingest_dump -- [path/to/Posts.xml]
//! ```

use std::fs::File;
use std::io::BufReader;

use polyglot_id::corpus::{
    extract_question, parse_posts_stream, sample_balanced, Corpus, TagMap, DEFAULT_MIN_SNIPPET_CHARS,
};
use polyglot_id::synth::{generate_corpus, write_posts_xml, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = match std::env::args().nth(1) {
        Some(p) => std::path::PathBuf::from(p),
        None => {
            let corpus = generate_corpus(&SynthConfig {
                per_language: 20,
                ..SynthConfig::default()
            });
            let path = std::env::temp_dir().join("polyglot-id-example-posts.xml");
            write_posts_xml(&corpus.questions, File::create(&path)?)?;
            path
        }
    };
    let tags = TagMap::bundled();
    let mut questions = Vec::new();
    let mut skipped = 0;
    for row in parse_posts_stream(BufReader::new(File::open(&path)?)) {
        match row {
            Ok(post) => questions.extend(extract_question(&post, &tags, DEFAULT_MIN_SNIPPET_CHARS)),
            Err(e) if e.is_recoverable() => skipped += 1,
            Err(e) => return Err(e.into()),
        }
    }
    let corpus = Corpus::from_questions(questions);
    println!(
        "{}: {} questions, {} malformed rows skipped",
        path.display(),
        corpus.len(),
        skipped
    );
    for (lang, n) in &corpus.counts {
        println!("  {lang:<12} {n}");
    }
    let sample = sample_balanced(&corpus, 5, 0)?;
    println!("balanced sample of 5 per language: {} questions", sample.len());
    if let Some(q) = sample.questions.first() {
        println!("first: [{}] {}\n{}", q.label, q.title, q.snippet);
    }
    Ok(())
}
