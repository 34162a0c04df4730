//! Synthetic labeled corpora for tests, demos and the acceptance gates.
//!
//! Every language gets a text pool and a code pool of pseudo-words. A fixed
//! share of each pool is common to all languages, so any two pools overlap
//! by exactly that share. Questions mix pool words with generic filler and
//! occasional words borrowed from another language.

use std::collections::BTreeSet;
use std::io::Write;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Question};
use crate::language::LanguageId;
use crate::textprep::TokenSeq;

/// Seed of the bundled corpus.
pub const SYNTH_SEED: u64 = 2017;

/// The twelve languages of the bundled corpus.
pub const SYNTH_LANGUAGES: [LanguageId; 12] = [
    LanguageId::C,
    LanguageId::CSharp,
    LanguageId::Cpp,
    LanguageId::Go,
    LanguageId::Java,
    LanguageId::JavaScript,
    LanguageId::Php,
    LanguageId::Python,
    LanguageId::R,
    LanguageId::Ruby,
    LanguageId::Sql,
    LanguageId::Swift,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub languages: Vec<LanguageId>,
    pub per_language: usize,
    pub seed: u64,
    pub pool_size: usize,
    /// Share of each pool common to all languages.
    pub shared_fraction: f64,
    /// Probability that a word comes from the question's own pool.
    pub signal_rate: f64,
    /// Probability that a word comes from another language's pool.
    pub confusion_rate: f64,
    /// Share of questions whose snippet is cut to 10..40 characters.
    pub short_snippet_fraction: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            languages: SYNTH_LANGUAGES.to_vec(),
            per_language: 200,
            seed: SYNTH_SEED,
            pool_size: 50,
            shared_fraction: 0.2,
            signal_rate: 0.3,
            confusion_rate: 0.1,
            short_snippet_fraction: 0.0,
        }
    }
}

impl SynthConfig {
    /// The bundled corpus with a share of short snippets injected.
    pub fn with_short_snippets(fraction: f64) -> Self {
        SynthConfig {
            short_snippet_fraction: fraction,
            ..SynthConfig::default()
        }
    }
}

const ONSETS: [&str; 16] = [
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "kr",
];
const NUCLEI: [&str; 5] = ["a", "o", "u", "i", "e"];

/// Distinct pseudo-words of `syllables` syllables, avoiding `taken`.
fn coin_words(rng: &mut ChaCha8Rng, n: usize, syllables: usize, taken: &mut BTreeSet<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut w = String::new();
        for _ in 0..syllables {
            w.push_str(ONSETS.choose(rng).expect("nonempty"));
            w.push_str(NUCLEI.choose(rng).expect("nonempty"));
        }
        w.push(*b"xnkm".choose(rng).expect("nonempty") as char);
        if taken.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

struct Pools {
    text: Vec<Vec<String>>,
    code: Vec<Vec<String>>,
    filler: Vec<String>,
    code_filler: Vec<String>,
}

fn build_pools(config: &SynthConfig, rng: &mut ChaCha8Rng) -> Pools {
    let mut taken = BTreeSet::new();
    let shared = ((config.pool_size as f64) * config.shared_fraction).round() as usize;
    let unique = config.pool_size - shared;
    let mut make = |syllables: usize, rng: &mut ChaCha8Rng| {
        let common = coin_words(rng, shared, syllables, &mut taken);
        config
            .languages
            .iter()
            .map(|_| {
                let mut pool = coin_words(rng, unique, syllables, &mut taken);
                pool.extend(common.iter().cloned());
                pool
            })
            .collect::<Vec<_>>()
    };
    let text = make(3, rng);
    let code = make(2, rng);
    let filler = coin_words(rng, 150, 3, &mut taken);
    let code_filler = coin_words(rng, 60, 2, &mut taken);
    Pools {
        text,
        code,
        filler,
        code_filler,
    }
}

fn pick_word<'a>(
    rng: &mut ChaCha8Rng,
    config: &SynthConfig,
    own: usize,
    pools: &'a [Vec<String>],
    filler: &'a [String],
) -> &'a str {
    let u: f64 = rng.random();
    if u < config.signal_rate {
        pools[own].choose(rng).expect("nonempty pool")
    } else if u < config.signal_rate + config.confusion_rate && pools.len() > 1 {
        let mut other = rng.random_range(0..pools.len() - 1);
        if other >= own {
            other += 1;
        }
        pools[other].choose(rng).expect("nonempty pool")
    } else {
        filler.choose(rng).expect("nonempty filler")
    }
}

fn sentence(rng: &mut ChaCha8Rng, config: &SynthConfig, own: usize, pools: &Pools, words: usize) -> String {
    (0..words)
        .map(|_| pick_word(rng, config, own, &pools.text, &pools.filler))
        .collect::<Vec<_>>()
        .join(" ")
}

fn snippet(rng: &mut ChaCha8Rng, config: &SynthConfig, own: usize, pools: &Pools, target_chars: usize) -> String {
    let mut lines: Vec<String> = Vec::new();
    let mut len = 0;
    while len < target_chars {
        let mut ident = || pick_word(rng, config, own, &pools.code, &pools.code_filler).to_string();
        let (a, b, c) = (ident(), ident(), ident());
        let line = match rng.random_range(0..4) {
            0 => format!("{a} = {b}({c});"),
            1 => format!("{a}.{b}_{c}(1, 2)"),
            2 => format!("if ({a} > {b}) {{ {c}(); }}"),
            _ => format!("{a} {b} {c}"),
        };
        len += line.len() + 1;
        lines.push(line);
    }
    lines.join("\n")
}

/// Cuts at a character boundary, then trims trailing spaces.
fn cut(s: &str, max_chars: usize) -> String {
    s.chars().take(max_chars).collect::<String>().trim_end().to_string()
}

/// Generates the corpus. Ids run from 1 and languages are interleaved.
pub fn generate_corpus(config: &SynthConfig) -> Corpus {
    let mut rng = crate::rng::seeded(config.seed, 0);
    let pools = build_pools(config, &mut rng);
    let k = config.languages.len();
    let mut questions = Vec::with_capacity(k * config.per_language);
    for i in 0..k * config.per_language {
        let own = i % k;
        let title_len = rng.random_range(4..=8);
        let body_len = rng.random_range(20..=40);
        let title = sentence(&mut rng, config, own, &pools, title_len);
        let body_text = sentence(&mut rng, config, own, &pools, body_len);
        let short = rng.random::<f64>() < config.short_snippet_fraction;
        let snippet = if short {
            let max = rng.random_range(10..=40);
            let s = snippet(&mut rng, config, own, &pools, max);
            cut(&s, max)
        } else {
            let target = rng.random_range(120..=400);
            snippet(&mut rng, config, own, &pools, target)
        };
        questions.push(Question {
            id: i as u64 + 1,
            title,
            body_text,
            snippet,
            label: config.languages[own],
        });
    }
    Corpus::from_questions(questions)
}

/// Writes questions as a `Posts.xml`-style dump (one answer row after
/// every question row) tagged with each language's canonical tag.
pub fn write_posts_xml<W: Write>(questions: &[Question], mut out: W) -> std::io::Result<()> {
    use quick_xml::escape::escape;
    writeln!(out, "<?xml version=\"1.0\" encoding=\"utf-8\"?>")?;
    writeln!(out, "<posts>")?;
    for q in questions {
        let body = format!(
            "<p>{}</p>\n<pre><code>{}</code></pre>",
            escape(&q.body_text),
            escape(&q.snippet)
        );
        writeln!(
            out,
            "  <row Id=\"{}\" PostTypeId=\"1\" Title=\"{}\" Body=\"{}\" Tags=\"{}\" />",
            q.id,
            escape(&q.title),
            escape(&body),
            escape(format!("<{}>", q.label.as_str()))
        )?;
        writeln!(
            out,
            "  <row Id=\"{}\" PostTypeId=\"2\" ParentId=\"{}\" Body=\"{}\" />",
            q.id + 1_000_000,
            q.id,
            escape("<p>answer</p>")
        )?;
    }
    writeln!(out, "</posts>")
}

/// Documents drawn from two disjoint vocabularies. Returns the documents
/// and the two term blocks.
pub fn two_block_corpus(
    seed: u64,
    docs_per_block: usize,
    block_vocab: usize,
    doc_len: usize,
) -> (Vec<TokenSeq>, [Vec<String>; 2]) {
    let mut rng = crate::rng::seeded(seed, 1);
    let mut taken = BTreeSet::new();
    let a = coin_words(&mut rng, block_vocab, 2, &mut taken);
    let b = coin_words(&mut rng, block_vocab, 2, &mut taken);
    let mut docs = Vec::with_capacity(2 * docs_per_block);
    for i in 0..2 * docs_per_block {
        let block = if i % 2 == 0 { &a } else { &b };
        docs.push(
            (0..doc_len)
                .map(|_| block.choose(&mut rng).expect("nonempty block").clone())
                .collect(),
        );
    }
    (docs, [a, b])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_shape() {
        let c = generate_corpus(&SynthConfig::default());
        assert_eq!(c.len(), 2400);
        assert_eq!(c.languages(), {
            let mut l = SYNTH_LANGUAGES.to_vec();
            l.sort();
            l
        });
        assert!(c.counts.values().all(|&n| n == 200));
        assert!(c.questions.iter().all(|q| q.snippet_chars() >= 100));
        assert_eq!(c, generate_corpus(&SynthConfig::default()));
    }

    #[test]
    fn pools_overlap_by_shared_fraction() {
        let config = SynthConfig::default();
        let mut rng = crate::rng::seeded(config.seed, 0);
        let pools = build_pools(&config, &mut rng);
        for p in [&pools.text, &pools.code] {
            let a: BTreeSet<_> = p[0].iter().collect();
            let b: BTreeSet<_> = p[5].iter().collect();
            assert_eq!(a.len(), 50);
            assert_eq!(a.intersection(&b).count(), 10);
        }
    }

    #[test]
    fn short_snippets_are_injected() {
        let c = generate_corpus(&SynthConfig::with_short_snippets(0.3));
        let short = c.questions.iter().filter(|q| q.snippet_chars() < 100).count();
        assert!((500..950).contains(&short), "{short}");
        assert!(c.questions.iter().all(|q| q.snippet_chars() >= 1));
    }

    #[test]
    fn dump_round_trips_through_ingest() {
        let config = SynthConfig {
            per_language: 3,
            ..SynthConfig::default()
        };
        let c = generate_corpus(&config);
        let mut xml = Vec::new();
        write_posts_xml(&c.questions, &mut xml).unwrap();
        let tags = crate::corpus::TagMap::bundled();
        let back: Vec<Question> = crate::corpus::parse_posts_stream(&xml[..])
            .map(|r| r.unwrap())
            .filter_map(|p| crate::corpus::extract_question(&p, &tags, 1))
            .collect();
        assert_eq!(back, c.questions);
    }

    #[test]
    fn two_blocks_are_disjoint() {
        let (docs, [a, b]) = two_block_corpus(1, 10, 8, 12);
        assert_eq!(docs.len(), 20);
        assert!(a.iter().all(|t| !b.contains(t)));
    }
}
