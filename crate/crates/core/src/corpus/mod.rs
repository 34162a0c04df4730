//! Corpus construction: dump ingestion, question extraction, balanced
//! sampling and the JSON-lines corpus file.

mod dump;
pub mod markup;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::language::LanguageId;

pub use dump::{parse_posts_stream, parse_tags, DumpError, PostStream};

pub const DEFAULT_MIN_SNIPPET_CHARS: usize = 10;

const BUNDLED_TAG_MAP: &str = include_str!("../../data/language_tags.tsv");

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error(transparent)]
    Dump(#[from] DumpError),
    #[error("per_language must be at least 1")]
    EmptySampleRequest,
    #[error("tag map line {line}: {reason}")]
    TagMap { line: usize, reason: String },
    #[error("corpus line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("corpus line {line}: duplicate question id {id}")]
    DuplicateId { line: usize, id: u64 },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// A question row as it appears in the dump, with XML escapes decoded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPost {
    pub id: u64,
    pub post_type: u8,
    pub title: String,
    pub body_markup: String,
    pub tags: Vec<String>,
}

/// One labeled sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: u64,
    pub title: String,
    pub body_text: String,
    pub snippet: String,
    pub label: LanguageId,
}

impl Question {
    /// Title and body joined, the input of the text channel.
    pub fn text(&self) -> String {
        if self.body_text.is_empty() {
            self.title.clone()
        } else {
            format!("{}\n{}", self.title, self.body_text)
        }
    }

    pub fn snippet_chars(&self) -> usize {
        self.snippet.chars().count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    pub questions: Vec<Question>,
    pub counts: BTreeMap<LanguageId, usize>,
    /// Non-fatal notes, e.g. languages with no samples.
    pub warnings: Vec<String>,
}

impl Corpus {
    pub fn from_questions(questions: Vec<Question>) -> Self {
        let mut counts = BTreeMap::new();
        for q in &questions {
            *counts.entry(q.label).or_insert(0) += 1;
        }
        Corpus {
            questions,
            counts,
            warnings: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }

    /// Languages with at least one question, in code order.
    pub fn languages(&self) -> Vec<LanguageId> {
        self.counts.iter().filter(|(_, &n)| n > 0).map(|(&l, _)| l).collect()
    }

    pub fn filter<F: Fn(&Question) -> bool>(&self, keep: F) -> Corpus {
        Corpus::from_questions(self.questions.iter().filter(|q| keep(q)).cloned().collect())
    }

    /// Writes one JSON object per line, LF terminated.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<(), CorpusError> {
        for q in &self.questions {
            serde_json::to_writer(&mut out, q).map_err(|source| CorpusError::Json { line: 0, source })?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Corpus, CorpusError> {
        let mut questions = Vec::new();
        let mut seen = BTreeSet::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let q: Question =
                serde_json::from_str(&line).map_err(|source| CorpusError::Json { line: i + 1, source })?;
            if !seen.insert(q.id) {
                return Err(CorpusError::DuplicateId { line: i + 1, id: q.id });
            }
            questions.push(q);
        }
        Ok(Corpus::from_questions(questions))
    }
}

/// Maps Stack Overflow tags (base and version tags) onto languages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagMap {
    map: HashMap<String, LanguageId>,
}

impl TagMap {
    /// The tag map shipped in `data/language_tags.tsv`.
    pub fn bundled() -> Self {
        Self::from_tsv(BUNDLED_TAG_MAP).expect("bundled tag map is valid")
    }

    pub fn from_tsv(src: &str) -> Result<Self, CorpusError> {
        let mut map = HashMap::new();
        for (i, line) in src.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (tag, lang) = line.split_once('\t').ok_or_else(|| CorpusError::TagMap {
                line: i + 1,
                reason: "expected `tag<TAB>language`".into(),
            })?;
            let lang: LanguageId = lang
                .parse()
                .map_err(|e: crate::language::UnknownLanguage| CorpusError::TagMap {
                    line: i + 1,
                    reason: e.to_string(),
                })?;
            map.insert(tag.trim().to_lowercase(), lang);
        }
        Ok(TagMap { map })
    }

    pub fn get(&self, tag: &str) -> Option<LanguageId> {
        self.map.get(tag).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Distinct languages named by `tags`; unknown tags are ignored.
    pub fn languages_of(&self, tags: &[String]) -> BTreeSet<LanguageId> {
        tags.iter().filter_map(|t| self.get(t)).collect()
    }
}

/// Turns a raw post into a labeled question, or `None` when it is filtered
/// out (zero or several languages, no code block, snippet too short).
pub fn extract_question(post: &RawPost, tags: &TagMap, min_snippet_chars: usize) -> Option<Question> {
    let langs = tags.languages_of(&post.tags);
    if langs.len() != 1 {
        return None;
    }
    let label = *langs.iter().next()?;
    let parts = markup::split_body(&post.body_markup);
    if parts.code_blocks.is_empty() {
        return None;
    }
    let snippet = parts.code_blocks.join("\n");
    if snippet.chars().count() < min_snippet_chars {
        return None;
    }
    Some(Question {
        id: post.id,
        title: markup::collapse_whitespace(&post.title),
        body_text: parts.text,
        snippet,
        label,
    })
}

/// Draws up to `per_language` questions of every language without
/// replacement. Selected questions keep their original relative order.
/// Languages with no questions at all are listed with a zero count and a
/// warning.
pub fn sample_balanced(corpus: &Corpus, per_language: usize, seed: u64) -> Result<Corpus, CorpusError> {
    if per_language == 0 {
        return Err(CorpusError::EmptySampleRequest);
    }
    let mut by_lang: BTreeMap<LanguageId, Vec<usize>> = BTreeMap::new();
    for (i, q) in corpus.questions.iter().enumerate() {
        by_lang.entry(q.label).or_default().push(i);
    }
    let mut keep = vec![false; corpus.questions.len()];
    for (lang, positions) in &by_lang {
        if positions.len() <= per_language {
            positions.iter().for_each(|&p| keep[p] = true);
        } else {
            let mut rng = crate::rng::seeded(seed, lang.code() as u64);
            for j in index::sample(&mut rng, positions.len(), per_language) {
                keep[positions[j]] = true;
            }
        }
    }
    let questions = corpus
        .questions
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(q, _)| q.clone())
        .collect();
    let mut out = Corpus::from_questions(questions);
    for lang in LanguageId::ALL {
        if let std::collections::btree_map::Entry::Vacant(slot) = out.counts.entry(lang) {
            slot.insert(0);
            out.warnings.push(format!("no questions available for {lang}"));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn post(tags: &[&str], body: &str) -> RawPost {
        RawPost {
            id: 1,
            post_type: 1,
            title: "How to  do it".into(),
            body_markup: body.into(),
            tags: tags.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn q(id: u64, label: LanguageId) -> Question {
        Question {
            id,
            title: format!("t{id}"),
            body_text: String::new(),
            snippet: "0123456789".into(),
            label,
        }
    }

    #[test]
    fn multi_language_posts_are_dropped() {
        let p = post(&["java", "python"], "<pre><code>System.out.println(1);</code></pre>");
        assert_eq!(extract_question(&p, &TagMap::bundled(), 10), None);
    }

    #[test]
    fn version_tags_map_and_blocks_merge() {
        let b1 = "a".repeat(30);
        let b2 = "b".repeat(30);
        let p = post(
            &["python-3.x"],
            &format!("<p>text</p><pre><code>{b1}</code></pre><pre><code>{b2}</code></pre>"),
        );
        let q = extract_question(&p, &TagMap::bundled(), 10).unwrap();
        assert_eq!(q.label, LanguageId::Python);
        assert_eq!(q.snippet, format!("{b1}\n{b2}"));
        assert_eq!(q.body_text, "text");
        assert_eq!(q.title, "How to do it");
    }

    #[test]
    fn short_or_missing_snippet_is_dropped() {
        let map = TagMap::bundled();
        assert_eq!(
            extract_question(&post(&["java"], "<pre><code>int x</code></pre>"), &map, 10),
            None
        );
        assert_eq!(
            extract_question(&post(&["java"], "<p>no code <code>here</code></p>"), &map, 10),
            None
        );
    }

    #[test]
    fn unknown_tags_are_ignored_and_same_language_tags_collapse() {
        let map = TagMap::bundled();
        let p = post(
            &["java", "java-8", "spring", "sql-server"],
            "<pre><code>class A {}</code></pre>",
        );
        assert_eq!(extract_question(&p, &map, 5).unwrap().label, LanguageId::Java);
        assert_eq!(map.get("sql-server"), None);
        assert_eq!(map.get("c++11"), Some(LanguageId::Cpp));
        assert_eq!(map.get("java-7"), Some(LanguageId::Java));
    }

    #[test]
    fn sampling_keeps_everything_when_short() {
        let qs: Vec<_> = (0..7).map(|i| q(i, LanguageId::CoffeeScript)).collect();
        let c = Corpus::from_questions(qs.clone());
        let s = sample_balanced(&c, 10_000, 1).unwrap();
        assert_eq!(s.questions, qs);
        assert_eq!(s.counts[&LanguageId::CoffeeScript], 7);
        assert_eq!(s.counts[&LanguageId::Lua], 0);
        assert_eq!(s.warnings.len(), 23);
    }

    #[test]
    fn sampling_is_deterministic_and_order_preserving() {
        let qs: Vec<_> = (0..100)
            .map(|i| q(i, if i % 2 == 0 { LanguageId::Go } else { LanguageId::Lua }))
            .collect();
        let c = Corpus::from_questions(qs);
        let a = sample_balanced(&c, 10, 42).unwrap();
        let b = sample_balanced(&c, 10, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.counts[&LanguageId::Go], 10);
        assert_eq!(a.counts[&LanguageId::Lua], 10);
        let ids: Vec<u64> = a.questions.iter().map(|q| q.id).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
        let mut buf_a = Vec::new();
        let mut buf_b = Vec::new();
        a.write_jsonl(&mut buf_a).unwrap();
        b.write_jsonl(&mut buf_b).unwrap();
        assert_eq!(buf_a, buf_b);
        assert_ne!(sample_balanced(&c, 10, 43).unwrap(), a);
    }

    #[test]
    fn zero_per_language_is_rejected() {
        let c = Corpus::from_questions(vec![q(1, LanguageId::C)]);
        assert!(matches!(
            sample_balanced(&c, 0, 0),
            Err(CorpusError::EmptySampleRequest)
        ));
    }

    #[test]
    fn jsonl_round_trip_and_duplicate_detection() {
        let c = Corpus::from_questions(vec![q(1, LanguageId::CSharp), q(2, LanguageId::VbNet)]);
        let mut buf = Vec::new();
        c.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "{\"id\":1,\"title\":\"t1\",\"body_text\":\"\",\"snippet\":\"0123456789\",\"label\":\"c#\"}\n"
        ));
        assert_eq!(Corpus::read_jsonl(&buf[..]).unwrap(), c);
        let dup = format!("{text}{}", text.lines().next().unwrap());
        assert!(matches!(
            Corpus::read_jsonl(dup.as_bytes()),
            Err(CorpusError::DuplicateId { id: 1, .. })
        ));
    }
}
