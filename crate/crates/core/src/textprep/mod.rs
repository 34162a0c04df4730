//! Title/body text cleaning: entity protection, non-alphanumeric removal,
//! tokenization, stop-word removal and Porter stemming.

pub mod porter;

use std::collections::BTreeSet;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

pub use porter::stem_token;

const BUNDLED_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

/// SHA-256 of `data/stopwords_en.txt`.
pub const STOPWORDS_SHA256: &str = "0b7510da23d0f77770d44716ea3a51b890d33b5df6353f7270eda8f27336fd00";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TextprepError {
    #[error("min_token_len must be at least 1")]
    ZeroMinTokenLen,
    #[error("stop-word removal is enabled but the stop-word list is empty")]
    EmptyStopwords,
}

/// Parses a stop-word file: one word per line, blank lines and `#`
/// comments ignored.
pub fn parse_stopwords(src: &str) -> BTreeSet<String> {
    src.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

pub fn bundled_stopwords() -> BTreeSet<String> {
    parse_stopwords(BUNDLED_STOPWORDS)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub strip_non_alphanumeric: bool,
    pub remove_stopwords: bool,
    pub retain_entities: bool,
    pub stem: bool,
    pub min_token_len: usize,
    pub stopword_list: BTreeSet<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            strip_non_alphanumeric: true,
            remove_stopwords: true,
            retain_entities: true,
            stem: true,
            min_token_len: 2,
            stopword_list: bundled_stopwords(),
        }
    }
}

impl PipelineConfig {
    /// Every step off, single-character tokens kept.
    pub fn skeleton() -> Self {
        PipelineConfig {
            strip_non_alphanumeric: false,
            remove_stopwords: false,
            retain_entities: false,
            stem: false,
            min_token_len: 1,
            stopword_list: BTreeSet::new(),
        }
    }

    pub fn validate(&self) -> Result<(), TextprepError> {
        if self.min_token_len == 0 {
            return Err(TextprepError::ZeroMinTokenLen);
        }
        if self.remove_stopwords && self.stopword_list.is_empty() {
            return Err(TextprepError::EmptyStopwords);
        }
        Ok(())
    }
}

/// Ordered lowercase tokens of one document.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSeq(pub Vec<String>);

impl TokenSeq {
    pub fn new(tokens: Vec<String>) -> Self {
        TokenSeq(tokens)
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }
}

impl Deref for TokenSeq {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

impl<S: Into<String>> FromIterator<S> for TokenSeq {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        TokenSeq(iter.into_iter().map(Into::into).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    /// Identifier-shaped token kept verbatim (no stemming, no length floor).
    pub entity: bool,
}

/// Strips leading and trailing characters that cannot belong to an
/// identifier.
fn identifier_core(word: &str) -> &str {
    word.trim_matches(|c: char| !(c.is_alphanumeric() || c == '_'))
}

/// camelCase, snake_case, dotted paths, or a digit touching a letter.
pub fn is_entity_shape(core: &str) -> bool {
    if core.is_empty() || !core.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.') {
        return false;
    }
    let chars: Vec<char> = core.chars().collect();
    let camel = chars
        .windows(2)
        .any(|w| w[0].is_ascii_lowercase() && w[1].is_ascii_uppercase());
    let snake = core.contains('_') && chars.iter().any(|c| c.is_ascii_alphanumeric());
    let digit_letter = chars.windows(2).any(|w| {
        (w[0].is_ascii_digit() && w[1].is_ascii_alphabetic()) || (w[0].is_ascii_alphabetic() && w[1].is_ascii_digit())
    });
    let dotted = core.contains('.') && {
        let segs: Vec<&str> = core.split('.').collect();
        segs.len() >= 2
            && segs
                .iter()
                .all(|s| s.len() >= 2 && s.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_'))
    };
    camel || snake || digit_letter || dotted
}

/// Runs the pipeline and keeps the entity flag of each surviving token.
pub fn preprocess_tokens(text: &str, config: &PipelineConfig) -> Vec<Token> {
    let min_len = config.min_token_len.max(1);
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        if config.retain_entities {
            let core = identifier_core(word);
            if is_entity_shape(core) {
                let text = core.to_lowercase();
                if !(config.remove_stopwords && config.stopword_list.contains(&text)) {
                    out.push(Token { text, entity: true });
                }
                continue;
            }
        }
        let cleaned: String = if config.strip_non_alphanumeric {
            word.chars()
                .map(|c| if c.is_alphanumeric() { c } else { ' ' })
                .collect()
        } else {
            word.to_string()
        };
        for piece in cleaned.split_whitespace() {
            if config.strip_non_alphanumeric && piece.chars().all(|c| c.is_numeric()) {
                continue;
            }
            let lower = piece.to_lowercase();
            if config.remove_stopwords && config.stopword_list.contains(&lower) {
                continue;
            }
            let stemmed = if config.stem { stem_token(&lower) } else { lower };
            // A stem can coincide with a stop word ("ones" -> "on").
            if config.remove_stopwords && config.stopword_list.contains(&stemmed) {
                continue;
            }
            if stemmed.chars().count() < min_len {
                continue;
            }
            out.push(Token {
                text: stemmed,
                entity: false,
            });
        }
    }
    out
}

pub fn preprocess_text(text: &str, config: &PipelineConfig) -> TokenSeq {
    TokenSeq(preprocess_tokens(text, config).into_iter().map(|t| t.text).collect())
}
