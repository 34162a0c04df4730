//! Corpus-level featurization for the three channels.

use serde::{Deserialize, Serialize};

use super::{
    combine_channels, fit_vocabulary, vectorize, Channel, CodeTokenizer, FeatureError, FeatureMatrix, SparseVector,
    Vocabulary,
};
use crate::corpus::Question;
use crate::textprep::{preprocess_text, PipelineConfig, TokenSeq};

/// Which channel(s) a model is trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureChannel {
    Text,
    Code,
    Combined,
}

impl FeatureChannel {
    pub fn uses_text(self) -> bool {
        matches!(self, FeatureChannel::Text | FeatureChannel::Combined)
    }

    pub fn uses_code(self) -> bool {
        matches!(self, FeatureChannel::Code | FeatureChannel::Combined)
    }
}

impl std::fmt::Display for FeatureChannel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FeatureChannel::Text => "text",
            FeatureChannel::Code => "code",
            FeatureChannel::Combined => "combined",
        })
    }
}

impl std::str::FromStr for FeatureChannel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(FeatureChannel::Text),
            "code" => Ok(FeatureChannel::Code),
            "combined" => Ok(FeatureChannel::Combined),
            other => Err(format!("unknown channel `{other}` (expected text, code or combined)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeaturizerConfig {
    pub channel: FeatureChannel,
    pub min_df: usize,
    pub text: PipelineConfig,
    pub code_punct_tokens: bool,
}

impl FeaturizerConfig {
    pub fn new(channel: FeatureChannel, min_df: usize) -> Self {
        FeaturizerConfig {
            channel,
            min_df,
            text: PipelineConfig::default(),
            code_punct_tokens: false,
        }
    }

    pub fn text_tokens(&self, title: &str, body: &str) -> TokenSeq {
        let joined = if body.is_empty() {
            title.to_string()
        } else {
            format!("{title}\n{body}")
        };
        preprocess_text(&joined, &self.text)
    }

    pub fn code_tokens(&self, snippet: &str) -> TokenSeq {
        CodeTokenizer {
            punct_tokens: self.code_punct_tokens,
        }
        .tokenize(snippet)
    }

    /// Fits the vocabularies the channel needs on `questions`.
    pub fn fit(&self, questions: &[Question]) -> Result<Featurizer, FeatureError> {
        let text_vocab = if self.channel.uses_text() {
            let docs: Vec<TokenSeq> = questions
                .iter()
                .map(|q| self.text_tokens(&q.title, &q.body_text))
                .collect();
            Some(fit_vocabulary(&docs, self.min_df, Channel::Text)?)
        } else {
            None
        };
        let code_vocab = if self.channel.uses_code() {
            let docs: Vec<TokenSeq> = questions.iter().map(|q| self.code_tokens(&q.snippet)).collect();
            Some(fit_vocabulary(&docs, self.min_df, Channel::Code)?)
        } else {
            None
        };
        Ok(Featurizer {
            config: self.clone(),
            text_vocab,
            code_vocab,
        })
    }
}

/// Fitted vocabularies plus the preprocessing that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Featurizer {
    pub config: FeaturizerConfig,
    pub text_vocab: Option<Vocabulary>,
    pub code_vocab: Option<Vocabulary>,
}

impl Featurizer {
    pub fn dim(&self) -> usize {
        self.text_vocab.as_ref().map_or(0, Vocabulary::len) + self.code_vocab.as_ref().map_or(0, Vocabulary::len)
    }

    /// Vectorizes the parts of one question. Parts the channel ignores may
    /// be empty.
    pub fn vectorize_parts(&self, title: &str, body: &str, snippet: &str) -> SparseVector {
        let text = self
            .text_vocab
            .as_ref()
            .map(|v| vectorize(&self.config.text_tokens(title, body), v));
        let code = self
            .code_vocab
            .as_ref()
            .map(|v| vectorize(&self.config.code_tokens(snippet), v));
        match (text, code) {
            (Some(t), Some(c)) => combine_channels(&t, &c),
            (Some(t), None) => t,
            (None, Some(c)) => c,
            (None, None) => SparseVector::zero(0),
        }
    }

    pub fn vectorize_question(&self, q: &Question) -> SparseVector {
        self.vectorize_parts(&q.title, &q.body_text, &q.snippet)
    }

    pub fn transform(&self, questions: &[Question]) -> FeatureMatrix {
        let rows = questions.iter().map(|q| self.vectorize_question(q)).collect();
        let labels = questions.iter().map(|q| q.label).collect();
        let m = FeatureMatrix::new(rows, labels, self.dim()).expect("rows share the featurizer dimension");
        match (&self.text_vocab, &self.code_vocab) {
            (Some(t), Some(c)) => m.with_channel_dims(t.len(), c.len()),
            _ => m,
        }
    }

    /// Channel name → vocabulary content hash.
    pub fn vocab_hashes(&self) -> std::collections::BTreeMap<String, String> {
        [&self.text_vocab, &self.code_vocab]
            .into_iter()
            .flatten()
            .map(|v| (v.channel().to_string(), v.content_hash()))
            .collect()
    }
}
