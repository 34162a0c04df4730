//! Word embeddings and their 2-D projection.

mod skipgram;
mod tsne;

pub use skipgram::{
    cosine, most_similar, select_top_frequent, top_count, train_skipgram, EmbeddingModel, Neighbor, SkipGramParams,
};
pub use tsne::{
    joint_probabilities, kl_divergence, kl_gradient, tsne_project, ProjectedPoint, Projection2D, TsneParams,
    KL_RECORD_EVERY,
};

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::Question;
use crate::features::{Channel, FeaturizerConfig};
use crate::language::LanguageId;
use crate::textprep::TokenSeq;

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("vocabulary has {0} term(s), at least 2 required")]
    VocabularyTooSmall(usize),
    #[error("unknown term `{0}`")]
    UnknownTerm(String),
    #[error("t-SNE needs at least {needed} points for this perplexity, got {have}")]
    TooFewPoints { have: usize, needed: usize },
    #[error("all points are identical")]
    IdenticalPoints,
    #[error("training produced non-finite values")]
    NonFinite,
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Token sequences of one language's questions for one channel, using the
/// same preprocessing as the classifiers.
pub fn language_documents(
    questions: &[Question],
    language: LanguageId,
    channel: Channel,
    config: &FeaturizerConfig,
) -> Vec<TokenSeq> {
    questions
        .iter()
        .filter(|q| q.label == language)
        .map(|q| match channel {
            Channel::Text => config.text_tokens(&q.title, &q.body_text),
            Channel::Code => config.code_tokens(&q.snippet),
        })
        .collect()
}

/// Projects the top `fraction` most frequent terms of `model`.
pub fn project_top_terms(
    model: &EmbeddingModel,
    fraction: f64,
    params: &TsneParams,
) -> Result<Projection2D, EmbedError> {
    let terms = select_top_frequent(model, fraction)?;
    let vectors: Vec<Vec<f64>> = terms
        .iter()
        .map(|t| model.vector(t).map(<[f64]>::to_vec))
        .collect::<Result<_, _>>()?;
    tsne_project(&terms, &vectors, params)
}

/// Writes `term,x,y,frequency` rows.
pub fn write_projection_csv<W: Write>(
    projection: &Projection2D,
    model: &EmbeddingModel,
    out: W,
) -> Result<(), EmbedError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["term", "x", "y", "frequency"])?;
    for p in &projection.points {
        let freq = model.index_of(&p.term).map_or(0, |i| model.frequencies[i]);
        w.write_record([p.term.clone(), p.x.to_string(), p.y.to_string(), freq.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborEntry {
    pub term: String,
    pub neighbors: Vec<Neighbor>,
}

/// Nearest neighbors for each listed term.
pub fn neighbor_table(model: &EmbeddingModel, terms: &[String], k: usize) -> Result<Vec<NeighborEntry>, EmbedError> {
    terms
        .iter()
        .map(|t| {
            Ok(NeighborEntry {
                term: t.clone(),
                neighbors: most_similar(model, t, k)?,
            })
        })
        .collect()
}
