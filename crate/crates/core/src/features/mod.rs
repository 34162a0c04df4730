//! TF-IDF features for the text channel, the code channel and their
//! concatenation.

pub mod dataset;
mod sparse;
mod vocab;

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::language::LanguageId;
use crate::textprep::TokenSeq;

pub use dataset::{FeatureChannel, Featurizer, FeaturizerConfig};
pub use sparse::SparseVector;
pub use vocab::{fit_vocabulary, vectorize, Vocabulary};

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("cannot fit a vocabulary on zero documents")]
    NoDocuments,
    #[error("min_df must be at least 1")]
    ZeroMinDf,
    #[error("empty {channel} vocabulary: no term appears in at least {min_df} documents")]
    EmptyVocabulary { channel: Channel, min_df: usize },
    #[error("invalid sparse vector: {0}")]
    InvalidVector(String),
    #[error("feature matrix has {rows} rows but {labels} labels")]
    LabelMismatch { rows: usize, labels: usize },
    #[error("row {row} has dimension {found}, expected {expected}")]
    DimMismatch { row: usize, found: usize, expected: usize },
    #[error("vocabulary file: {0}")]
    VocabFormat(String),
    #[error("triplet file line {line}: {reason}")]
    Triplet { line: usize, reason: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Which part of a question a feature space is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Text,
    Code,
}

impl std::str::FromStr for Channel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(Channel::Text),
            "code" => Ok(Channel::Code),
            other => Err(format!("unknown channel `{other}` (expected text or code)")),
        }
    }
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Channel::Text => "text",
            Channel::Code => "code",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CodeTokenizer {
    /// Also emit every non-word, non-space character as its own token.
    pub punct_tokens: bool,
}

/// Lowercased runs of letters, digits and underscores of length two or
/// more, in document order.
pub fn tokenize_code(snippet: &str) -> TokenSeq {
    CodeTokenizer::default().tokenize(snippet)
}

impl CodeTokenizer {
    pub fn tokenize(&self, snippet: &str) -> TokenSeq {
        let mut out = Vec::new();
        let mut run = String::new();
        let flush = |run: &mut String, out: &mut Vec<String>| {
            if run.chars().count() >= 2 {
                out.push(run.to_lowercase());
            }
            run.clear();
        };
        for c in snippet.chars() {
            if c.is_alphanumeric() || c == '_' {
                run.push(c);
            } else {
                flush(&mut run, &mut out);
                if self.punct_tokens && !c.is_whitespace() {
                    out.push(c.to_string());
                }
            }
        }
        flush(&mut run, &mut out);
        TokenSeq(out)
    }
}

/// Concatenates a text-channel and a code-channel vector. Code indices are
/// shifted by the text dimension; neither block is renormalized.
pub fn combine_channels(text_vec: &SparseVector, code_vec: &SparseVector) -> SparseVector {
    let offset = text_vec.dim();
    let entries = text_vec
        .entries()
        .iter()
        .copied()
        .chain(code_vec.entries().iter().map(|&(i, w)| (i + offset, w)))
        .collect();
    SparseVector::from_sorted_unchecked(offset + code_vec.dim(), entries)
}

/// Rows of TF-IDF vectors with their labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    rows: Vec<SparseVector>,
    labels: Vec<LanguageId>,
    dim: usize,
    /// `(text_dim, code_dim)` for combined matrices.
    channel_dims: Option<(usize, usize)>,
}

impl FeatureMatrix {
    pub fn new(rows: Vec<SparseVector>, labels: Vec<LanguageId>, dim: usize) -> Result<Self, FeatureError> {
        if rows.len() != labels.len() {
            return Err(FeatureError::LabelMismatch {
                rows: rows.len(),
                labels: labels.len(),
            });
        }
        if let Some((row, v)) = rows.iter().enumerate().find(|(_, v)| v.dim() != dim) {
            return Err(FeatureError::DimMismatch {
                row,
                found: v.dim(),
                expected: dim,
            });
        }
        Ok(FeatureMatrix {
            rows,
            labels,
            dim,
            channel_dims: None,
        })
    }

    pub fn with_channel_dims(mut self, text_dim: usize, code_dim: usize) -> Self {
        debug_assert_eq!(text_dim + code_dim, self.dim);
        self.channel_dims = Some((text_dim, code_dim));
        self
    }

    /// Builds a matrix from dense rows (zeros dropped). Handy for small
    /// hand-made data sets.
    pub fn from_dense(rows: &[Vec<f64>], labels: Vec<LanguageId>) -> Result<Self, FeatureError> {
        let dim = rows.first().map_or(0, Vec::len);
        let sparse = rows.iter().map(|r| SparseVector::from_dense(r)).collect();
        Self::new(sparse, labels, dim)
    }

    pub fn rows(&self) -> &[SparseVector] {
        &self.rows
    }

    pub fn labels(&self) -> &[LanguageId] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn channel_dims(&self) -> Option<(usize, usize)> {
        self.channel_dims
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Distinct labels in code order.
    pub fn classes(&self) -> Vec<LanguageId> {
        let mut c = self.labels.clone();
        c.sort();
        c.dedup();
        c
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.entries().len()).sum()
    }

    pub fn subset(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            dim: self.dim,
            channel_dims: self.channel_dims,
        }
    }

    /// Writes the sparse triplet format: a header line, a
    /// `rows cols nnz` line, then one `row col weight` line per nonzero
    /// (0-based indices, shortest round-trip decimal weights).
    pub fn write_triplets<W: Write>(&self, mut out: W) -> Result<(), FeatureError> {
        writeln!(out, "%%polyglot-id sparse-triplet 1")?;
        writeln!(out, "{} {} {}", self.len(), self.dim, self.nnz())?;
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, w) in row.entries() {
                writeln!(out, "{r} {c} {w:?}")?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Reads the triplet format back as rows; labels are supplied by the
    /// caller since the file holds only weights.
    pub fn read_triplets<R: BufRead>(input: R, labels: Vec<LanguageId>) -> Result<FeatureMatrix, FeatureError> {
        let bad = |line: usize, reason: &str| FeatureError::Triplet {
            line,
            reason: reason.to_string(),
        };
        let mut lines = input.lines().enumerate();
        let mut next_data = || -> Result<Option<(usize, String)>, FeatureError> {
            for (i, l) in lines.by_ref() {
                let l = l?;
                if !l.starts_with('%') && !l.trim().is_empty() {
                    return Ok(Some((i + 1, l)));
                }
            }
            Ok(None)
        };
        let (hl, header) = next_data()?.ok_or_else(|| bad(1, "missing dimensions line"))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad(hl, "bad dimension")))
            .collect::<Result<_, _>>()?;
        let [n_rows, dim, nnz] = dims[..] else {
            return Err(bad(hl, "expected `rows cols nnz`"));
        };
        let mut entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_rows];
        let mut seen = 0;
        while let Some((ln, l)) = next_data()? {
            let parts: Vec<&str> = l.split_whitespace().collect();
            let [r, c, w] = parts[..] else {
                return Err(bad(ln, "expected `row col weight`"));
            };
            let r: usize = r.parse().map_err(|_| bad(ln, "bad row"))?;
            let c: usize = c.parse().map_err(|_| bad(ln, "bad column"))?;
            let w: f64 = w.parse().map_err(|_| bad(ln, "bad weight"))?;
            if r >= n_rows || c >= dim {
                return Err(bad(ln, "index out of range"));
            }
            entries[r].push((c, w));
            seen += 1;
        }
        if seen != nnz {
            return Err(bad(hl, "nonzero count does not match header"));
        }
        let rows = entries
            .into_iter()
            .map(|e| SparseVector::new(dim, e))
            .collect::<Result<Vec<_>, _>>()?;
        FeatureMatrix::new(rows, labels, dim)
    }
}
