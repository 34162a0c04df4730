use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Channel, FeatureError, SparseVector};
use crate::textprep::TokenSeq;

/// A fitted per-channel term index with smoothed idf weights.
///
/// Terms are stored alphabetically; a term's position is its feature index.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    channel: Channel,
    n_docs: usize,
    min_df: usize,
    terms: Vec<String>,
    doc_freq: Vec<usize>,
    idf: Vec<f64>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabFile {
    channel: Channel,
    n_docs: usize,
    min_df: usize,
    terms: Vec<TermEntry>,
}

#[derive(Serialize, Deserialize)]
struct TermEntry {
    term: String,
    df: usize,
    idf: f64,
}

/// `ln((1 + n_docs) / (1 + df)) + 1`
pub(crate) fn smoothed_idf(n_docs: usize, df: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// Keeps the terms that occur in at least `min_df` distinct documents.
pub fn fit_vocabulary(docs: &[TokenSeq], min_df: usize, channel: Channel) -> Result<Vocabulary, FeatureError> {
    if docs.is_empty() {
        return Err(FeatureError::NoDocuments);
    }
    if min_df == 0 {
        return Err(FeatureError::ZeroMinDf);
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        let mut seen: Vec<&str> = doc.iter().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        for t in seen {
            *df.entry(t).or_insert(0) += 1;
        }
    }
    let n_docs = docs.len();
    let (terms, doc_freq): (Vec<String>, Vec<usize>) = df
        .into_iter()
        .filter(|&(_, d)| d >= min_df)
        .map(|(t, d)| (t.to_string(), d))
        .unzip();
    if terms.is_empty() {
        return Err(FeatureError::EmptyVocabulary { channel, min_df });
    }
    Ok(Vocabulary::from_parts(channel, n_docs, min_df, terms, doc_freq))
}

impl Vocabulary {
    fn from_parts(channel: Channel, n_docs: usize, min_df: usize, terms: Vec<String>, doc_freq: Vec<usize>) -> Self {
        let idf = doc_freq.iter().map(|&d| smoothed_idf(n_docs, d)).collect();
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary {
            channel,
            n_docs,
            min_df,
            terms,
            doc_freq,
            idf,
            index,
        }
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn min_df(&self) -> usize {
        self.min_df
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn doc_freq(&self, index: usize) -> usize {
        self.doc_freq[index]
    }

    pub fn idf(&self, index: usize) -> f64 {
        self.idf[index]
    }

    pub fn to_json(&self) -> String {
        let file = VocabFile {
            channel: self.channel,
            n_docs: self.n_docs,
            min_df: self.min_df,
            terms: self
                .terms
                .iter()
                .zip(&self.doc_freq)
                .zip(&self.idf)
                .map(|((t, &df), &idf)| TermEntry {
                    term: t.clone(),
                    df,
                    idf,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("vocabulary serializes")
    }

    /// Parses a persisted vocabulary. Stored idf values must agree with
    /// the ones recomputed from `n_docs` and `df`.
    pub fn from_json(src: &str) -> Result<Self, FeatureError> {
        let file: VocabFile = serde_json::from_str(src).map_err(|e| FeatureError::VocabFormat(e.to_string()))?;
        if file.terms.windows(2).any(|w| w[0].term >= w[1].term) {
            return Err(FeatureError::VocabFormat("terms must be sorted and unique".into()));
        }
        for t in &file.terms {
            let expected = smoothed_idf(file.n_docs, t.df);
            if (expected - t.idf).abs() > 1e-12 || t.df < file.min_df {
                return Err(FeatureError::VocabFormat(format!(
                    "inconsistent statistics for term `{}`",
                    t.term
                )));
            }
        }
        let (terms, doc_freq) = file.terms.into_iter().map(|t| (t.term, t.df)).unzip();
        Ok(Self::from_parts(
            file.channel,
            file.n_docs,
            file.min_df,
            terms,
            doc_freq,
        ))
    }

    /// SHA-256 of the persisted JSON form; models record it to detect a
    /// mismatched vocabulary at load time.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

/// Raw-count TF times idf, L2-normalized. Out-of-vocabulary tokens are
/// ignored; a document with no known token maps to the zero vector.
pub fn vectorize(doc: &TokenSeq, vocab: &Vocabulary) -> SparseVector {
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for t in doc.iter() {
        if let Some(i) = vocab.index_of(t) {
            *counts.entry(i).or_insert(0.0) += 1.0;
        }
    }
    let mut entries: Vec<(usize, f64)> = counts.into_iter().map(|(i, c)| (i, c * vocab.idf(i))).collect();
    let norm = entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
    if norm > 0.0 {
        entries.iter_mut().for_each(|e| e.1 /= norm);
    }
    SparseVector::from_sorted_unchecked(vocab.len(), entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(d: &[&[&str]]) -> Vec<TokenSeq> {
        d.iter().map(|ts| ts.iter().copied().collect()).collect()
    }

    #[test]
    fn min_df_cutoff() {
        let d = docs(&[&["a", "b"], &["b", "c"], &["b", "d"]]);
        let v = fit_vocabulary(&d, 2, Channel::Text).unwrap();
        assert_eq!(v.terms(), &["b"]);
        assert_eq!(v.doc_freq(0), 3);
        assert_eq!(v.idf(0), 1.0);
        let v = fit_vocabulary(&d, 1, Channel::Text).unwrap();
        assert_eq!(v.terms(), &["a", "b", "c", "d"]);
    }

    #[test]
    fn fitting_errors() {
        assert!(matches!(
            fit_vocabulary(&[], 1, Channel::Code),
            Err(FeatureError::NoDocuments)
        ));
        let d = docs(&[&["a"]]);
        assert!(matches!(
            fit_vocabulary(&d, 0, Channel::Code),
            Err(FeatureError::ZeroMinDf)
        ));
        assert!(matches!(
            fit_vocabulary(&d, 2, Channel::Code),
            Err(FeatureError::EmptyVocabulary { min_df: 2, .. })
        ));
    }

    #[test]
    fn vectorize_examples() {
        let d = docs(&[&["b", "c"], &["b", "c"]]);
        let v = fit_vocabulary(&d, 1, Channel::Text).unwrap();
        assert_eq!(v.idf(0), 1.0);
        let single = vectorize(&["b", "b"].into_iter().collect(), &v);
        assert_eq!(single.entries(), &[(0, 1.0)]);
        let pair = vectorize(&["b", "c"].into_iter().collect(), &v);
        for &(_, w) in pair.entries() {
            assert!((w - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        }
        let oov = vectorize(&["zzz"].into_iter().collect(), &v);
        assert!(oov.entries().is_empty());
        assert_eq!(oov.norm(), 0.0);
    }

    #[test]
    fn json_round_trip_and_hash() {
        let d = docs(&[&["x", "y"], &["y"], &["y", "z", "x"]]);
        let v = fit_vocabulary(&d, 1, Channel::Code).unwrap();
        let json = v.to_json();
        assert!(json.contains("\"channel\": \"code\""));
        let back = Vocabulary::from_json(&json).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.content_hash(), v.content_hash());
        let other = fit_vocabulary(&d, 2, Channel::Code).unwrap();
        assert_ne!(other.content_hash(), v.content_hash());
        let tampered = json.replace("\"df\": 3", "\"df\": 2");
        assert!(Vocabulary::from_json(&tampered).is_err());
    }
}
