//! Skip-gram with negative sampling.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::EmbedError;
use crate::textprep::TokenSeq;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SkipGramParams {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub initial_lr: f64,
    /// Terms seen fewer times are dropped before training.
    pub min_count: u64,
    pub seed: u64,
}

impl Default for SkipGramParams {
    fn default() -> Self {
        SkipGramParams {
            dim: 300,
            window: 5,
            negatives: 5,
            epochs: 5,
            initial_lr: 0.025,
            min_count: 1,
            seed: 0,
        }
    }
}

/// Terms (alphabetical) with corpus frequencies and two `V × dim`
/// row-major matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingModel {
    pub dim: usize,
    pub terms: Vec<String>,
    pub frequencies: Vec<u64>,
    pub input_vectors: Vec<f64>,
    pub output_vectors: Vec<f64>,
    /// Mean negative-sampling loss per epoch.
    pub loss_trace: Vec<f64>,
}

impl EmbeddingModel {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.terms.binary_search_by(|t| t.as_str().cmp(term)).ok()
    }

    pub fn input_vector(&self, i: usize) -> &[f64] {
        &self.input_vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn output_vector(&self, i: usize) -> &[f64] {
        &self.output_vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vector(&self, term: &str) -> Result<&[f64], EmbedError> {
        self.index_of(term)
            .map(|i| self.input_vector(i))
            .ok_or_else(|| EmbedError::UnknownTerm(term.to_string()))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Cumulative unigram^0.75 distribution for negative sampling.
fn noise_cdf(freqs: &[u64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = freqs
        .iter()
        .map(|&f| {
            acc += (f as f64).powf(0.75);
            acc
        })
        .collect();
    for c in &mut cdf {
        *c /= acc;
    }
    cdf
}

fn draw(cdf: &[f64], u: f64) -> usize {
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

/// Trains single-threaded, so equal inputs and seed give bitwise-equal
/// vectors. Every pair within `window` positions is used (no window
/// shrinking, no subsampling).
pub fn train_skipgram(docs: &[TokenSeq], params: &SkipGramParams) -> Result<EmbeddingModel, EmbedError> {
    if docs.is_empty() {
        return Err(EmbedError::InvalidParam("no documents".into()));
    }
    if params.dim < 2 {
        return Err(EmbedError::InvalidParam(format!(
            "dim must be at least 2, got {}",
            params.dim
        )));
    }
    if params.window == 0 || params.epochs == 0 {
        return Err(EmbedError::InvalidParam("window and epochs must be at least 1".into()));
    }
    if !(params.initial_lr > 0.0 && params.initial_lr.is_finite()) {
        return Err(EmbedError::InvalidParam(format!(
            "initial_lr must be positive, got {}",
            params.initial_lr
        )));
    }
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for d in docs {
        for t in d.iter() {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    counts.retain(|_, c| *c >= params.min_count);
    if counts.len() < 2 {
        return Err(EmbedError::VocabularyTooSmall(counts.len()));
    }
    let terms: Vec<String> = counts.keys().map(|t| t.to_string()).collect();
    let frequencies: Vec<u64> = counts.values().copied().collect();
    let index: BTreeMap<&str, usize> = counts.keys().enumerate().map(|(i, t)| (*t, i)).collect();
    let encoded: Vec<Vec<usize>> = docs
        .iter()
        .map(|d| d.iter().filter_map(|t| index.get(t.as_str()).copied()).collect())
        .collect();

    let dim = params.dim;
    let v = terms.len();
    let mut rng = crate::rng::seeded(params.seed, 0);
    let mut input: Vec<f64> = (0..v * dim).map(|_| (rng.random::<f64>() - 0.5) / dim as f64).collect();
    let mut output = vec![0.0; v * dim];
    let cdf = noise_cdf(&frequencies);

    let pairs_per_epoch: usize = encoded
        .iter()
        .map(|d| {
            (0..d.len())
                .map(|i| i.saturating_sub(params.window)..(i + params.window + 1).min(d.len()))
                .map(|r| r.len() - 1)
                .sum::<usize>()
        })
        .sum();
    let total = (pairs_per_epoch * params.epochs).max(1) as f64;
    let mut processed = 0usize;
    let mut grad = vec![0.0; dim];
    let mut loss_trace = Vec::with_capacity(params.epochs);

    for _ in 0..params.epochs {
        let mut loss = 0.0;
        for doc in &encoded {
            for (i, &center) in doc.iter().enumerate() {
                let lo = i.saturating_sub(params.window);
                let hi = (i + params.window + 1).min(doc.len());
                for (j, &context) in doc.iter().enumerate().take(hi).skip(lo) {
                    if j == i {
                        continue;
                    }
                    let lr = params.initial_lr * (1.0 - processed as f64 / total).max(1e-4);
                    processed += 1;
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    let c = center * dim;
                    for k in 0..=params.negatives {
                        let (target, label) = if k == 0 {
                            (context, 1.0)
                        } else {
                            let t = draw(&cdf, rng.random::<f64>());
                            if t == context {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let o = target * dim;
                        let s = sigmoid(dot(&input[c..c + dim], &output[o..o + dim]));
                        loss -= if label == 1.0 {
                            s.max(1e-12).ln()
                        } else {
                            (1.0 - s).max(1e-12).ln()
                        };
                        let g = (label - s) * lr;
                        for d in 0..dim {
                            grad[d] += g * output[o + d];
                            output[o + d] += g * input[c + d];
                        }
                    }
                    for d in 0..dim {
                        input[c + d] += grad[d];
                    }
                }
            }
        }
        loss_trace.push(loss / pairs_per_epoch.max(1) as f64);
    }
    if input.iter().chain(&output).any(|x| !x.is_finite()) {
        return Err(EmbedError::NonFinite);
    }
    Ok(EmbeddingModel {
        dim,
        terms,
        frequencies,
        input_vectors: input,
        output_vectors: output,
        loss_trace,
    })
}

/// Cosine similarity, 0 when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot(a, b) / (na * nb)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub term: String,
    pub cosine: f64,
}

/// The `k` nearest terms by input-vector cosine, query excluded, ties by
/// term order.
pub fn most_similar(model: &EmbeddingModel, term: &str, k: usize) -> Result<Vec<Neighbor>, EmbedError> {
    if k == 0 {
        return Err(EmbedError::InvalidParam("k must be at least 1".into()));
    }
    let q = model
        .index_of(term)
        .ok_or_else(|| EmbedError::UnknownTerm(term.to_string()))?;
    let qv = model.input_vector(q);
    let mut scored: Vec<(usize, f64)> = (0..model.len())
        .filter(|&i| i != q)
        .map(|i| (i, cosine(qv, model.input_vector(i))))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(scored
        .into_iter()
        .take(k)
        .map(|(i, c)| Neighbor {
            term: model.terms[i].clone(),
            cosine: c,
        })
        .collect())
}

/// The `ceil(fraction·V)` most frequent terms, frequency ties by term order.
pub fn select_top_frequent(model: &EmbeddingModel, fraction: f64) -> Result<Vec<String>, EmbedError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(EmbedError::InvalidParam(format!(
            "fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let n = top_count(model.len(), fraction);
    let mut order: Vec<usize> = (0..model.len()).collect();
    order.sort_by(|&a, &b| model.frequencies[b].cmp(&model.frequencies[a]).then(a.cmp(&b)));
    Ok(order.into_iter().take(n).map(|i| model.terms[i].clone()).collect())
}

/// `ceil(fraction·v)`, tolerant of representation error such as
/// `0.03 · 100`.
pub fn top_count(v: usize, fraction: f64) -> usize {
    ((fraction * v as f64 - 1e-9).ceil().max(0.0) as usize).min(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(s: &str) -> TokenSeq {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn small(seed: u64) -> SkipGramParams {
        SkipGramParams {
            dim: 16,
            epochs: 3,
            seed,
            ..SkipGramParams::default()
        }
    }

    #[test]
    fn shapes_and_determinism() {
        let docs = vec![seq("a b c a b"), seq("c d e")];
        let m = train_skipgram(&docs, &small(4)).unwrap();
        assert_eq!(m.terms, ["a", "b", "c", "d", "e"]);
        assert_eq!(m.frequencies, [2, 2, 2, 1, 1]);
        assert_eq!(m.vector("c").unwrap().len(), 16);
        assert!(m.input_vectors.iter().all(|x| x.is_finite()));
        assert_eq!(m, train_skipgram(&docs, &small(4)).unwrap());
        assert_ne!(m, train_skipgram(&docs, &small(5)).unwrap());
    }

    #[test]
    fn errors() {
        assert!(matches!(
            train_skipgram(&[seq("a a a")], &small(0)),
            Err(EmbedError::VocabularyTooSmall(1))
        ));
        assert!(train_skipgram(&[], &small(0)).is_err());
        let p = SkipGramParams { dim: 1, ..small(0) };
        assert!(train_skipgram(&[seq("a b")], &p).is_err());
    }

    #[test]
    fn co_occurrence_drives_similarity() {
        let mut docs = vec![seq("a b"); 500];
        docs.extend(vec![seq("x y"); 500]);
        let m = train_skipgram(&docs, &small(1)).unwrap();
        let a = m.input_vector(m.index_of("a").unwrap());
        let b_out = m.output_vector(m.index_of("b").unwrap());
        let y_out = m.output_vector(m.index_of("y").unwrap());
        assert!(cosine(a, b_out) > cosine(a, y_out));
    }

    #[test]
    fn loss_decreases() {
        let docs: Vec<TokenSeq> = (0..60)
            .map(|i| seq(if i % 2 == 0 { "p q r s" } else { "t u v w" }))
            .collect();
        let m = train_skipgram(&docs, &SkipGramParams { epochs: 5, ..small(2) }).unwrap();
        assert!(m.loss_trace.last().unwrap() < &m.loss_trace[0], "{:?}", m.loss_trace);
    }

    #[test]
    fn cosine_basics() {
        assert!((cosine(&[3.0, 4.0], &[3.0, 4.0]) - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 2.0]), 0.0);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 2.0]), 0.0);
    }

    #[test]
    fn neighbors_and_top_frequent() {
        let m = EmbeddingModel {
            dim: 2,
            terms: vec!["a".into(), "b".into(), "c".into(), "d".into()],
            frequencies: vec![1, 5, 5, 2],
            input_vectors: vec![1.0, 0.0, 1.0, 0.1, 1.0, -0.1, 0.0, 1.0],
            output_vectors: vec![0.0; 8],
            loss_trace: vec![],
        };
        let n = most_similar(&m, "a", 3).unwrap();
        assert_eq!(n.iter().map(|x| x.term.as_str()).collect::<Vec<_>>(), ["b", "c", "d"]);
        assert!(matches!(most_similar(&m, "zz", 1), Err(EmbedError::UnknownTerm(t)) if t == "zz"));
        assert_eq!(select_top_frequent(&m, 0.5).unwrap(), ["b", "c"]);
        assert_eq!(select_top_frequent(&m, 1.0).unwrap().len(), 4);
        assert!(select_top_frequent(&m, 0.0).is_err());
        assert_eq!(top_count(100, 0.03), 3);
        assert_eq!(top_count(50, 0.03), 2);
        assert_eq!(top_count(7, 1.0), 7);
    }
}
