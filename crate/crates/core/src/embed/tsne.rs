//! Exact t-SNE.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::EmbedError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneParams {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iterations: usize,
    pub seed: u64,
}

impl Default for TsneParams {
    fn default() -> Self {
        TsneParams {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iterations: 250,
            seed: 0,
        }
    }
}

pub const KL_RECORD_EVERY: usize = 50;
const PERPLEXITY_TOL: f64 = 1e-5;
const MIN_GAIN: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedPoint {
    pub term: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection2D {
    /// In input order.
    pub points: Vec<ProjectedPoint>,
    /// `(iteration, KL)` at iteration 0, every 50 iterations and at the end.
    pub kl_trace: Vec<(usize, f64)>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Conditional row `p_{j|i}` for precision `beta`, plus its entropy (nats).
fn conditional_row(d: &[f64], i: usize, beta: f64, row: &mut [f64]) -> f64 {
    let min = d
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &v)| v)
        .fold(f64::INFINITY, f64::min);
    let mut sum = 0.0;
    for (j, r) in row.iter_mut().enumerate() {
        *r = if j == i { 0.0 } else { (-(d[j] - min) * beta).exp() };
        sum += *r;
    }
    let mut h = 0.0;
    for (j, r) in row.iter_mut().enumerate() {
        *r /= sum;
        if j != i {
            h += beta * (d[j] - min) * *r;
        }
    }
    h + sum.ln()
}

/// Symmetrized joint affinities `(P + Pᵀ)/2n` (row-major `n × n`), with
/// each row's bandwidth found by bisection to match `perplexity`.
pub fn joint_probabilities(points: &[Vec<f64>], perplexity: f64) -> Vec<f64> {
    let n = points.len();
    let target = perplexity.ln();
    let mut cond = vec![0.0; n * n];
    let mut d = vec![0.0; n];
    for i in 0..n {
        for (j, dj) in d.iter_mut().enumerate() {
            *dj = sq_dist(&points[i], &points[j]);
        }
        let row = &mut cond[i * n..(i + 1) * n];
        let (mut lo, mut hi, mut beta) = (0.0f64, f64::INFINITY, 1.0f64);
        for _ in 0..200 {
            let h = conditional_row(&d, i, beta, row);
            if (h - target).abs() < PERPLEXITY_TOL {
                break;
            }
            if h > target {
                lo = beta;
                beta = if hi.is_infinite() {
                    beta * 2.0
                } else {
                    (beta + hi) / 2.0
                };
            } else {
                hi = beta;
                beta = (beta + lo) / 2.0;
            }
        }
    }
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            p[i * n + j] = ((cond[i * n + j] + cond[j * n + i]) / (2.0 * n as f64)).max(1e-12);
        }
        p[i * n + i] = 0.0;
    }
    p
}

/// Student-t kernel values `1/(1+|yᵢ−yⱼ|²)` and their off-diagonal sum.
fn kernel(y: &[[f64; 2]]) -> (Vec<f64>, f64) {
    let n = y.len();
    let mut num = vec![0.0; n * n];
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let dx = y[i][0] - y[j][0];
                let dy = y[i][1] - y[j][1];
                let v = 1.0 / (1.0 + dx * dx + dy * dy);
                num[i * n + j] = v;
                sum += v;
            }
        }
    }
    (num, sum)
}

/// KL(P‖Q) for a layout `y`.
pub fn kl_divergence(p: &[f64], y: &[[f64; 2]]) -> f64 {
    let n = y.len();
    let (num, sum) = kernel(y);
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            let pij = p[i * n + j];
            if i != j && pij > 0.0 {
                kl += pij * (pij / (num[i * n + j] / sum).max(1e-300)).ln();
            }
        }
    }
    kl
}

/// Gradient of KL(exaggeration·P‖Q) with respect to each point.
pub fn kl_gradient(p: &[f64], y: &[[f64; 2]], exaggeration: f64) -> Vec<[f64; 2]> {
    let n = y.len();
    let (num, sum) = kernel(y);
    let mut grad = vec![[0.0; 2]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let w = 4.0 * (exaggeration * p[i * n + j] - num[i * n + j] / sum) * num[i * n + j];
            grad[i][0] += w * (y[i][0] - y[j][0]);
            grad[i][1] += w * (y[i][1] - y[j][1]);
        }
    }
    grad
}

/// Projects labeled vectors to 2-D. Points are processed in term order, so
/// permuting the input permutes the output identically. Terms must be
/// distinct.
pub fn tsne_project(terms: &[String], vectors: &[Vec<f64>], params: &TsneParams) -> Result<Projection2D, EmbedError> {
    let n = terms.len();
    if vectors.len() != n {
        return Err(EmbedError::InvalidParam(format!(
            "{n} terms but {} vectors",
            vectors.len()
        )));
    }
    if params.perplexity.is_nan() || params.perplexity <= 0.0 {
        return Err(EmbedError::InvalidParam("perplexity must be positive".into()));
    }
    let needed = (3.0 * params.perplexity).floor() as usize + 1;
    if n < needed {
        return Err(EmbedError::TooFewPoints { have: n, needed });
    }
    if vectors
        .iter()
        .any(|v| v.len() != vectors[0].len() || v.iter().any(|x| !x.is_finite()))
    {
        return Err(EmbedError::InvalidParam(
            "vectors must share one dimension and be finite".into(),
        ));
    }
    if vectors.iter().all(|v| v == &vectors[0]) {
        return Err(EmbedError::IdenticalPoints);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| terms[a].cmp(&terms[b]));
    if order.windows(2).any(|w| terms[w[0]] == terms[w[1]]) {
        return Err(EmbedError::InvalidParam("terms must be distinct".into()));
    }
    let canonical: Vec<Vec<f64>> = order.iter().map(|&i| vectors[i].clone()).collect();
    let p = joint_probabilities(&canonical, params.perplexity);

    let mut rng = crate::rng::seeded(params.seed, 0);
    let normal = Normal::new(0.0, 1e-2).expect("valid normal");
    let mut y: Vec<[f64; 2]> = (0..n)
        .map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)])
        .collect();
    let mut velocity = vec![[0.0; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut kl_trace = vec![(0, kl_divergence(&p, &y))];

    for it in 0..params.iterations {
        let early = it < params.exaggeration_iterations;
        let exaggeration = if early { params.early_exaggeration } else { 1.0 };
        let momentum = if early { 0.5 } else { 0.8 };
        let grad = kl_gradient(&p, &y, exaggeration);
        for i in 0..n {
            for d in 0..2 {
                gains[i][d] = if (grad[i][d] > 0.0) != (velocity[i][d] > 0.0) {
                    gains[i][d] + 0.2
                } else {
                    (gains[i][d] * 0.8).max(MIN_GAIN)
                };
                velocity[i][d] = momentum * velocity[i][d] - params.learning_rate * gains[i][d] * grad[i][d];
                y[i][d] += velocity[i][d];
            }
        }
        for d in 0..2 {
            let mean = y.iter().map(|p| p[d]).sum::<f64>() / n as f64;
            y.iter_mut().for_each(|p| p[d] -= mean);
        }
        let done = it + 1;
        if done % KL_RECORD_EVERY == 0 || done == params.iterations {
            kl_trace.push((done, kl_divergence(&p, &y)));
        }
    }
    if y.iter().flatten().any(|v| !v.is_finite()) {
        return Err(EmbedError::NonFinite);
    }
    let mut points = vec![
        ProjectedPoint {
            term: String::new(),
            x: 0.0,
            y: 0.0
        };
        n
    ];
    for (c, &i) in order.iter().enumerate() {
        points[i] = ProjectedPoint {
            term: terms[i].clone(),
            x: y[c][0],
            y: y[c][1],
        };
    }
    Ok(Projection2D { points, kl_trace })
}
