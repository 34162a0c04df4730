//! CART trees over sparse features, grown level by level with exact greedy
//! split search.
//!
//! A split sends a row left when its value is `<= threshold`. Thresholds
//! are midpoints between consecutive distinct values observed in the node,
//! so absent (zero) entries land on the side holding zero: left whenever
//! the threshold is positive. Ties in gain resolve to the lowest feature
//! index, then the lowest threshold.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::features::{FeatureMatrix, SparseVector};
use crate::language::LanguageId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node<L> {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf(L),
}

/// Flat node array; the root is `nodes[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree<L> {
    pub nodes: Vec<Node<L>>,
    pub max_depth: usize,
}

impl<L> Tree<L> {
    pub fn leaf(&self, v: &SparseVector) -> &L {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf(l) => return l,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if v.get(*feature) <= *threshold { *left } else { *right },
            }
        }
    }

    /// Length of the longest root-to-leaf path (a single leaf has depth 0).
    pub fn depth(&self) -> usize {
        fn go<L>(t: &Tree<L>, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = &L> {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf(l) => Some(l),
            Node::Split { .. } => None,
        })
    }

    pub fn n_splits(&self) -> usize {
        self.nodes.len() - self.leaves().count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Candidate features sampled per node; `None` means all.
    pub features_per_split: Option<usize>,
    pub seed: u64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 16,
            min_samples_leaf: 1,
            features_per_split: None,
            seed: 0,
        }
    }
}

/// Regularization for second-order (gradient/hessian) trees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderParams {
    pub lambda: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub min_child_weight: f64,
}

/// How a tree scores candidate splits.
#[derive(Debug, Clone, Copy)]
pub enum SplitCriterion<'a> {
    Gini,
    SecondOrder {
        gradients: &'a [f64],
        hessians: &'a [f64],
        params: SecondOrderParams,
    },
}

/// Classification tree whose leaves hold weighted class counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub classes: Vec<LanguageId>,
    pub dim: usize,
    pub tree: Tree<Vec<f64>>,
}

impl DecisionTree {
    pub fn class_distribution(&self, v: &SparseVector) -> &[f64] {
        self.tree.leaf(v)
    }

    /// Index (into `classes`) of the leaf's majority class.
    pub fn predict_index(&self, v: &SparseVector) -> usize {
        argmax(self.tree.leaf(v))
    }

    pub fn predict(&self, v: &SparseVector) -> Result<LanguageId, ModelError> {
        check_dim(self.dim, v)?;
        Ok(self.classes[self.predict_index(v)])
    }
}

/// Regression tree whose leaves hold unscaled leaf weights.
pub type RegressionTree = Tree<f64>;

#[derive(Debug, Clone, PartialEq)]
pub enum FittedTree {
    Classification(DecisionTree),
    Regression(RegressionTree),
}

/// First index of the maximum.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn check_dim(expected: usize, v: &SparseVector) -> Result<(), ModelError> {
    if v.dim() != expected {
        return Err(ModelError::DimMismatch {
            expected,
            found: v.dim(),
        });
    }
    Ok(())
}

pub fn gini(counts: &[f64]) -> f64 {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|c| (c / total).powi(2)).sum::<f64>()
}

/// `½[G_L²/(H_L+λ) + G_R²/(H_R+λ) − (G_L+G_R)²/(H_L+H_R+λ)] − γ`
pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64, gamma: f64) -> f64 {
    let score = |g: f64, h: f64| g * g / (h + lambda);
    0.5 * (score(gl, hl) + score(gr, hr) - score(gl + gr, hl + hr)) - gamma
}

pub fn soft_threshold(g: f64, alpha: f64) -> f64 {
    if g > alpha {
        g - alpha
    } else if g < -alpha {
        g + alpha
    } else {
        0.0
    }
}

/// `−soft_threshold(G, α) / (H + λ)`
pub fn leaf_weight(g: f64, h: f64, lambda: f64, alpha: f64) -> f64 {
    let denom = h + lambda;
    if denom <= 0.0 {
        return 0.0;
    }
    -soft_threshold(g, alpha) / denom
}

/// Column-major view of a feature matrix: per feature, its nonzero
/// `(row, value)` pairs sorted by value then row.
#[derive(Debug, Clone)]
pub struct ColumnIndex {
    columns: Vec<Vec<(u32, f64)>>,
}

impl ColumnIndex {
    pub fn build(matrix: &FeatureMatrix) -> Self {
        let mut columns: Vec<Vec<(u32, f64)>> = vec![Vec::new(); matrix.dim()];
        for (r, row) in matrix.rows().iter().enumerate() {
            for &(c, w) in row.entries() {
                if w != 0.0 {
                    columns[c].push((r as u32, w));
                }
            }
        }
        for col in &mut columns {
            col.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        }
        ColumnIndex { columns }
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }
}

/// Split-scoring strategy used by the grower.
trait Criterion {
    type Acc: Clone;
    type Leaf;
    fn empty(&self) -> Self::Acc;
    fn add(&self, acc: &mut Self::Acc, row: usize, weight: f64);
    fn merge(&self, acc: &mut Self::Acc, other: &Self::Acc);
    fn diff(&self, total: &Self::Acc, part: &Self::Acc) -> Self::Acc;
    fn splittable(&self, acc: &Self::Acc) -> bool;
    /// Gain of the split, or `None` if it violates a constraint.
    fn gain(&self, left: &Self::Acc, right: &Self::Acc, parent: &Self::Acc) -> Option<f64>;
    fn leaf(&self, acc: &Self::Acc) -> Self::Leaf;
}

struct GiniCriterion<'a> {
    labels: &'a [usize],
    n_classes: usize,
    min_samples_leaf: f64,
}

#[derive(Clone)]
struct ClassAcc {
    counts: Vec<f64>,
    weight: f64,
}

impl Criterion for GiniCriterion<'_> {
    type Acc = ClassAcc;
    type Leaf = Vec<f64>;

    fn empty(&self) -> ClassAcc {
        ClassAcc {
            counts: vec![0.0; self.n_classes],
            weight: 0.0,
        }
    }

    fn add(&self, acc: &mut ClassAcc, row: usize, weight: f64) {
        acc.counts[self.labels[row]] += weight;
        acc.weight += weight;
    }

    fn merge(&self, acc: &mut ClassAcc, other: &ClassAcc) {
        acc.counts.iter_mut().zip(&other.counts).for_each(|(a, b)| *a += b);
        acc.weight += other.weight;
    }

    fn diff(&self, total: &ClassAcc, part: &ClassAcc) -> ClassAcc {
        ClassAcc {
            counts: total.counts.iter().zip(&part.counts).map(|(t, p)| t - p).collect(),
            weight: total.weight - part.weight,
        }
    }

    fn splittable(&self, acc: &ClassAcc) -> bool {
        acc.counts.iter().filter(|&&c| c > 0.0).count() > 1 && acc.weight >= 2.0 * self.min_samples_leaf
    }

    fn gain(&self, left: &ClassAcc, right: &ClassAcc, parent: &ClassAcc) -> Option<f64> {
        if left.weight < self.min_samples_leaf || right.weight < self.min_samples_leaf {
            return None;
        }
        let decrease = parent.weight * gini(&parent.counts)
            - left.weight * gini(&left.counts)
            - right.weight * gini(&right.counts);
        (decrease > 1e-12).then_some(decrease / parent.weight)
    }

    fn leaf(&self, acc: &ClassAcc) -> Vec<f64> {
        acc.counts.clone()
    }
}

struct SecondOrderCriterion<'a> {
    gradients: &'a [f64],
    hessians: &'a [f64],
    params: SecondOrderParams,
}

#[derive(Clone, Copy)]
struct GradAcc {
    g: f64,
    h: f64,
}

impl Criterion for SecondOrderCriterion<'_> {
    type Acc = GradAcc;
    type Leaf = f64;

    fn empty(&self) -> GradAcc {
        GradAcc { g: 0.0, h: 0.0 }
    }

    fn add(&self, acc: &mut GradAcc, row: usize, weight: f64) {
        acc.g += weight * self.gradients[row];
        acc.h += weight * self.hessians[row];
    }

    fn merge(&self, acc: &mut GradAcc, other: &GradAcc) {
        acc.g += other.g;
        acc.h += other.h;
    }

    fn diff(&self, total: &GradAcc, part: &GradAcc) -> GradAcc {
        GradAcc {
            g: total.g - part.g,
            h: total.h - part.h,
        }
    }

    fn splittable(&self, acc: &GradAcc) -> bool {
        acc.h >= 2.0 * self.params.min_child_weight
    }

    fn gain(&self, left: &GradAcc, right: &GradAcc, _parent: &GradAcc) -> Option<f64> {
        let p = &self.params;
        if left.h < p.min_child_weight || right.h < p.min_child_weight {
            return None;
        }
        let gain = split_gain(left.g, left.h, right.g, right.h, p.lambda, p.gamma);
        (gain > 0.0).then_some(gain)
    }

    fn leaf(&self, acc: &GradAcc) -> f64 {
        leaf_weight(acc.g, acc.h, self.params.lambda, self.params.alpha)
    }
}

#[derive(Clone, Copy)]
struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// Per-node scratch state while walking one column.
struct WalkState<A> {
    explicit: A,
    explicit_weight: f64,
    left: A,
    last: Option<f64>,
    zero_added: bool,
}

fn grow<C: Criterion>(
    criterion: &C,
    rows: &[SparseVector],
    columns: &ColumnIndex,
    weights: &[f64],
    params: &TreeParams,
) -> Tree<C::Leaf> {
    let n_rows = rows.len();
    let dim = columns.dim();
    const NONE: u32 = u32::MAX;

    // Frontier node slot for every row (NONE when the row is inactive or
    // sits in a finished leaf).
    let mut slot_of = vec![NONE; n_rows];
    let mut root = criterion.empty();
    let mut root_weight = 0.0;
    for (r, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            slot_of[r] = 0;
            criterion.add(&mut root, r, w);
            root_weight += w;
        }
    }

    let mut nodes: Vec<Option<Node<C::Leaf>>> = vec![None];
    // (tree node id, totals, weight) for the current level.
    let mut frontier: Vec<(usize, C::Acc, f64)> = vec![(0, root, root_weight)];
    let mut depth = 0usize;

    while !frontier.is_empty() {
        let can_split: Vec<bool> = frontier
            .iter()
            .map(|(_, acc, _)| depth < params.max_depth && criterion.splittable(acc))
            .collect();

        let mut best: Vec<Option<BestSplit>> = vec![None; frontier.len()];
        if can_split.iter().any(|&c| c) {
            // Which frontier slots consider each feature.
            let mut slots_for_feature: Vec<Vec<u32>> = vec![Vec::new(); dim];
            for (slot, (node_id, _, _)) in frontier.iter().enumerate() {
                if !can_split[slot] {
                    continue;
                }
                match params.features_per_split {
                    Some(k) if k < dim => {
                        let mut rng = crate::rng::seeded(params.seed, *node_id as u64);
                        let mut picked = index::sample(&mut rng, dim, k.max(1)).into_vec();
                        picked.sort_unstable();
                        for f in picked {
                            slots_for_feature[f].push(slot as u32);
                        }
                    }
                    _ => (0..dim).for_each(|f| slots_for_feature[f].push(slot as u32)),
                }
            }

            let mut state: Vec<Option<WalkState<C::Acc>>> = (0..frontier.len()).map(|_| None).collect();
            let mut considered = vec![false; frontier.len()];
            let mut touched: Vec<usize> = Vec::new();

            for (f, slots) in slots_for_feature.iter().enumerate().take(dim) {
                let column = &columns.columns[f];
                if slots.is_empty() || column.is_empty() {
                    continue;
                }
                for &s in slots {
                    considered[s as usize] = true;
                }
                // Pass 1: explicit (nonzero) totals per node.
                for &(r, _) in column {
                    let s = slot_of[r as usize];
                    if s == NONE || !considered[s as usize] {
                        continue;
                    }
                    let s = s as usize;
                    let st = state[s].get_or_insert_with(|| {
                        touched.push(s);
                        WalkState {
                            explicit: criterion.empty(),
                            explicit_weight: 0.0,
                            left: criterion.empty(),
                            last: None,
                            zero_added: false,
                        }
                    });
                    let w = weights[r as usize];
                    criterion.add(&mut st.explicit, r as usize, w);
                    st.explicit_weight += w;
                }
                // Pass 2: sweep thresholds in ascending value order.
                let mut consider = |s: usize, st: &mut WalkState<C::Acc>, threshold: f64| {
                    let total = &frontier[s].1;
                    let right = criterion.diff(total, &st.left);
                    if let Some(g) = criterion.gain(&st.left, &right, total) {
                        if best[s].is_none_or(|b| g > b.gain) {
                            best[s] = Some(BestSplit {
                                gain: g,
                                feature: f,
                                threshold,
                            });
                        }
                    }
                };
                for &(r, v) in column {
                    let s = slot_of[r as usize];
                    if s == NONE || !considered[s as usize] {
                        continue;
                    }
                    let s = s as usize;
                    let node_weight = frontier[s].2;
                    let st = state[s].as_mut().expect("state created in pass 1");
                    if v > 0.0 && !st.zero_added {
                        st.zero_added = true;
                        if node_weight - st.explicit_weight > 1e-12 {
                            if let Some(last) = st.last {
                                consider(s, st, 0.5 * last);
                            }
                            let zeros = criterion.diff(&frontier[s].1, &st.explicit);
                            criterion.merge(&mut st.left, &zeros);
                            st.last = Some(0.0);
                        }
                    }
                    if let Some(last) = st.last {
                        if v > last {
                            consider(s, st, 0.5 * (last + v));
                        }
                    }
                    criterion.add(&mut st.left, r as usize, weights[r as usize]);
                    st.last = Some(v);
                }
                for &s in &touched {
                    let node_weight = frontier[s].2;
                    let mut st = state[s].take().expect("touched slot has state");
                    if !st.zero_added && node_weight - st.explicit_weight > 1e-12 {
                        if let Some(last) = st.last {
                            consider(s, &mut st, 0.5 * last);
                        }
                    }
                }
                touched.clear();
                for &s in slots {
                    considered[s as usize] = false;
                }
            }
        }

        // Materialize this level and build the next frontier.
        let mut child_slot: Vec<Option<(usize, usize)>> = vec![None; frontier.len()];
        let mut next: Vec<(usize, C::Acc, f64)> = Vec::new();
        for (slot, (node_id, acc, _)) in frontier.iter().enumerate() {
            match best[slot] {
                Some(b) => {
                    let left = nodes.len();
                    let right = left + 1;
                    nodes.push(None);
                    nodes.push(None);
                    nodes[*node_id] = Some(Node::Split {
                        feature: b.feature,
                        threshold: b.threshold,
                        left,
                        right,
                    });
                    child_slot[slot] = Some((next.len(), next.len() + 1));
                    next.push((left, criterion.empty(), 0.0));
                    next.push((right, criterion.empty(), 0.0));
                }
                None => {
                    nodes[*node_id] = Some(Node::Leaf(criterion.leaf(acc)));
                }
            }
        }
        for r in 0..n_rows {
            let s = slot_of[r];
            if s == NONE {
                continue;
            }
            let s = s as usize;
            match (child_slot[s], best[s]) {
                (Some((l, rt)), Some(b)) => {
                    let target = if rows[r].get(b.feature) <= b.threshold { l } else { rt };
                    let (_, acc, w) = &mut next[target];
                    criterion.add(acc, r, weights[r]);
                    *w += weights[r];
                    slot_of[r] = target as u32;
                }
                _ => slot_of[r] = NONE,
            }
        }
        frontier = next;
        depth += 1;
    }

    Tree {
        nodes: nodes.into_iter().map(|n| n.expect("every node resolved")).collect(),
        max_depth: params.max_depth,
    }
}

pub(crate) fn class_indices(matrix: &FeatureMatrix, classes: &[LanguageId]) -> Vec<usize> {
    matrix
        .labels()
        .iter()
        .map(|l| classes.binary_search(l).expect("label belongs to class list"))
        .collect()
}

/// Gini tree on pre-indexed data with per-row weights (bootstrap counts).
pub(crate) fn fit_classification_weighted(
    matrix: &FeatureMatrix,
    columns: &ColumnIndex,
    classes: &[LanguageId],
    labels: &[usize],
    weights: &[f64],
    params: &TreeParams,
) -> DecisionTree {
    let criterion = GiniCriterion {
        labels,
        n_classes: classes.len(),
        min_samples_leaf: params.min_samples_leaf.max(1) as f64,
    };
    DecisionTree {
        classes: classes.to_vec(),
        dim: matrix.dim(),
        tree: grow(&criterion, matrix.rows(), columns, weights, params),
    }
}

pub(crate) fn fit_regression_indexed(
    matrix: &FeatureMatrix,
    columns: &ColumnIndex,
    gradients: &[f64],
    hessians: &[f64],
    reg: SecondOrderParams,
    params: &TreeParams,
) -> RegressionTree {
    let criterion = SecondOrderCriterion {
        gradients,
        hessians,
        params: reg,
    };
    let weights = vec![1.0; matrix.len()];
    grow(&criterion, matrix.rows(), columns, &weights, params)
}

/// Gini classification tree over every row of `matrix`.
pub fn fit_classification_tree(matrix: &FeatureMatrix, params: &TreeParams) -> Result<DecisionTree, ModelError> {
    if matrix.is_empty() {
        return Err(ModelError::EmptyMatrix);
    }
    let classes = matrix.classes();
    let labels = class_indices(matrix, &classes);
    let columns = ColumnIndex::build(matrix);
    let weights = vec![1.0; matrix.len()];
    Ok(fit_classification_weighted(
        matrix, &columns, &classes, &labels, &weights, params,
    ))
}

/// Second-order regression tree fitted to caller-provided gradients and
/// hessians.
pub fn fit_regression_tree(
    matrix: &FeatureMatrix,
    gradients: &[f64],
    hessians: &[f64],
    reg: SecondOrderParams,
    params: &TreeParams,
) -> Result<RegressionTree, ModelError> {
    if matrix.is_empty() {
        return Err(ModelError::EmptyMatrix);
    }
    if gradients.len() != matrix.len() || hessians.len() != matrix.len() {
        return Err(ModelError::GradientLength {
            rows: matrix.len(),
            gradients: gradients.len(),
            hessians: hessians.len(),
        });
    }
    let columns = ColumnIndex::build(matrix);
    Ok(fit_regression_indexed(
        matrix, &columns, gradients, hessians, reg, params,
    ))
}

/// Fits one tree with the requested criterion.
pub fn tree_fit(
    matrix: &FeatureMatrix,
    params: &TreeParams,
    criterion: SplitCriterion<'_>,
) -> Result<FittedTree, ModelError> {
    match criterion {
        SplitCriterion::Gini => fit_classification_tree(matrix, params).map(FittedTree::Classification),
        SplitCriterion::SecondOrder {
            gradients,
            hessians,
            params: reg,
        } => fit_regression_tree(matrix, gradients, hessians, reg, params).map(FittedTree::Regression),
    }
}
