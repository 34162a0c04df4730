//! Stratified hold-out and k-fold splitting.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::features::FeatureMatrix;
use crate::language::LanguageId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            seed: 0,
            stratified: true,
        }
    }
}

impl SplitSpec {
    pub fn with_seed(seed: u64) -> Self {
        SplitSpec {
            seed,
            ..SplitSpec::default()
        }
    }
}

/// Row positions grouped by class, in code order.
fn by_class(labels: &[LanguageId]) -> BTreeMap<LanguageId, Vec<usize>> {
    let mut groups: BTreeMap<LanguageId, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        groups.entry(*l).or_default().push(i);
    }
    groups
}

/// Per-class training share: `0.8·n` rounded half up, kept within
/// `[1, n − 1]`.
pub fn train_count(n: usize, train_fraction: f64) -> usize {
    let raw = (train_fraction * n as f64 + 0.5).floor() as usize;
    raw.clamp(1, n.saturating_sub(1).max(1))
}

/// Returns sorted `(train, test)` row positions.
pub fn stratified_holdout_indices(
    labels: &[LanguageId],
    spec: &SplitSpec,
) -> Result<(Vec<usize>, Vec<usize>), EvalError> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(EvalError::InvalidArgument(format!(
            "train_fraction must lie in (0, 1), got {}",
            spec.train_fraction
        )));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (lang, mut idx) in by_class(labels) {
        if idx.len() < 2 {
            return Err(EvalError::UndersizedClass {
                class: lang,
                have: idx.len(),
                need: 2,
            });
        }
        let mut rng = crate::rng::seeded(spec.seed, lang.code() as u64);
        idx.shuffle(&mut rng);
        let k = train_count(idx.len(), spec.train_fraction);
        train.extend_from_slice(&idx[..k]);
        test.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn stratified_holdout(
    matrix: &FeatureMatrix,
    spec: &SplitSpec,
) -> Result<(FeatureMatrix, FeatureMatrix), EvalError> {
    let (train, test) = stratified_holdout_indices(matrix.labels(), spec)?;
    Ok((matrix.subset(&train), matrix.subset(&test)))
}

/// `k` disjoint folds (sorted row positions) covering every row. Within a
/// class, fold sizes differ by at most one, with the larger folds first.
pub fn stratified_kfold(labels: &[LanguageId], k: usize, seed: u64) -> Result<Vec<Vec<usize>>, EvalError> {
    if k < 2 {
        return Err(EvalError::InvalidArgument(format!("k must be at least 2, got {k}")));
    }
    let mut folds = vec![Vec::new(); k];
    for (lang, mut idx) in by_class(labels) {
        if idx.len() < k {
            return Err(EvalError::UndersizedClass {
                class: lang,
                have: idx.len(),
                need: k,
            });
        }
        let mut rng = crate::rng::seeded(seed, 1000 + lang.code() as u64);
        idx.shuffle(&mut rng);
        for (j, i) in idx.into_iter().enumerate() {
            folds[j % k].push(i);
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

/// Train/validation positions for fold `i`.
pub fn fold_split(folds: &[Vec<usize>], i: usize) -> (Vec<usize>, Vec<usize>) {
    let mut train: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .flat_map(|(_, f)| f.iter().copied())
        .collect();
    train.sort_unstable();
    (train, folds[i].clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use LanguageId::{Assembly as A, C as B};

    fn labels(sizes: &[(LanguageId, usize)]) -> Vec<LanguageId> {
        sizes.iter().flat_map(|&(l, n)| std::iter::repeat_n(l, n)).collect()
    }

    fn count(labels: &[LanguageId], idx: &[usize], l: LanguageId) -> usize {
        idx.iter().filter(|&&i| labels[i] == l).count()
    }

    #[test]
    fn holdout_exact_proportions() {
        let y = labels(&[(A, 50), (B, 50)]);
        let (train, test) = stratified_holdout_indices(&y, &SplitSpec::with_seed(1)).unwrap();
        assert_eq!((count(&y, &train, A), count(&y, &train, B)), (40, 40));
        assert_eq!((count(&y, &test, A), count(&y, &test, B)), (10, 10));
        assert_eq!(
            stratified_holdout_indices(&y, &SplitSpec::with_seed(1)).unwrap(),
            (train, test)
        );
    }

    #[test]
    fn holdout_rounds_half_up() {
        let y = labels(&[(A, 7), (B, 13)]);
        let (train, test) = stratified_holdout_indices(&y, &SplitSpec::with_seed(5)).unwrap();
        assert_eq!((count(&y, &train, A), count(&y, &train, B)), (6, 10));
        assert_eq!((count(&y, &test, A), count(&y, &test, B)), (1, 3));
    }

    #[test]
    fn holdout_rejects_singleton_class() {
        let y = labels(&[(A, 5), (B, 1)]);
        match stratified_holdout_indices(&y, &SplitSpec::default()) {
            Err(EvalError::UndersizedClass { class, .. }) => assert_eq!(class, B),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn kfold_divisible_and_remainder_cases() {
        let y = labels(&[(A, 50), (B, 50)]);
        let folds = stratified_kfold(&y, 10, 3).unwrap();
        for f in &folds {
            assert_eq!((count(&y, f, A), count(&y, f, B)), (5, 5));
        }
        let y = labels(&[(A, 23)]);
        let folds = stratified_kfold(&y, 10, 3).unwrap();
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![3, 3, 3, 2, 2, 2, 2, 2, 2, 2]);
    }

    #[test]
    fn kfold_partitions_rows() {
        let y = labels(&[(A, 17), (B, 31)]);
        let folds = stratified_kfold(&y, 4, 0).unwrap();
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..48).collect::<Vec<_>>());
        let (tr, va) = fold_split(&folds, 2);
        assert_eq!(tr.len() + va.len(), 48);
        assert!(stratified_kfold(&y, 1, 0).is_err());
        assert!(stratified_kfold(&labels(&[(A, 3)]), 4, 0).is_err());
    }
}
