//! Stratified fold construction and balanced mini-batching.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One cross-validation split: disjoint train/validation/test index lists
/// that together cover every subject exactly once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub train_idx: Vec<usize>,
    pub val_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

/// Stratified folds: per-class shuffled indices are dealt round-robin into
/// `n_folds` bins; split `f` tests on bin `f`, validates on bin `(f+1) mod
/// n_folds`, and trains on the rest. With the default 10 folds this realizes
/// the 0.8/0.1/0.1 ratio and uses every subject for testing exactly once.
pub fn make_stratified_folds(
    labels: &[usize],
    n_folds: usize,
    seed: u64,
) -> Result<Vec<FoldSplit>> {
    if n_folds < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 folds for disjoint train/val/test, got {n_folds}"
        )));
    }
    let num_classes = labels.iter().max().map(|&m| m + 1).unwrap_or(0);
    if num_classes < 2 {
        return Err(Error::InvalidInput(
            "stratified folds need at least two classes".into(),
        ));
    }
    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (idx, &label) in labels.iter().enumerate() {
        per_class[label].push(idx);
    }
    for (class, members) in per_class.iter().enumerate() {
        if members.len() < n_folds {
            return Err(Error::InvalidInput(format!(
                "class {class} has {} samples, fewer than {n_folds} folds",
                members.len()
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bins: Vec<Vec<usize>> = vec![Vec::new(); n_folds];
    for members in per_class.iter_mut() {
        members.shuffle(&mut rng);
        for (pos, &idx) in members.iter().enumerate() {
            bins[pos % n_folds].push(idx);
        }
    }

    let splits = (0..n_folds)
        .map(|f| {
            let test = f;
            let val = (f + 1) % n_folds;
            let mut split = FoldSplit {
                train_idx: Vec::new(),
                val_idx: bins[val].clone(),
                test_idx: bins[test].clone(),
            };
            for (b, bin) in bins.iter().enumerate() {
                if b != test && b != val {
                    split.train_idx.extend_from_slice(bin);
                }
            }
            split.train_idx.sort_unstable();
            split.val_idx.sort_unstable();
            split.test_idx.sort_unstable();
            split
        })
        .collect();
    Ok(splits)
}

/// Class-balanced batch sampler: each class keeps a shuffled queue of its
/// training indices and reshuffles when exhausted, so sampling is without
/// replacement within a class-epoch.
#[derive(Debug, Clone)]
pub struct BalancedBatcher {
    queues: Vec<ClassQueue>,
    batch_size: usize,
    rng: ChaCha8Rng,
}

#[derive(Debug, Clone)]
struct ClassQueue {
    members: Vec<usize>,
    order: Vec<usize>,
    cursor: usize,
}

impl BalancedBatcher {
    pub fn new(
        train_idx: &[usize],
        labels: &[usize],
        batch_size: usize,
        seed: u64,
    ) -> Result<Self> {
        let num_classes = train_idx
            .iter()
            .map(|&i| labels[i] + 1)
            .max()
            .unwrap_or(0);
        if num_classes < 2 {
            return Err(Error::InvalidInput(
                "balanced batching needs both classes in the training set".into(),
            ));
        }
        if batch_size == 0 || batch_size % num_classes != 0 {
            return Err(Error::InvalidInput(format!(
                "batch size {batch_size} must be divisible by the class count {num_classes}"
            )));
        }
        let mut queues: Vec<ClassQueue> = (0..num_classes)
            .map(|_| ClassQueue {
                members: Vec::new(),
                order: Vec::new(),
                cursor: 0,
            })
            .collect();
        for &idx in train_idx {
            queues[labels[idx]].members.push(idx);
        }
        if let Some((class, _)) = queues.iter().enumerate().find(|(_, q)| q.members.is_empty()) {
            return Err(Error::InvalidInput(format!(
                "class {class} is absent from the training set"
            )));
        }
        Ok(Self {
            queues,
            batch_size,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Draw the next balanced batch: `batch_size / num_classes` indices per
    /// class, grouped by class.
    pub fn next_batch(&mut self) -> Vec<usize> {
        let per_class = self.batch_size / self.queues.len();
        let mut batch = Vec::with_capacity(self.batch_size);
        for class in 0..self.queues.len() {
            for _ in 0..per_class {
                let queue = &mut self.queues[class];
                if queue.cursor >= queue.order.len() {
                    queue.order = queue.members.clone();
                    queue.order.shuffle(&mut self.rng);
                    queue.cursor = 0;
                }
                batch.push(queue.order[queue.cursor]);
                queue.cursor += 1;
            }
        }
        batch
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn labels(n0: usize, n1: usize) -> Vec<usize> {
        let mut l = vec![0; n0];
        l.extend(vec![1; n1]);
        l
    }

    #[test]
    fn ten_per_class_gives_one_of_each_per_test_fold() {
        let labels = labels(10, 10);
        let folds = make_stratified_folds(&labels, 10, 3).unwrap();
        for split in &folds {
            assert_eq!(split.test_idx.len(), 2);
            let classes: BTreeSet<usize> = split.test_idx.iter().map(|&i| labels[i]).collect();
            assert_eq!(classes.len(), 2);
        }
    }

    #[test]
    fn test_folds_partition_the_index_set() {
        let labels = labels(23, 31);
        let folds = make_stratified_folds(&labels, 10, 7).unwrap();
        let mut seen = BTreeSet::new();
        for split in &folds {
            for &idx in &split.test_idx {
                assert!(seen.insert(idx), "index {idx} tested twice");
            }
            // Disjointness within a split and full coverage.
            let mut union: Vec<usize> = split
                .train_idx
                .iter()
                .chain(&split.val_idx)
                .chain(&split.test_idx)
                .copied()
                .collect();
            union.sort_unstable();
            assert_eq!(union, (0..54).collect::<Vec<_>>());
        }
        assert_eq!(seen.len(), 54);
    }

    #[test]
    fn fold_class_ratios_stay_within_one_sample() {
        // Same class sizes as a 5430-subject cohort with a 2873/2557 split.
        let labels = labels(2873, 2557);
        let folds = make_stratified_folds(&labels, 10, 1).unwrap();
        for split in &folds {
            let c0 = split.test_idx.iter().filter(|&&i| labels[i] == 0).count();
            let c1 = split.test_idx.len() - c0;
            assert!((c0 as isize - 2873 / 10).abs() <= 1, "class 0 count {c0}");
            assert!((c1 as isize - 2557 / 10).abs() <= 1, "class 1 count {c1}");
        }
    }

    #[test]
    fn rejects_underpopulated_classes() {
        let labels = labels(5, 30);
        assert!(make_stratified_folds(&labels, 10, 0).is_err());
    }

    #[test]
    fn batches_are_exactly_balanced() {
        let labels = labels(60, 40);
        let train: Vec<usize> = (0..100).collect();
        let mut batcher = BalancedBatcher::new(&train, &labels, 20, 5).unwrap();
        for _ in 0..10 {
            let batch = batcher.next_batch();
            assert_eq!(batch.len(), 20);
            let c0 = batch.iter().filter(|&&i| labels[i] == 0).count();
            assert_eq!(c0, 10);
        }
    }

    #[test]
    fn exhausted_class_reshuffles_and_covers_every_member() {
        // Class 1 has exactly 100 members and the batch needs 100 of them:
        // every member appears exactly once per batch.
        let labels = labels(100, 100);
        let train: Vec<usize> = (0..200).collect();
        let mut batcher = BalancedBatcher::new(&train, &labels, 200, 9).unwrap();
        for _ in 0..5 {
            let batch = batcher.next_batch();
            let mut ones: Vec<usize> = batch.iter().filter(|&&i| labels[i] == 1).copied().collect();
            ones.sort_unstable();
            assert_eq!(ones, (100..200).collect::<Vec<_>>());
        }
    }

    #[test]
    fn batch_sequence_is_deterministic_per_seed() {
        let labels = labels(30, 30);
        let train: Vec<usize> = (0..60).collect();
        let mut a = BalancedBatcher::new(&train, &labels, 10, 11).unwrap();
        let mut b = BalancedBatcher::new(&train, &labels, 10, 11).unwrap();
        for _ in 0..20 {
            assert_eq!(a.next_batch(), b.next_batch());
        }
    }
}
