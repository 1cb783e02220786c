use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::DatasetError;
use crate::instance::ClauseInstance;
use crate::relation::{SpatialRelation, NUM_RELATIONS};

/// A train/test partition and the seed that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPair<T = f64> {
    pub train: Vec<ClauseInstance<T>>,
    pub test: Vec<ClauseInstance<T>>,
    pub seed: u64,
}

/// Per-class train quotas. Each class gets `floor(ratio * n_c)`; the
/// leftover seats up to `round(ratio * n)` go to the largest fractional
/// remainders, ties to the lower class index. Every class keeps at least one
/// instance on each side.
fn train_quotas(counts: &[usize; NUM_RELATIONS], ratio: f64) -> [usize; NUM_RELATIONS] {
    let total: usize = counts.iter().sum();
    let target = (ratio * total as f64).round() as usize;
    let mut quota = [0usize; NUM_RELATIONS];
    let mut remainders = Vec::new();
    for (c, &n) in counts.iter().enumerate() {
        let exact = ratio * n as f64;
        let base = (exact + 1e-9).floor();
        quota[c] = base as usize;
        let rem = exact - base;
        if rem > 1e-9 {
            remainders.push((rem, c));
        }
    }
    let assigned: usize = quota.iter().sum();
    remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, c) in remainders.iter().take(target.saturating_sub(assigned)) {
        quota[c] += 1;
    }
    for (q, &n) in quota.iter_mut().zip(counts) {
        if n >= 2 {
            *q = (*q).clamp(1, n - 1);
        }
    }
    quota
}

/// Stratified, seeded train/test split. Both sides keep the input order.
pub fn stratified_split<T: Clone>(
    instances: &[ClauseInstance<T>],
    ratio: f64,
    seed: u64,
) -> Result<SplitPair<T>, DatasetError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(DatasetError::InvalidRatio(ratio));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); NUM_RELATIONS];
    for (i, inst) in instances.iter().enumerate() {
        by_class[inst.relation.index()].push(i);
    }
    let mut counts = [0usize; NUM_RELATIONS];
    for (c, idx) in by_class.iter().enumerate() {
        if idx.len() == 1 {
            return Err(DatasetError::ClassTooSmall {
                class: SpatialRelation::ALL[c],
                count: 1,
            });
        }
        counts[c] = idx.len();
    }
    let quotas = train_quotas(&counts, ratio);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = HashSet::new();
    for (c, idx) in by_class.iter_mut().enumerate() {
        idx.shuffle(&mut rng);
        in_train.extend(idx.iter().take(quotas[c]).copied());
    }

    let mut train = Vec::with_capacity(in_train.len());
    let mut test = Vec::with_capacity(instances.len() - in_train.len());
    for (i, inst) in instances.iter().enumerate() {
        if in_train.contains(&i) {
            train.push(inst.clone());
        } else {
            test.push(inst.clone());
        }
    }
    Ok(SplitPair { train, test, seed })
}
