//! Clause scoring, co-occurrence priors and re-ranking.
//!
//! A clause's score for relation `k` is
//! `p(subject) · Pr(k | boxes) · p(object)`; with priors the classifier
//! distribution is first multiplied by the pair's relation prior and
//! renormalized.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::geometry::assemble_features;
use crate::instance::ClauseInstance;
use crate::mlp::{predict, MlpError, MlpModel, RelationDistribution};
use crate::relation::{SpatialRelation, NUM_RELATIONS};
use crate::Scalar;

#[derive(Debug, Error)]
pub enum RankingError {
    #[error("smoothing constant must be positive, got {0}")]
    Alpha(f64),
    #[error("cannot build priors from an empty training set")]
    EmptyTrainingSet,
    #[error("prior and distribution have no overlapping mass")]
    ZeroMass,
    #[error("malformed prior table: {0}")]
    Format(String),
    #[error(transparent)]
    Model(#[from] MlpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredRelation<T = f64> {
    pub relation: SpatialRelation,
    pub score: T,
}

/// Scores in canonical class order.
pub fn score<T: Scalar>(dist: &RelationDistribution<T>, p_i: T, p_j: T) -> Vec<ScoredRelation<T>> {
    SpatialRelation::ALL
        .iter()
        .map(|&relation| ScoredRelation { relation, score: p_i * dist.prob(relation) * p_j })
        .collect()
}

/// Additively smoothed relation counts per `(subject, object)` name pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorTable<T = f64> {
    alpha: f64,
    table: BTreeMap<(String, String), [T; NUM_RELATIONS]>,
}

fn normalize_name(s: &str) -> String {
    s.trim().to_lowercase()
}

fn uniform<T: Scalar>() -> [T; NUM_RELATIONS] {
    [T::one() / T::from_usize_lossy(NUM_RELATIONS); NUM_RELATIONS]
}

impl<T: Scalar> PriorTable<T> {
    /// A table with no observed pairs: every lookup is uniform.
    pub fn uniform(alpha: f64) -> Self {
        Self { alpha, table: BTreeMap::new() }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Prior for a name pair; unseen pairs get the uniform fallback.
    pub fn lookup(&self, subject: &str, object: &str) -> [T; NUM_RELATIONS] {
        self.table
            .get(&(normalize_name(subject), normalize_name(object)))
            .copied()
            .unwrap_or_else(uniform)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(String, String), &[T; NUM_RELATIONS])> {
        self.table.iter()
    }

    /// `{"alpha": α, "subject|object": [9 probabilities], ...}`
    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        map.insert("alpha".into(), serde_json::json!(self.alpha));
        for ((s, o), probs) in &self.table {
            map.insert(format!("{s}|{o}"), serde_json::to_value(probs).expect("finite priors"));
        }
        Value::Object(map)
    }

    pub fn from_json(value: &Value) -> Result<Self, RankingError> {
        let fmt = |m: String| RankingError::Format(m);
        let map = value.as_object().ok_or_else(|| fmt("expected a JSON object".into()))?;
        let alpha = map
            .get("alpha")
            .and_then(Value::as_f64)
            .ok_or_else(|| fmt("missing numeric `alpha`".into()))?;
        let mut table = BTreeMap::new();
        for (key, v) in map.iter().filter(|(k, _)| k.as_str() != "alpha") {
            let (s, o) = key
                .split_once('|')
                .ok_or_else(|| fmt(format!("key `{key}` is not `subject|object`")))?;
            let probs: [T; NUM_RELATIONS] = serde_json::from_value(v.clone())
                .map_err(|e| fmt(format!("entry `{key}`: {e}")))?;
            let sum: T = probs.iter().copied().sum();
            if probs.iter().any(|&p| !(p > T::zero())) || (sum - T::one()).abs() > T::lit(1e-6) {
                return Err(fmt(format!("entry `{key}` is not a positive distribution")));
            }
            table.insert((normalize_name(s), normalize_name(o)), probs);
        }
        Ok(Self { alpha, table })
    }
}

/// Counts relations per name pair: `(count_k + α) / (total + 9α)`.
pub fn build_priors<T: Scalar>(train: &[ClauseInstance<T>], alpha: f64) -> Result<PriorTable<T>, RankingError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(RankingError::Alpha(alpha));
    }
    if train.is_empty() {
        return Err(RankingError::EmptyTrainingSet);
    }
    let mut counts: BTreeMap<(String, String), [u64; NUM_RELATIONS]> = BTreeMap::new();
    for inst in train {
        let key = (normalize_name(&inst.subject_name), normalize_name(&inst.object_name));
        counts.entry(key).or_insert([0; NUM_RELATIONS])[inst.relation.index()] += 1;
    }
    let table = counts
        .into_iter()
        .map(|(key, c)| {
            let total: u64 = c.iter().sum();
            let denom = total as f64 + NUM_RELATIONS as f64 * alpha;
            let mut probs = [T::zero(); NUM_RELATIONS];
            for (p, &n) in probs.iter_mut().zip(&c) {
                *p = T::lit((n as f64 + alpha) / denom);
            }
            (key, probs)
        })
        .collect();
    Ok(PriorTable { alpha, table })
}

/// Elementwise product of the distribution and a prior, renormalized. A
/// constant prior returns `dist` unchanged.
pub fn rerank<T: Scalar>(
    dist: &RelationDistribution<T>,
    prior: &[T; NUM_RELATIONS],
) -> Result<RelationDistribution<T>, RankingError> {
    if prior.iter().all(|&p| p == prior[0]) && prior[0] > T::zero() {
        return Ok(*dist);
    }
    let mut product = [T::zero(); NUM_RELATIONS];
    for (out, (&d, &p)) in product.iter_mut().zip(dist.probs().iter().zip(prior)) {
        *out = d * p;
    }
    let sum: T = product.iter().copied().sum();
    if !(sum > T::zero()) {
        return Err(RankingError::ZeroMass);
    }
    for v in product.iter_mut() {
        *v = *v / sum;
    }
    Ok(RelationDistribution::new(product)?)
}

/// Descending by score; equal scores fall back to the underlying
/// probability and then to the canonical class index.
fn sort_ranked<T: Scalar>(scored: &mut [ScoredRelation<T>], dist: &RelationDistribution<T>) {
    scored.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| dist.prob(b.relation).partial_cmp(&dist.prob(a.relation)).unwrap_or(Ordering::Equal))
            .then_with(|| a.relation.index().cmp(&b.relation.index()))
    });
}

/// Scores and sorts all relations for a distribution and confidences.
pub fn rank_distribution<T: Scalar>(dist: &RelationDistribution<T>, p_i: T, p_j: T) -> Vec<ScoredRelation<T>> {
    let mut scored = score(dist, p_i, p_j);
    sort_ranked(&mut scored, dist);
    scored
}

/// Full pipeline for one clause: features, classifier, optional re-ranking,
/// confidence scoring, descending sort.
pub fn rank_clause<T: Scalar>(
    model: &MlpModel<T>,
    instance: &ClauseInstance<T>,
    priors: Option<&PriorTable<T>>,
    use_geo: bool,
) -> Result<Vec<ScoredRelation<T>>, RankingError> {
    let features = assemble_features(&instance.subject.bbox, &instance.object.bbox, use_geo);
    let mut dist = predict(model, &features)?;
    if let Some(table) = priors {
        dist = rerank(&dist, &table.lookup(&instance.subject_name, &instance.object_name))?;
    }
    Ok(rank_distribution(&dist, instance.subject.confidence(), instance.object.confidence()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoundingBox, Grounding};
    use crate::mlp::{MlpModel, ModelConfig};
    use proptest::prelude::*;
    use SpatialRelation::*;

    fn dist_from(pairs: &[(SpatialRelation, f64)]) -> RelationDistribution {
        let mut p = [0.0; 9];
        for &(r, v) in pairs {
            p[r.index()] = v;
        }
        RelationDistribution::new(p).unwrap()
    }

    fn inst(s: &str, o: &str, rel: SpatialRelation) -> ClauseInstance {
        let g = Grounding::new(BoundingBox::new(0.1, 0.1, 0.2, 0.2).unwrap(), 1.0).unwrap();
        ClauseInstance::new("i", s, rel, o, g, g).unwrap()
    }

    #[test]
    fn score_examples() {
        let s = score(&RelationDistribution::<f64>::uniform(), 0.8, 0.5);
        assert!(s.iter().all(|r| (r.score - 0.8 / 9.0 * 0.5).abs() < 1e-15));
        assert!((s[0].score - 0.044444).abs() < 1e-6);

        let d = dist_from(&[(Above, 0.5), (Near, 0.3), (Inside, 0.2)]);
        let s = score(&d, 1.0, 1.0);
        assert!(s.iter().zip(d.probs()).all(|(a, b)| a.score == *b));

        let s = score(&d, 0.9, 0.9);
        assert!((s[Above.index()].score - 0.405).abs() < 1e-12);
        assert!((s[Near.index()].score - 0.243).abs() < 1e-12);
        assert!((s[Inside.index()].score - 0.162).abs() < 1e-12);
        assert_eq!(s[Below.index()].score, 0.0);
        assert_eq!(s.iter().map(|r| r.relation).collect::<Vec<_>>(), SpatialRelation::ALL);
    }

    #[test]
    fn prior_examples() {
        let single = build_priors(&[inst("cup", "table", Above)], 1.0).unwrap();
        let p = single.lookup("cup", "table");
        assert!((p[Above.index()] - 0.2).abs() < 1e-15);
        assert!((p[Near.index()] - 0.1).abs() < 1e-15);
        assert_eq!(single.lookup("dog", "table"), [1.0 / 9.0; 9]);
        assert_eq!(single.lookup(" Cup ", "TABLE"), p);

        let data = [
            inst("cup", "table", Above),
            inst("cup", "table", Above),
            inst("cup", "table", Near),
            inst("cup", "table", Above),
        ];
        let p = build_priors(&data, 1.0).unwrap().lookup("cup", "table");
        assert!((p[Above.index()] - 4.0 / 13.0).abs() < 1e-15);
        assert!((p[Near.index()] - 2.0 / 13.0).abs() < 1e-15);
        assert!((p[Inside.index()] - 1.0 / 13.0).abs() < 1e-15);

        assert!(matches!(build_priors(&data, 0.0), Err(RankingError::Alpha(_))));
        assert!(matches!(build_priors::<f64>(&[], 1.0), Err(RankingError::EmptyTrainingSet)));
    }

    #[test]
    fn rerank_examples() {
        let d = dist_from(&[(Below, 0.5), (Above, 0.3), (FarFrom, 0.2)]);
        assert_eq!(rerank(&d, &[1.0 / 9.0; 9]).unwrap(), d);

        let mut prior = [0.0; 9];
        prior[0] = 0.1;
        prior[1] = 0.6;
        prior[2] = 0.3;
        let r = rerank(&d, &prior).unwrap();
        // products 0.05, 0.18, 0.06 over 0.29
        assert!((r.probs()[1] - 0.18 / 0.29).abs() < 1e-12);
        let ranked = rank_distribution(&r, 1.0, 1.0);
        assert_eq!(ranked[..3].iter().map(|s| s.relation).collect::<Vec<_>>(), [Above, FarFrom, Below]);

        // Nearly uniform prediction, prior concentrated on `inside`.
        let mut near_uniform = [1.0 / 9.0; 9];
        near_uniform[Near.index()] += 0.01;
        near_uniform[Inside.index()] -= 0.01;
        let d = RelationDistribution::new(near_uniform).unwrap();
        let mut prior = [0.05; 9];
        prior[Inside.index()] = 0.6;
        assert_eq!(rerank(&d, &prior).unwrap().argmax(), Inside);

        assert!(matches!(rerank(&dist_from(&[(Below, 1.0)]), &prior_zero_at(Below)), Err(RankingError::ZeroMass)));
    }

    fn prior_zero_at(r: SpatialRelation) -> [f64; 9] {
        let mut p = [0.125; 9];
        p[r.index()] = 0.0;
        p
    }

    #[test]
    fn zero_network_ranks_in_canonical_order() {
        let model = MlpModel::<f64>::zeros(ModelConfig::new(8)).unwrap();
        let ranked = rank_clause(&model, &inst("a", "b", Near), None, false).unwrap();
        assert_eq!(ranked.iter().map(|s| s.relation).collect::<Vec<_>>(), SpatialRelation::ALL);
        assert!(ranked.iter().all(|s| (s.score - 1.0 / 9.0).abs() < 1e-15));
        assert!(rank_clause(&model, &inst("a", "b", Near), None, true).is_err());
    }

    #[test]
    fn json_round_trip() {
        let data = [inst("cup", "table", Above), inst("cat", "sofa", Near)];
        let table = build_priors(&data, 0.5).unwrap();
        let json = table.to_json();
        assert_eq!(json["alpha"], 0.5);
        assert_eq!(PriorTable::<f64>::from_json(&json).unwrap(), table);
        assert!(PriorTable::<f64>::from_json(&serde_json::json!({"alpha": 1.0, "nopipe": [0.1]})).is_err());
    }

    fn arb_dist() -> impl Strategy<Value = RelationDistribution> {
        proptest::collection::vec(0.0f64..1.0, 9).prop_filter_map("non-zero mass", |v| {
            let s: f64 = v.iter().sum();
            (s > 1e-6).then(|| {
                let p: Vec<f64> = v.iter().map(|x| x / s).collect();
                RelationDistribution::from_slice(&p).unwrap()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn order_invariant_to_confidences(d in arb_dist(), pi in 1e-3f64..1.0, pj in 1e-3f64..1.0) {
            let a: Vec<_> = rank_distribution(&d, 1.0, 1.0).iter().map(|s| s.relation).collect();
            let b: Vec<_> = rank_distribution(&d, pi, pj).iter().map(|s| s.relation).collect();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn rerank_outputs_are_distributions(d in arb_dist(), prior in proptest::collection::vec(1e-3f64..1.0, 9)) {
            let p: [f64; 9] = prior.try_into().unwrap();
            let r = rerank(&d, &p).unwrap();
            prop_assert!((r.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn priors_ignore_input_order(
            labels in proptest::collection::vec((0usize..3, 0usize..9), 1..40),
            rot in 0usize..40,
        ) {
            let names = ["cup", "dog", "car"];
            let data: Vec<_> = labels.iter().map(|&(n, r)| inst(names[n], "table", SpatialRelation::ALL[r])).collect();
            let mut rotated = data.clone();
            rotated.rotate_left(rot % data.len());
            rotated.reverse();
            let a = build_priors(&data, 1.0).unwrap();
            prop_assert_eq!(&a, &build_priors(&rotated, 1.0).unwrap());
            for (_, p) in a.entries() {
                prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                prop_assert!(p.iter().all(|&v| v > 0.0));
            }
        }
    }
}
