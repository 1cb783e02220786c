//! Top-k metrics against random chance, ablation-style reports, detector
//! coverage analysis and binary accuracy of external predictions.

mod binary;
mod coverage;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use binary::{binary_accuracy, parse_binary_predictions, BinaryPrediction};
pub use coverage::{
    detector_coverage_analysis, parse_coverage_cases, render_coverage_table, CoverageBreakdown, CoverageCase,
    CoverageCell, DetectionCount, Lexicon,
};

use crate::instance::ClauseInstance;
use crate::mlp::MlpModel;
use crate::ranking::{rank_clause, PriorTable, RankingError, ScoredRelation};
use crate::relation::{SpatialRelation, NUM_RELATIONS};
use crate::Scalar;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{what}: {left} entries vs {right}")]
    LengthMismatch { what: &'static str, left: usize, right: usize },
    #[error("k = {k} must lie in 1..={max}")]
    InvalidK { k: usize, max: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Ranking(#[from] RankingError),
}

fn in_top_k<T>(ranked: &[ScoredRelation<T>], gold: SpatialRelation, k: usize) -> bool {
    ranked.iter().take(k).any(|s| s.relation == gold)
}

/// Fraction of instances whose gold relation is among the first `k`
/// ranked entries.
pub fn top_k_accuracy<T>(
    rankings: &[Vec<ScoredRelation<T>>],
    gold: &[SpatialRelation],
    k: usize,
) -> Result<f64, EvalError> {
    if rankings.len() != gold.len() {
        return Err(EvalError::LengthMismatch { what: "rankings vs gold", left: rankings.len(), right: gold.len() });
    }
    if !(1..=NUM_RELATIONS).contains(&k) {
        return Err(EvalError::InvalidK { k, max: NUM_RELATIONS });
    }
    if gold.is_empty() {
        return Err(EvalError::Empty);
    }
    let hits = rankings
        .iter()
        .zip(gold)
        .filter(|(ranked, g)| in_top_k(ranked, **g, k))
        .count();
    Ok(hits as f64 / gold.len() as f64)
}

/// Expected top-k accuracy of a uniformly random ranking.
pub fn random_chance(k: usize, num_classes: usize) -> f64 {
    assert!(k >= 1 && k <= num_classes, "1 <= k <= num_classes");
    k as f64 / num_classes as f64
}

/// Settings a report was produced under.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub geo: bool,
    pub aug: bool,
    pub rerank: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAccuracy {
    pub relation: SpatialRelation,
    pub count: usize,
    pub top1: f64,
    pub top3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingReport {
    pub instances: usize,
    pub top1: f64,
    pub top3: f64,
    pub chance_top1: f64,
    pub chance_top3: f64,
    pub delta_top1: f64,
    pub delta_top3: f64,
    pub config: ReportConfig,
    pub per_class: Vec<ClassAccuracy>,
}

impl RankingReport {
    /// Builds the report from rankings aligned with gold labels.
    pub fn from_rankings<T>(
        rankings: &[Vec<ScoredRelation<T>>],
        gold: &[SpatialRelation],
        config: ReportConfig,
    ) -> Result<Self, EvalError> {
        let top1 = top_k_accuracy(rankings, gold, 1)?;
        let top3 = top_k_accuracy(rankings, gold, 3)?;
        let chance_top1 = random_chance(1, NUM_RELATIONS);
        let chance_top3 = random_chance(3, NUM_RELATIONS);
        let mut per_class = Vec::new();
        for rel in SpatialRelation::ALL {
            let (mut count, mut hit1, mut hit3) = (0usize, 0usize, 0usize);
            for (ranked, _) in rankings.iter().zip(gold).filter(|(_, g)| **g == rel) {
                count += 1;
                hit1 += usize::from(in_top_k(ranked, rel, 1));
                hit3 += usize::from(in_top_k(ranked, rel, 3));
            }
            if count > 0 {
                per_class.push(ClassAccuracy {
                    relation: rel,
                    count,
                    top1: hit1 as f64 / count as f64,
                    top3: hit3 as f64 / count as f64,
                });
            }
        }
        Ok(Self {
            instances: gold.len(),
            top1,
            top3,
            chance_top1,
            chance_top3,
            delta_top1: top1 - chance_top1,
            delta_top3: top3 - chance_top3,
            config,
            per_class,
        })
    }

    /// Plain-text table: a random-chance row, the model row, and the delta
    /// over chance, all in percent, followed by the per-class breakdown.
    pub fn render_table(&self) -> String {
        let mut name = String::from("Bbox");
        name.push_str(if self.config.rerank { " w/ Re-ranking" } else { " w/o Re-ranking" });
        if self.config.geo {
            name.push_str(" + geo");
        }
        if self.config.aug {
            name.push_str(" + aug");
        }
        let pct = |v: f64| format!("{:.2}", 100.0 * v);
        let mut out = String::new();
        let _ = writeln!(out, "{:<32} {:>7} {:>7}", "Model", "Top-1", "Top-3");
        let _ = writeln!(out, "{}", "-".repeat(48));
        let _ = writeln!(out, "{:<32} {:>7} {:>7}", "Random Chance (multiclass)", pct(self.chance_top1), pct(self.chance_top3));
        let _ = writeln!(out, "{:<32} {:>7} {:>7}", name, pct(self.top1), pct(self.top3));
        let _ = writeln!(out, "{}", "-".repeat(48));
        let _ = writeln!(out, "{:<32} {:>7} {:>7}", "Delta over chance", pct(self.delta_top1), pct(self.delta_top3));
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<12} {:>6} {:>7} {:>7}", "Class", "N", "Top-1", "Top-3");
        for c in &self.per_class {
            let _ = writeln!(out, "{:<12} {:>6} {:>7} {:>7}", c.relation.name(), c.count, pct(c.top1), pct(c.top3));
        }
        let _ = writeln!(out, "({} test instances)", self.instances);
        out
    }
}

/// Ranks every test instance and summarizes top-1/top-3 accuracy.
pub fn evaluate<T: Scalar>(
    model: &MlpModel<T>,
    test: &[ClauseInstance<T>],
    priors: Option<&PriorTable<T>>,
    use_geo: bool,
) -> Result<RankingReport, EvalError> {
    let rankings = test
        .iter()
        .map(|inst| rank_clause(model, inst, priors, use_geo))
        .collect::<Result<Vec<_>, _>>()?;
    let gold: Vec<_> = test.iter().map(|i| i.relation).collect();
    let config = ReportConfig { geo: use_geo, aug: false, rerank: priors.is_some() };
    RankingReport::from_rankings(&rankings, &gold, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoundingBox, Grounding};
    use crate::mlp::ModelConfig;
    use crate::synthgen::{generate, SynthConfig};
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ranking(order: &[usize]) -> Vec<ScoredRelation<f64>> {
        order
            .iter()
            .enumerate()
            .map(|(i, &c)| ScoredRelation { relation: SpatialRelation::ALL[c], score: 1.0 - i as f64 * 0.1 })
            .collect()
    }

    #[test]
    fn chance_values() {
        assert!((random_chance(1, 9) - 0.1111).abs() < 1e-4);
        assert!((random_chance(3, 9) - 0.3333).abs() < 1e-4);
        assert_eq!(random_chance(9, 9), 1.0);
    }

    #[test]
    fn top_k_basics() {
        let r = vec![ranking(&[2, 0, 1, 3, 4, 5, 6, 7, 8]), ranking(&[5, 4, 3, 2, 1, 0, 6, 7, 8])];
        let gold = [SpatialRelation::FarFrom, SpatialRelation::Inside];
        for k in 1..=9 {
            assert_eq!(top_k_accuracy(&r, &gold, k).unwrap(), 1.0);
        }
        let gold = [SpatialRelation::Above, SpatialRelation::Contains];
        assert_eq!(top_k_accuracy(&r, &gold, 1).unwrap(), 0.0);
        assert_eq!(top_k_accuracy(&r, &gold, 3).unwrap(), 0.5);
        assert_eq!(top_k_accuracy(&r, &gold, 9).unwrap(), 1.0);
        assert!(matches!(top_k_accuracy(&r, &gold[..1], 1), Err(EvalError::LengthMismatch { .. })));
        assert!(matches!(top_k_accuracy(&r, &gold, 0), Err(EvalError::InvalidK { .. })));
    }

    #[test]
    fn random_rankings_hit_chance() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let n = 20_000;
        let mut rankings = Vec::with_capacity(n);
        let mut gold = Vec::with_capacity(n);
        for i in 0..n {
            let mut order: Vec<usize> = (0..9).collect();
            order.shuffle(&mut rng);
            rankings.push(ranking(&order));
            gold.push(SpatialRelation::ALL[i % 9]);
        }
        let acc = top_k_accuracy(&rankings, &gold, 3).unwrap();
        // binomial standard error is about 0.0033
        assert!((acc - 1.0 / 3.0).abs() < 0.015, "{acc}");
    }

    #[test]
    fn zero_network_hits_base_rate_of_first_class() {
        let cfg = SynthConfig { per_class: 4, ..Default::default() };
        let mut test = generate::<f64>(&cfg).unwrap();
        test.truncate(4 + 4 + 3); // 4 below, 4 above, 3 far_from
        let model = MlpModel::zeros(ModelConfig::new(8)).unwrap();
        let report = evaluate(&model, &test, None, false).unwrap();
        assert!((report.top1 - 4.0 / 11.0).abs() < 1e-15);
        assert_eq!(report.top3, 1.0);
        assert_eq!(report.delta_top1, report.top1 - report.chance_top1);
        let uniform = PriorTable::uniform(1.0);
        let with_priors = evaluate(&model, &test, Some(&uniform), false).unwrap();
        assert_eq!(with_priors.top1.to_bits(), report.top1.to_bits());
        assert_eq!(with_priors.top3.to_bits(), report.top3.to_bits());
        assert_eq!(with_priors.per_class, report.per_class);
    }

    #[test]
    fn table_shows_chance_row() {
        let g = Grounding::new(BoundingBox::new(0.1, 0.1, 0.2, 0.2).unwrap(), 1.0).unwrap();
        let test = vec![ClauseInstance::new("i", "a", SpatialRelation::Near, "b", g, g).unwrap(); 2];
        let model = MlpModel::zeros(ModelConfig::new(11)).unwrap();
        let table = evaluate(&model, &test, None, true).unwrap().render_table();
        let chance = table.lines().find(|l| l.starts_with("Random Chance")).unwrap();
        assert!(chance.ends_with("11.11   33.33"), "{table}");
        assert!(table.contains("Bbox w/o Re-ranking + geo"));
    }

    #[test]
    fn evaluation_ignores_test_order() {
        let cfg = SynthConfig { per_class: 5, seed: 9, ..Default::default() };
        let test = generate::<f64>(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = MlpModel::init(ModelConfig::new(11), &mut rng).unwrap();
        let mut shuffled = test.clone();
        shuffled.shuffle(&mut rng);
        assert_eq!(evaluate(&model, &test, None, true).unwrap(), evaluate(&model, &shuffled, None, true).unwrap());
    }
}
