//! Record ingestion, clause merging, stratified splitting and augmentation.

mod augment;
mod merge;
mod records;
mod split;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use augment::{augment, augment_with, AugmentOptions};
pub use merge::{merge_clause, MergeError, CLAUSE_TABLE};
pub use records::{instance_to_line, parse_line, parse_records, write_instances, RawRecord};
pub use split::{stratified_split, SplitPair};

use crate::instance::ClauseInstance;
use crate::relation::SpatialRelation;
use crate::Scalar;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: missing required field `{field}`")]
    MissingField { line: usize, field: &'static str },
    #[error("line {line}: invalid `{field}`: {reason}")]
    InvalidField { line: usize, field: &'static str, reason: String },
    #[error("class `{class}` has {count} instance(s); stratified splitting needs at least 2")]
    ClassTooSmall { class: SpatialRelation, count: usize },
    #[error("split ratio {0} must lie strictly between 0 and 1")]
    InvalidRatio(f64),
}

/// Filters applied by [`prepare_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrepareOptions {
    /// Records whose subject or object confidence is below this are dropped.
    pub min_confidence: f64,
}

impl Default for PrepareOptions {
    fn default() -> Self {
        Self { min_confidence: 0.0 }
    }
}

/// Why a record did not become an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    NegativeLabel,
    UnmappedRelation,
    MissingGrounding,
    LowConfidence,
}

/// Counts describing one [`prepare`] run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PrepareSummary {
    pub input: usize,
    pub kept: usize,
    pub per_class: BTreeMap<String, usize>,
    pub dropped: BTreeMap<DropReason, usize>,
    /// Unmapped phrases (lowercased) and how often each was seen.
    pub unmapped_phrases: BTreeMap<String, usize>,
}

/// Per-class counts in canonical class order, zero-filled.
pub fn class_counts<T>(instances: &[ClauseInstance<T>]) -> BTreeMap<String, usize> {
    let mut counts: BTreeMap<String, usize> =
        SpatialRelation::ALL.iter().map(|r| (r.name().to_string(), 0)).collect();
    for inst in instances {
        *counts.get_mut(inst.relation.name()).expect("all classes present") += 1;
    }
    counts
}

/// Keeps positive records whose relation merges into one of the nine
/// classes and that carry both groundings.
pub fn prepare<T: Scalar>(records: &[RawRecord<T>]) -> (Vec<ClauseInstance<T>>, PrepareSummary) {
    prepare_with(records, PrepareOptions::default())
}

pub fn prepare_with<T: Scalar>(
    records: &[RawRecord<T>],
    opts: PrepareOptions,
) -> (Vec<ClauseInstance<T>>, PrepareSummary) {
    let mut summary = PrepareSummary { input: records.len(), ..Default::default() };
    let mut kept = Vec::new();
    let min_conf = T::lit(opts.min_confidence);
    for rec in records {
        let reason = (|| {
            if rec.label != 1 {
                return Err(DropReason::NegativeLabel);
            }
            let relation = merge_clause(&rec.relation).map_err(|_| DropReason::UnmappedRelation)?;
            let (Some(subject), Some(object)) = (rec.subject_grounding, rec.object_grounding) else {
                return Err(DropReason::MissingGrounding);
            };
            if subject.confidence() < min_conf || object.confidence() < min_conf {
                return Err(DropReason::LowConfidence);
            }
            ClauseInstance::new(&rec.image_id, &rec.subject, relation, &rec.object, subject, object)
                .map_err(|_| DropReason::MissingGrounding)
        })();
        match reason {
            Ok(inst) => kept.push(inst),
            Err(r) => {
                *summary.dropped.entry(r).or_default() += 1;
                if r == DropReason::UnmappedRelation {
                    *summary
                        .unmapped_phrases
                        .entry(rec.relation.trim().to_lowercase())
                        .or_default() += 1;
                }
            }
        }
    }
    summary.kept = kept.len();
    summary.per_class = class_counts(&kept);
    (kept, summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(relation: &str, label: u8) -> String {
        format!(
            r#"{{"image_id":"i","subject":"cup","object":"table","relation":"{relation}","label":{label},"subject_box":[0.1,0.1,0.2,0.2],"subject_conf":0.9,"object_box":[0.0,0.4,0.5,1.0],"object_conf":0.85}}"#
        )
    }

    #[test]
    fn prepare_filters_and_merges() {
        let text = [
            rec("close to", 1),
            rec("close to", 0),
            rec("behind", 1),
            rec("beneath", 1),
            r#"{"image_id":"j","subject":"a","object":"b","relation":"near","label":1}"#.to_string(),
        ]
        .join("\n");
        let records: Vec<RawRecord> = parse_records(text.as_bytes()).unwrap();
        let (kept, summary) = prepare(&records);
        assert_eq!(kept.len(), 2);
        assert_eq!(kept[0].relation, SpatialRelation::Near);
        assert_eq!(kept[1].relation, SpatialRelation::Below);
        assert_eq!(summary.input, 5);
        assert_eq!(summary.kept, 2);
        assert_eq!(summary.dropped[&DropReason::NegativeLabel], 1);
        assert_eq!(summary.dropped[&DropReason::UnmappedRelation], 1);
        assert_eq!(summary.dropped[&DropReason::MissingGrounding], 1);
        assert_eq!(summary.unmapped_phrases["behind"], 1);
        assert_eq!(summary.per_class["near"], 1);
        assert_eq!(summary.per_class["contains"], 0);
    }

    #[test]
    fn confidence_filter() {
        let records: Vec<RawRecord> = parse_records(rec("near", 1).as_bytes()).unwrap();
        let (kept, _) = prepare_with(&records, PrepareOptions { min_confidence: 0.86 });
        assert!(kept.is_empty());
        let (kept, _) = prepare_with(&records, PrepareOptions { min_confidence: 0.85 });
        assert_eq!(kept.len(), 1);
    }

    #[test]
    fn written_instances_reparse_identically() {
        let records: Vec<RawRecord> = parse_records(rec("at the left side of", 1).as_bytes()).unwrap();
        let (kept, _) = prepare(&records);
        let mut buf = Vec::new();
        write_instances(&mut buf, &kept).unwrap();
        let again: Vec<RawRecord> = parse_records(buf.as_slice()).unwrap();
        assert_eq!(prepare(&again).0, kept);
    }
}
