//! Mapping from caption-level relation phrases onto the nine classes.

use thiserror::Error;

use crate::relation::SpatialRelation;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("relation phrase `{0}` has no merged class")]
pub struct MergeError(pub String);

use SpatialRelation::*;

/// Every accepted phrase with its merged class. Orientation clauses
/// (`facing away`, `parallel to`) and depth clauses (`in front of`,
/// `behind`) are deliberately absent.
pub const CLAUSE_TABLE: [(&str, SpatialRelation); 32] = [
    ("below", Below),
    ("beneath", Below),
    ("under", Below),
    ("above", Above),
    ("on", Above),
    ("on top of", Above),
    ("over", Above),
    ("away from", FarFrom),
    ("far away from", FarFrom),
    ("far from", FarFrom),
    ("at the right side of", RightOf),
    ("right of", RightOf),
    ("at the left side of", LeftOf),
    ("left of", LeftOf),
    ("in", Inside),
    ("in the middle of", Inside),
    ("inside", Inside),
    ("part of", Inside),
    ("within", Inside),
    ("outside", Outside),
    ("adjacent to", Near),
    ("at the edge of", Near),
    ("at the side of", Near),
    ("attached to", Near),
    ("beside", Near),
    ("by", Near),
    ("close to", Near),
    ("connected to", Near),
    ("near", Near),
    ("next to", Near),
    ("touching", Near),
    ("contains", Contains),
];

/// Case-insensitive, whitespace-normalized lookup in [`CLAUSE_TABLE`].
pub fn merge_clause(original: &str) -> Result<SpatialRelation, MergeError> {
    let norm = original
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase();
    CLAUSE_TABLE
        .iter()
        .find(|(phrase, _)| *phrase == norm)
        .map(|&(_, rel)| rel)
        .ok_or_else(|| MergeError(original.to_string()))
}
