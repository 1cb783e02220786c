//! The nine canonical spatial relation classes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Number of relation classes.
pub const NUM_RELATIONS: usize = 9;

/// A canonical spatial relation. The discriminant is the class index used
/// by the classifier output layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialRelation {
    Below = 0,
    Above = 1,
    FarFrom = 2,
    RightOf = 3,
    LeftOf = 4,
    Inside = 5,
    Outside = 6,
    Near = 7,
    Contains = 8,
}

/// How a relation behaves when subject and object are exchanged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    Symmetric,
    InverseOf(SpatialRelation),
}

impl SpatialRelation {
    pub const ALL: [SpatialRelation; NUM_RELATIONS] = [
        SpatialRelation::Below,
        SpatialRelation::Above,
        SpatialRelation::FarFrom,
        SpatialRelation::RightOf,
        SpatialRelation::LeftOf,
        SpatialRelation::Inside,
        SpatialRelation::Outside,
        SpatialRelation::Near,
        SpatialRelation::Contains,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    /// Identifier form, e.g. `far_from`.
    pub fn name(self) -> &'static str {
        match self {
            SpatialRelation::Below => "below",
            SpatialRelation::Above => "above",
            SpatialRelation::FarFrom => "far_from",
            SpatialRelation::RightOf => "right_of",
            SpatialRelation::LeftOf => "left_of",
            SpatialRelation::Inside => "inside",
            SpatialRelation::Outside => "outside",
            SpatialRelation::Near => "near",
            SpatialRelation::Contains => "contains",
        }
    }

    /// Caption form, e.g. `far from`. Every phrase is itself a mergeable
    /// clause, so files written with it can be read back unchanged.
    pub fn phrase(self) -> &'static str {
        match self {
            SpatialRelation::FarFrom => "far from",
            SpatialRelation::RightOf => "right of",
            SpatialRelation::LeftOf => "left of",
            other => other.name(),
        }
    }

    /// Symmetry under subject/object exchange. `outside` is reported as
    /// symmetric; callers that want to skip it use [`AugmentOptions`].
    ///
    /// [`AugmentOptions`]: crate::dataset::AugmentOptions
    pub fn symmetry(self) -> Symmetry {
        use SpatialRelation::*;
        match self {
            Near | FarFrom | Outside => Symmetry::Symmetric,
            Below => Symmetry::InverseOf(Above),
            Above => Symmetry::InverseOf(Below),
            LeftOf => Symmetry::InverseOf(RightOf),
            RightOf => Symmetry::InverseOf(LeftOf),
            Inside => Symmetry::InverseOf(Contains),
            Contains => Symmetry::InverseOf(Inside),
        }
    }

    /// The relation that holds after swapping subject and object.
    pub fn swapped(self) -> Self {
        match self.symmetry() {
            Symmetry::Symmetric => self,
            Symmetry::InverseOf(other) => other,
        }
    }
}

impl fmt::Display for SpatialRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown relation class `{0}`")]
pub struct UnknownRelation(pub String);

impl FromStr for SpatialRelation {
    type Err = UnknownRelation;

    /// Accepts the identifier (`far_from`) or caption (`far from`) form.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(' ', "_");
        Self::ALL
            .iter()
            .copied()
            .find(|r| r.name() == norm)
            .ok_or_else(|| UnknownRelation(s.to_string()))
    }
}
