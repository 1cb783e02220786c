use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Grounding;
use crate::relation::SpatialRelation;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("clause {0} name must be non-empty")]
pub struct EmptyName(pub &'static str);

/// One grounded `(subject, relation, object)` clause for one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ClauseInstance<T = f64> {
    pub image_id: String,
    pub subject_name: String,
    pub object_name: String,
    pub relation: SpatialRelation,
    pub subject: Grounding<T>,
    pub object: Grounding<T>,
}

impl<T: Scalar> ClauseInstance<T> {
    pub fn new(
        image_id: impl Into<String>,
        subject_name: impl Into<String>,
        relation: SpatialRelation,
        object_name: impl Into<String>,
        subject: Grounding<T>,
        object: Grounding<T>,
    ) -> Result<Self, EmptyName> {
        let subject_name = subject_name.into();
        let object_name = object_name.into();
        if subject_name.trim().is_empty() {
            return Err(EmptyName("subject"));
        }
        if object_name.trim().is_empty() {
            return Err(EmptyName("object"));
        }
        Ok(Self {
            image_id: image_id.into(),
            subject_name,
            object_name,
            relation,
            subject,
            object,
        })
    }

    /// Identity used for split disjointness.
    pub fn key(&self) -> (&str, &str, SpatialRelation, &str) {
        (&self.image_id, &self.subject_name, self.relation, &self.object_name)
    }

    /// The same scene described from the object's point of view.
    pub fn swapped(&self) -> Self {
        Self {
            image_id: self.image_id.clone(),
            subject_name: self.object_name.clone(),
            object_name: self.subject_name.clone(),
            relation: self.relation.swapped(),
            subject: self.object,
            object: self.subject,
        }
    }
}
