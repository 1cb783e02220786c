//! Compositional spatial-relation ranking.
//!
//! Subject and object phrases of a `(subject, relation, object)` clause are
//! grounded to boxes with confidences upstream. A small classifier maps the
//! box pair to a distribution over nine relation classes, which is
//! optionally re-weighted by co-occurrence priors of the name pair and
//! scaled by both grounding confidences to rank the relations.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the common choices.

pub mod dataset;
pub mod eval;
pub mod geometry;
pub mod instance;
pub mod mlp;
pub mod ranking;
pub mod relation;
mod scalar;
pub mod synthgen;

pub use geometry::{assemble_features, center, geometry_features, BoundingBox, FeatureVector, Grounding};
pub use instance::ClauseInstance;
pub use mlp::{MlpModel, RelationDistribution};
pub use ranking::{PriorTable, ScoredRelation};
pub use relation::{SpatialRelation, NUM_RELATIONS};
pub use scalar::Scalar;

pub type Model = MlpModel<f64>;
pub type Model32 = MlpModel<f32>;
pub type Instance = ClauseInstance<f64>;
pub type Instance32 = ClauseInstance<f32>;
pub type Features = FeatureVector<f64>;
pub type Features32 = FeatureVector<f32>;
pub type Distribution = RelationDistribution<f64>;
pub type Distribution32 = RelationDistribution<f32>;
pub type Priors = PriorTable<f64>;
pub type Priors32 = PriorTable<f32>;
