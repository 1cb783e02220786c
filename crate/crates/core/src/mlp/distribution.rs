use serde::{Deserialize, Serialize};

use super::MlpError;
use crate::relation::{SpatialRelation, NUM_RELATIONS};
use crate::Scalar;

/// Probability over the nine relation classes, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelationDistribution<T = f64>([T; NUM_RELATIONS]);

impl<T: Scalar> RelationDistribution<T> {
    /// Validates entries in `[0, 1]` summing to `1 ± 1e-6`.
    pub fn new(probs: [T; NUM_RELATIONS]) -> Result<Self, MlpError> {
        let sum: T = probs.iter().copied().sum();
        let ok = probs.iter().all(|&p| p >= T::zero() && p <= T::one())
            && (sum - T::one()).abs() <= T::lit(1e-6);
        if ok {
            Ok(Self(probs))
        } else {
            Err(MlpError::InvalidDistribution(format!("{:?}", probs)))
        }
    }

    pub fn from_slice(probs: &[T]) -> Result<Self, MlpError> {
        let arr: [T; NUM_RELATIONS] = probs
            .try_into()
            .map_err(|_| MlpError::InvalidDistribution(format!("expected 9 entries, got {}", probs.len())))?;
        Self::new(arr)
    }

    pub fn uniform() -> Self {
        Self([T::one() / T::from_usize_lossy(NUM_RELATIONS); NUM_RELATIONS])
    }

    pub fn probs(&self) -> &[T; NUM_RELATIONS] {
        &self.0
    }

    pub fn prob(&self, r: SpatialRelation) -> T {
        self.0[r.index()]
    }

    /// Most probable class; ties go to the lower index.
    pub fn argmax(&self) -> SpatialRelation {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = i;
            }
        }
        SpatialRelation::ALL[best]
    }
}
