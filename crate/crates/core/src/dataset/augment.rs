use serde::{Deserialize, Serialize};

use crate::instance::ClauseInstance;
use crate::relation::SpatialRelation;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentOptions {
    /// Swap `outside` instances as a symmetric relation. When false they are
    /// passed through without a swapped copy.
    pub outside_symmetric: bool,
}

impl Default for AugmentOptions {
    fn default() -> Self {
        Self { outside_symmetric: true }
    }
}

/// Doubles the set: every instance is followed by its subject/object swap,
/// with asymmetric relations replaced by their inverse.
pub fn augment<T: Scalar>(train: &[ClauseInstance<T>]) -> Vec<ClauseInstance<T>> {
    augment_with(train, AugmentOptions::default())
}

pub fn augment_with<T: Scalar>(train: &[ClauseInstance<T>], opts: AugmentOptions) -> Vec<ClauseInstance<T>> {
    let mut out = Vec::with_capacity(train.len() * 2);
    for inst in train {
        out.push(inst.clone());
        if inst.relation == SpatialRelation::Outside && !opts.outside_symmetric {
            continue;
        }
        out.push(inst.swapped());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoundingBox, Grounding};
    use SpatialRelation::*;

    fn inst(rel: SpatialRelation) -> ClauseInstance {
        let a = Grounding::new(BoundingBox::new(0.1, 0.1, 0.2, 0.2).unwrap(), 0.9).unwrap();
        let b = Grounding::new(BoundingBox::new(0.6, 0.1, 0.2, 0.2).unwrap(), 0.8).unwrap();
        ClauseInstance::new("img", "A", rel, "B", a, b).unwrap()
    }

    #[test]
    fn asymmetric_is_reversed() {
        let out = augment(&[inst(LeftOf)]);
        assert_eq!(out.len(), 2);
        assert_eq!(out[1].relation, RightOf);
        assert_eq!(out[1].subject_name, "B");
        assert_eq!(out[1].object_name, "A");
        assert_eq!(out[1].subject, out[0].object);
    }

    #[test]
    fn symmetric_is_kept() {
        let out = augment(&[inst(Near)]);
        assert_eq!(out[1].relation, Near);
        assert_eq!(out[1].subject_name, "B");
    }

    #[test]
    fn doubles_every_class_and_swap_of_swap_is_identity() {
        let input: Vec<_> = SpatialRelation::ALL.iter().map(|&r| inst(r)).collect();
        let out = augment(&input);
        assert_eq!(out.len(), 2 * input.len());
        for (orig, pair) in input.iter().zip(out.chunks(2)) {
            assert_eq!(&pair[1].swapped(), orig);
        }
    }

    #[test]
    fn outside_can_be_passed_through() {
        let out = augment_with(&[inst(Outside), inst(Near)], AugmentOptions { outside_symmetric: false });
        assert_eq!(out.len(), 3);
    }
}
