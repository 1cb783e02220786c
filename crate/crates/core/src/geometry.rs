//! Normalized bounding boxes, groundings and the classifier input features.
//!
//! Boxes are anchored at their top-left corner with `y` growing downwards,
//! and are stored in `[x, y, h, w]` order everywhere they are serialized.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

/// Slack allowed on the right/bottom edge for detector rounding.
pub const EDGE_TOLERANCE: f64 = 1e-6;

/// Centers closer than this produce a zero direction vector.
pub const COINCIDENT_EPS: f64 = 1e-9;

pub const BASE_FEATURES: usize = 8;
pub const GEO_FEATURES: usize = 11;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("box field `{field}` = {value} is out of range")]
    OutOfRange { field: &'static str, value: f64 },
    #[error("box extends past the frame: {axis} + extent = {value}")]
    PastEdge { axis: &'static str, value: f64 },
    #[error("confidence {0} is not in [0, 1]")]
    Confidence(f64),
    #[error("feature vector has length {0}, expected 8 or 11")]
    FeatureLength(usize),
    #[error("feature vector contains a non-finite value")]
    NonFinite,
}

/// Normalized axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[T; 4]", into = "[T; 4]", bound = "T: Scalar")]
pub struct BoundingBox<T = f64> {
    x: T,
    y: T,
    h: T,
    w: T,
}

impl<T: Scalar> BoundingBox<T> {
    pub fn new(x: T, y: T, h: T, w: T) -> Result<Self, GeometryError> {
        let unit = |field, v: T| {
            if v.is_finite() && v >= T::zero() && v <= T::one() {
                Ok(())
            } else {
                Err(GeometryError::OutOfRange { field, value: v.to_f64_lossy() })
            }
        };
        unit("x", x)?;
        unit("y", y)?;
        unit("h", h)?;
        unit("w", w)?;
        if h <= T::zero() {
            return Err(GeometryError::OutOfRange { field: "h", value: h.to_f64_lossy() });
        }
        if w <= T::zero() {
            return Err(GeometryError::OutOfRange { field: "w", value: w.to_f64_lossy() });
        }
        let limit = T::one() + T::lit(EDGE_TOLERANCE);
        if x + w > limit {
            return Err(GeometryError::PastEdge { axis: "x", value: (x + w).to_f64_lossy() });
        }
        if y + h > limit {
            return Err(GeometryError::PastEdge { axis: "y", value: (y + h).to_f64_lossy() });
        }
        Ok(Self { x, y, h, w })
    }

    /// Builds a box from `[x, y, h, w]`.
    pub fn from_xyhw(v: [T; 4]) -> Result<Self, GeometryError> {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn x(&self) -> T {
        self.x
    }
    pub fn y(&self) -> T {
        self.y
    }
    pub fn h(&self) -> T {
        self.h
    }
    pub fn w(&self) -> T {
        self.w
    }
    pub fn right(&self) -> T {
        self.x + self.w
    }
    pub fn bottom(&self) -> T {
        self.y + self.h
    }

    pub fn to_xyhw(&self) -> [T; 4] {
        [self.x, self.y, self.h, self.w]
    }

    pub fn center(&self) -> (T, T) {
        center(self)
    }

    /// True when the interiors do not overlap.
    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.right() <= other.x
            || other.right() <= self.x
            || self.bottom() <= other.y
            || other.bottom() <= self.y
    }
}

impl<T: Scalar> TryFrom<[T; 4]> for BoundingBox<T> {
    type Error = GeometryError;
    fn try_from(v: [T; 4]) -> Result<Self, Self::Error> {
        Self::from_xyhw(v)
    }
}

impl<T: Scalar> From<BoundingBox<T>> for [T; 4] {
    fn from(b: BoundingBox<T>) -> Self {
        b.to_xyhw()
    }
}

/// A localized noun phrase: its box and the localizer's confidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Grounding<T = f64> {
    pub bbox: BoundingBox<T>,
    confidence: T,
}

impl<T: Scalar> Grounding<T> {
    pub fn new(bbox: BoundingBox<T>, confidence: T) -> Result<Self, GeometryError> {
        if !(confidence >= T::zero() && confidence <= T::one()) {
            return Err(GeometryError::Confidence(confidence.to_f64_lossy()));
        }
        Ok(Self { bbox, confidence })
    }

    pub fn confidence(&self) -> T {
        self.confidence
    }
}

/// Classifier input: 8 box coordinates, optionally followed by 3 geometry
/// features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector<T = f64>(Vec<T>);

impl<T: Scalar> FeatureVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self, GeometryError> {
        if values.len() != BASE_FEATURES && values.len() != GEO_FEATURES {
            return Err(GeometryError::FeatureLength(values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Box center `(x + w/2, y + h/2)`.
pub fn center<T: Scalar>(b: &BoundingBox<T>) -> (T, T) {
    let half = T::lit(0.5);
    (b.x + b.w * half, b.y + b.h * half)
}

/// Unit direction from the subject center to the object center, and the
/// distance between them. Coincident centers give `(0, 0, d)`.
pub fn geometry_features<T: Scalar>(subject: &BoundingBox<T>, object: &BoundingBox<T>) -> (T, T, T) {
    let (sx, sy) = center(subject);
    let (ox, oy) = center(object);
    let (dx, dy) = (ox - sx, oy - sy);
    let d = dx.hypot(dy);
    if d >= T::lit(COINCIDENT_EPS) {
        (dx / d, dy / d, d)
    } else {
        (T::zero(), T::zero(), d)
    }
}

/// `[x_s, y_s, h_s, w_s, x_o, y_o, h_o, w_o]`, plus `[ux, uy, d]` when
/// `use_geo` is set.
pub fn assemble_features<T: Scalar>(
    subject: &BoundingBox<T>,
    object: &BoundingBox<T>,
    use_geo: bool,
) -> FeatureVector<T> {
    let mut v = Vec::with_capacity(if use_geo { GEO_FEATURES } else { BASE_FEATURES });
    v.extend_from_slice(&subject.to_xyhw());
    v.extend_from_slice(&object.to_xyhw());
    if use_geo {
        let (ux, uy, d) = geometry_features(subject, object);
        v.extend_from_slice(&[ux, uy, d]);
    }
    FeatureVector(v)
}

/// Input width implied by the geometry flag.
pub fn feature_dim(use_geo: bool) -> usize {
    if use_geo {
        GEO_FEATURES
    } else {
        BASE_FEATURES
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bb(x: f64, y: f64, h: f64, w: f64) -> BoundingBox {
        BoundingBox::new(x, y, h, w).unwrap()
    }

    fn box_from_center(cx: f64, cy: f64) -> BoundingBox {
        bb(cx - 0.05, cy - 0.05, 0.1, 0.1)
    }

    #[test]
    fn center_examples() {
        assert_eq!(center(&bb(0.0, 0.0, 1.0, 1.0)), (0.5, 0.5));
        let (cx, cy) = center(&bb(0.2, 0.4, 0.2, 0.2));
        assert!((cx - 0.3).abs() < 1e-15 && (cy - 0.5).abs() < 1e-15);
        let (cx, cy) = center(&bb(0.9, 0.9, 0.1, 0.1));
        assert!((cx - 0.95).abs() < 1e-15 && (cy - 0.95).abs() < 1e-15);
    }

    #[test]
    fn rejects_invalid_boxes() {
        assert!(BoundingBox::new(-0.1, 0.0, 0.5, 0.5).is_err());
        assert!(BoundingBox::new(0.0, 0.0, 0.0, 0.5).is_err());
        assert!(BoundingBox::new(0.6, 0.0, 0.5, 0.5).is_err());
        assert!(BoundingBox::new(0.5, 0.5, 0.5 + 5e-7, 0.5).is_ok());
        assert!(BoundingBox::new(0.0, 0.0, f64::NAN, 0.5).is_err());
        assert!(Grounding::new(bb(0.0, 0.0, 1.0, 1.0), 1.5).is_err());
    }

    #[test]
    fn geometry_examples() {
        let a = bb(0.1, 0.1, 0.2, 0.2);
        assert_eq!(geometry_features(&a, &a), (0.0, 0.0, 0.0));

        let (ux, uy, d) = geometry_features(&box_from_center(0.25, 0.5), &box_from_center(0.75, 0.5));
        assert!((ux - 1.0).abs() < 1e-12 && uy.abs() < 1e-12 && (d - 0.5).abs() < 1e-12);

        let s = bb(0.0, 0.0, 1e-9, 1e-9);
        let o = bb(0.25, 0.35, 0.1, 0.1);
        let (ux, uy, d) = geometry_features(&s, &o);
        assert!((ux - 0.6).abs() < 1e-8 && (uy - 0.8).abs() < 1e-8 && (d - 0.5).abs() < 1e-8);
    }

    #[test]
    fn feature_lengths_and_swap() {
        let a = bb(0.1, 0.2, 0.3, 0.4);
        let b = bb(0.5, 0.1, 0.2, 0.3);
        assert_eq!(assemble_features(&a, &b, false).len(), 8);
        let ab = assemble_features(&a, &b, true);
        let ba = assemble_features(&b, &a, true);
        assert_eq!(ab.len(), 11);
        assert_eq!(ab.as_slice()[..4], ba.as_slice()[4..8]);
        assert_eq!(ab.as_slice()[4..8], ba.as_slice()[..4]);
        assert_eq!(ab.as_slice()[8], -ba.as_slice()[8]);
        assert_eq!(ab.as_slice()[9], -ba.as_slice()[9]);
        assert_eq!(ab.as_slice()[10], ba.as_slice()[10]);
        assert!(FeatureVector::new(vec![0.0; 9]).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let a = BoundingBox::<f32>::new(0.0, 0.0, 0.2, 0.2).unwrap();
        let b = BoundingBox::<f32>::new(0.3, 0.4, 0.2, 0.2).unwrap();
        let (ux, uy, d) = geometry_features(&a, &b);
        assert!((ux - 0.6).abs() < 1e-6 && (uy - 0.8).abs() < 1e-6 && (d - 0.5).abs() < 1e-6);
    }

    fn arb_box() -> impl Strategy<Value = BoundingBox> {
        (0.01f64..1.0, 0.01f64..1.0, 0.0f64..1.0, 0.0f64..1.0).prop_map(|(w, h, fx, fy)| {
            bb(fx * (1.0 - w), fy * (1.0 - h), h, w)
        })
    }

    proptest! {
        #[test]
        fn antisymmetric_and_bounded(a in arb_box(), b in arb_box()) {
            let (ux, uy, d) = geometry_features(&a, &b);
            let (vx, vy, e) = geometry_features(&b, &a);
            prop_assert_eq!(d, e);
            prop_assert!((ux + vx).abs() < 1e-12 && (uy + vy).abs() < 1e-12);
            prop_assert!(d <= 2f64.sqrt());
            let n = ux.hypot(uy);
            prop_assert!(n == 0.0 || (n - 1.0).abs() < 1e-9);
        }

        #[test]
        fn center_tracks_translation(a in arb_box(), t in 0.0f64..1.0) {
            let delta = t * (1.0 - a.right());
            let shifted = bb(a.x() + delta, a.y(), a.h(), a.w());
            prop_assert!((center(&shifted).0 - center(&a).0 - delta).abs() < 1e-12);
        }

        #[test]
        fn assemble_is_pure(a in arb_box(), b in arb_box()) {
            let f1 = assemble_features(&a, &b, true);
            let f2 = assemble_features(&a, &b, true);
            prop_assert!(f1.as_slice().iter().zip(f2.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }
}
