//! Seeded generator of box pairs whose relation is known analytically.
//!
//! [`label_of`] is the oracle; [`generate`] samples class-specific layouts
//! and keeps only those the oracle labels as the intended class.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{BoundingBox, Grounding};
use crate::instance::ClauseInstance;
use crate::relation::SpatialRelation;
use crate::Scalar;

/// Object names used for generated clauses.
pub const VOCABULARY: [&str; 24] = [
    "cup", "table", "cat", "sofa", "dog", "car", "bird", "tree", "book", "shelf", "lamp", "desk",
    "horse", "fence", "plate", "oven", "person", "bench", "bottle", "sink", "clock", "wall",
    "umbrella", "bed",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    Config(String),
    #[error("gave up generating `{class}` after {attempts} attempts")]
    Exhausted { class: SpatialRelation, attempts: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Instances per class.
    pub per_class: usize,
    pub seed: u64,
    pub near_threshold: f64,
    pub far_threshold: f64,
    pub directional_gap: f64,
    pub containment_margin: f64,
    /// Probability that an instance takes its class's characteristic
    /// subject/object names instead of a uniformly drawn pair.
    pub name_skew: f64,
    /// Sampling attempts per instance before giving up.
    pub max_attempts: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            per_class: 100,
            seed: 0,
            near_threshold: 0.25,
            far_threshold: 0.6,
            directional_gap: 0.05,
            containment_margin: 0.02,
            name_skew: 0.0,
            max_attempts: 10_000,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let err = |m: &str| Err(SynthError::Config(m.to_string()));
        if !(self.near_threshold > 0.0 && self.far_threshold > self.near_threshold) {
            return err("need far_threshold > near_threshold > 0");
        }
        if !(self.directional_gap > 0.0 && self.containment_margin > 0.0) {
            return err("directional_gap and containment_margin must be positive");
        }
        if !(0.0..=1.0).contains(&self.name_skew) {
            return err("name_skew must lie in [0, 1]");
        }
        if self.max_attempts == 0 {
            return err("max_attempts must be positive");
        }
        Ok(())
    }
}

fn strictly_within<T: Scalar>(inner: &BoundingBox<T>, outer: &BoundingBox<T>, margin: T) -> bool {
    inner.x() >= outer.x() + margin
        && inner.y() >= outer.y() + margin
        && inner.right() <= outer.right() - margin
        && inner.bottom() <= outer.bottom() - margin
}

/// Analytic relation of a box pair, or `None` when the layout is ambiguous.
/// Rules are tried in order: containment, vertical, horizontal, distance.
pub fn label_of<T: Scalar>(
    subject: &BoundingBox<T>,
    object: &BoundingBox<T>,
    config: &SynthConfig,
) -> Option<SpatialRelation> {
    use SpatialRelation::*;
    let margin = T::lit(config.containment_margin);
    let gap = T::lit(config.directional_gap);
    if strictly_within(subject, object, margin) {
        return Some(Inside);
    }
    if strictly_within(object, subject, margin) {
        return Some(Contains);
    }
    let (scx, scy) = subject.center();
    let (ocx, ocy) = object.center();
    if (scx - ocx).abs() < gap {
        if subject.bottom() + gap <= object.y() {
            return Some(Above);
        }
        if object.bottom() + gap <= subject.y() {
            return Some(Below);
        }
    }
    if (scy - ocy).abs() < gap {
        if subject.right() + gap <= object.x() {
            return Some(LeftOf);
        }
        if object.right() + gap <= subject.x() {
            return Some(RightOf);
        }
    }
    if !subject.is_disjoint(object) {
        return None;
    }
    let d = (ocx - scx).hypot(ocy - scy);
    if d > T::lit(config.far_threshold) {
        Some(FarFrom)
    } else if d < T::lit(config.near_threshold) {
        Some(Near)
    } else {
        Some(Outside)
    }
}

type Rect = (f64, f64, f64, f64); // x, y, h, w

fn to_box<T: Scalar>(r: Rect) -> Option<BoundingBox<T>> {
    let (x, y, h, w) = r;
    if x < 0.0 || y < 0.0 || x + w > 1.0 || y + h > 1.0 {
        return None;
    }
    BoundingBox::new(T::lit(x), T::lit(y), T::lit(h), T::lit(w)).ok()
}

fn rect_at_center(cx: f64, cy: f64, h: f64, w: f64) -> Rect {
    (cx - w / 2.0, cy - h / 2.0, h, w)
}

/// Two boxes stacked along one axis: the first before (above or left of)
/// the second, centers nearly aligned on the other axis.
fn stacked<R: Rng>(rng: &mut R, cfg: &SynthConfig, horizontal: bool) -> (Rect, Rect) {
    let (a_len, a_wid): (f64, f64) = (rng.gen_range(0.08..0.3), rng.gen_range(0.08..0.3));
    let (b_len, b_wid): (f64, f64) = (rng.gen_range(0.08..0.3), rng.gen_range(0.08..0.3));
    let spacing = cfg.directional_gap + rng.gen_range(0.01..0.25);
    let span = a_len + spacing + b_len;
    let start = rng.gen_range(0.0..(1.0 - span).max(1e-3));
    let half = a_wid.max(b_wid) / 2.0;
    let across = rng.gen_range(half..(1.0 - half).max(half + 1e-3));
    let offset = rng.gen_range(-0.3..0.3) * cfg.directional_gap;
    let a_mid = start + a_len / 2.0;
    let b_mid = start + a_len + spacing + b_len / 2.0;
    let (ca, cb) = (across + offset / 2.0, across - offset / 2.0);
    if horizontal {
        (rect_at_center(a_mid, ca, a_wid, a_len), rect_at_center(b_mid, cb, b_wid, b_len))
    } else {
        (rect_at_center(ca, a_mid, a_len, a_wid), rect_at_center(cb, b_mid, b_len, b_wid))
    }
}

/// A small box displaced from `anchor`'s center by `dist` along a diagonal
/// direction, away from both axes.
fn diagonal_from<R: Rng>(rng: &mut R, anchor: Rect, dist: f64, size: (f64, f64)) -> Rect {
    let quadrant = rng.gen_range(0..4) as f64;
    let theta = (quadrant * 90.0 + 45.0 + rng.gen_range(-25.0..25.0)).to_radians();
    let (ax, ay) = (anchor.0 + anchor.3 / 2.0, anchor.1 + anchor.2 / 2.0);
    let h = rng.gen_range(size.0..size.1);
    let w = rng.gen_range(size.0..size.1);
    rect_at_center(ax + dist * theta.cos(), ay + dist * theta.sin(), h, w)
}

fn random_rect<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> Rect {
    let h = rng.gen_range(lo..hi);
    let w = rng.gen_range(lo..hi);
    (rng.gen_range(0.0..1.0 - w), rng.gen_range(0.0..1.0 - h), h, w)
}

fn sample_layout<R: Rng>(rng: &mut R, cfg: &SynthConfig, class: SpatialRelation) -> (Rect, Rect) {
    use SpatialRelation::*;
    match class {
        Inside | Contains => {
            let outer = random_rect(rng, 0.45, 0.8);
            let m = cfg.containment_margin + 0.01;
            let w = outer.3 * rng.gen_range(0.15..0.4);
            let h = outer.2 * rng.gen_range(0.15..0.4);
            let x = rng.gen_range(outer.0 + m..(outer.0 + outer.3 - m - w).max(outer.0 + m + 1e-3));
            let y = rng.gen_range(outer.1 + m..(outer.1 + outer.2 - m - h).max(outer.1 + m + 1e-3));
            let inner = (x, y, h, w);
            if class == Inside {
                (inner, outer)
            } else {
                (outer, inner)
            }
        }
        Above => stacked(rng, cfg, false),
        Below => {
            let (a, b) = stacked(rng, cfg, false);
            (b, a)
        }
        LeftOf => stacked(rng, cfg, true),
        RightOf => {
            let (a, b) = stacked(rng, cfg, true);
            (b, a)
        }
        FarFrom => {
            let anchor = random_rect(rng, 0.04, 0.1);
            let dist = rng.gen_range(cfg.far_threshold + 0.15..cfg.far_threshold + 0.55);
            (anchor, diagonal_from(rng, anchor, dist, (0.04, 0.1)))
        }
        Near => {
            let anchor = random_rect(rng, 0.05, 0.1);
            let dist = rng.gen_range(0.5..0.8) * cfg.near_threshold;
            (anchor, diagonal_from(rng, anchor, dist, (0.05, 0.1)))
        }
        Outside => {
            let container = random_rect(rng, 0.35, 0.5);
            let lo = cfg.near_threshold + 0.1;
            let hi = (cfg.far_threshold - 0.05).max(lo + 1e-3);
            let dist = rng.gen_range(lo..hi);
            (diagonal_from(rng, container, dist, (0.05, 0.12)), container)
        }
    }
}

fn pick_names<R: Rng>(rng: &mut R, cfg: &SynthConfig, class: SpatialRelation) -> (&'static str, &'static str) {
    if cfg.name_skew > 0.0 && rng.gen_bool(cfg.name_skew) {
        let c = class.index();
        return (VOCABULARY[2 * c], VOCABULARY[2 * c + 1]);
    }
    let s = rng.gen_range(0..VOCABULARY.len());
    let mut o = rng.gen_range(0..VOCABULARY.len() - 1);
    if o >= s {
        o += 1;
    }
    (VOCABULARY[s], VOCABULARY[o])
}

/// `per_class` instances of every class, in class order. Each class draws
/// from its own seeded stream.
pub fn generate<T: Scalar>(config: &SynthConfig) -> Result<Vec<ClauseInstance<T>>, SynthError> {
    config.validate()?;
    let mut out = Vec::with_capacity(config.per_class * SpatialRelation::ALL.len());
    for class in SpatialRelation::ALL {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(class.index() as u64 + 1);
        for k in 0..config.per_class {
            let (subject, object) = (0..config.max_attempts)
                .find_map(|_| {
                    let (s, o) = sample_layout(&mut rng, config, class);
                    let (s, o) = (to_box::<T>(s)?, to_box::<T>(o)?);
                    (label_of(&s, &o, config) == Some(class)).then_some((s, o))
                })
                .ok_or(SynthError::Exhausted { class, attempts: config.max_attempts })?;
            let (sn, on) = pick_names(&mut rng, config, class);
            let conf = |rng: &mut ChaCha8Rng| T::lit(rng.gen_range(0.8..=1.0));
            let sg = Grounding::new(subject, conf(&mut rng)).expect("confidence in range");
            let og = Grounding::new(object, conf(&mut rng)).expect("confidence in range");
            let inst = ClauseInstance::new(format!("synth-{}-{k:05}", class.name()), sn, class, on, sg, og)
                .expect("vocabulary names are non-empty");
            out.push(inst);
        }
    }
    Ok(out)
}
