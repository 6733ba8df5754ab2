//! Positive and negative noised copies of ground-truth node coordinates.
//!
//! With noise scale `λ`, positives are offset by at most `λ/2` and negatives
//! by more than `λ/2` but at most `λ`. Band membership is decided on the
//! max-norm `max(|Δx|, |Δy|)` by default.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::graph::{Extent, NodeId, RoadGraph};

pub const DEFAULT_LAMBDA: f64 = 10.0;
/// Normalized coordinates are clamped to `[ε, 1-ε]` before the inverse sigmoid.
pub const ANCHOR_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarity {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OffsetClass {
    Positive,
    Negative,
    OutOfBand,
}

/// How negative offsets are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BandNorm {
    /// Uniform over the square ring `λ/2 < max(|Δx|,|Δy|) ≤ λ`.
    #[default]
    Chebyshev,
    /// Each axis independently from `[-λ, -λ/2) ∪ (λ/2, λ]`.
    PerAxis,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisedSample {
    pub origin: NodeId,
    pub offset: (f64, f64),
    pub polarity: Polarity,
    /// Inverse-sigmoid of the normalized noised coordinate.
    pub anchor: (f64, f64),
}

impl NoisedSample {
    pub fn position(&self, gt: Point) -> Point {
        Point::new(gt.x + self.offset.0, gt.y + self.offset.1)
    }
}

pub fn inverse_sigmoid(x: f64) -> f64 {
    (x / (1.0 - x)).ln()
}

fn anchor_of(p: Point, extent: Extent) -> (f64, f64) {
    let norm = |v: f64, size: f64| (v / size).clamp(ANCHOR_EPS, 1.0 - ANCHOR_EPS);
    (
        inverse_sigmoid(norm(p.x, extent.width)),
        inverse_sigmoid(norm(p.y, extent.height)),
    )
}

fn symmetric(rng: &mut impl Rng, half: f64) -> f64 {
    if half > 0.0 {
        rng.random_range(-half..=half)
    } else {
        0.0
    }
}

/// Uniform draw from `(half, full]` with a random sign.
fn outer_band(rng: &mut impl Rng, half: f64, full: f64) -> f64 {
    let mag = loop {
        let m = rng.random_range(half..=full);
        if m > half {
            break m;
        }
    };
    if rng.random_bool(0.5) {
        mag
    } else {
        -mag
    }
}

pub fn sample_offset(
    polarity: Polarity,
    lambda: f64,
    norm: BandNorm,
    rng: &mut impl Rng,
) -> (f64, f64) {
    let half = lambda / 2.0;
    match (polarity, norm) {
        (Polarity::Positive, _) => (symmetric(rng, half), symmetric(rng, half)),
        (Polarity::Negative, BandNorm::Chebyshev) => loop {
            let dx = symmetric(rng, lambda);
            let dy = symmetric(rng, lambda);
            if dx.abs().max(dy.abs()) > half {
                break (dx, dy);
            }
        },
        (Polarity::Negative, BandNorm::PerAxis) => {
            (outer_band(rng, half, lambda), outer_band(rng, half, lambda))
        }
    }
}

pub fn sample_noise(
    origin: NodeId,
    gt: Point,
    polarity: Polarity,
    lambda: f64,
    extent: Extent,
    norm: BandNorm,
    rng: &mut impl Rng,
) -> NoisedSample {
    let offset = sample_offset(polarity, lambda, norm, rng);
    let moved = Point::new(gt.x + offset.0, gt.y + offset.1);
    NoisedSample {
        origin,
        offset,
        polarity,
        anchor: anchor_of(moved, extent),
    }
}

pub fn classify_offset(offset: (f64, f64), lambda: f64) -> OffsetClass {
    let m = offset.0.abs().max(offset.1.abs());
    if m <= lambda / 2.0 {
        OffsetClass::Positive
    } else if m <= lambda {
        OffsetClass::Negative
    } else {
        OffsetClass::OutOfBand
    }
}

/// One positive and one negative sample per ground-truth node.
pub fn noised_queries(
    gt: &RoadGraph,
    lambda: f64,
    norm: BandNorm,
    rng: &mut impl Rng,
) -> Vec<NoisedSample> {
    let extent = gt.extent();
    gt.nodes()
        .flat_map(|(id, p)| {
            [Polarity::Positive, Polarity::Negative]
                .map(|pol| sample_noise(id, p, pol, lambda, extent, norm, &mut *rng))
        })
        .collect()
}
