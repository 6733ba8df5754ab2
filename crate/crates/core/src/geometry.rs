//! Planar primitives in pixel units.
//!
//! Pixel `(col, row)` has its center at the integer coordinate `(col, row)`;
//! the image y-axis points down.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn dist_sq(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn lerp(self, other: Point, t: f64) -> Point {
        Point::new(
            self.x + t * (other.x - self.x),
            self.y + t * (other.y - self.y),
        )
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point::new(x, y)
    }
}

/// Closest point on segment `a`-`b` to `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentProjection {
    pub point: Point,
    /// Parametric position along `a -> b`, clamped to `[0, 1]`.
    pub t: f64,
    pub distance: f64,
}

pub fn project_onto_segment(p: Point, a: Point, b: Point) -> SegmentProjection {
    let vx = b.x - a.x;
    let vy = b.y - a.y;
    let len_sq = vx * vx + vy * vy;
    let t = if len_sq == 0.0 {
        0.0
    } else {
        (((p.x - a.x) * vx + (p.y - a.y) * vy) / len_sq).clamp(0.0, 1.0)
    };
    // Exact endpoints at the clamp boundaries keep vertex projections bit-exact.
    let point = if t == 0.0 {
        a
    } else if t == 1.0 {
        b
    } else {
        a.lerp(b, t)
    };
    SegmentProjection {
        point,
        t,
        distance: p.dist(point),
    }
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    project_onto_segment(p, a, b).distance
}

/// Counterclockwise angle of `to - from` in degrees, in `[0, 360)`, with the
/// image y-axis flipped so that "up" on screen is 90 degrees.
pub fn ccw_angle_deg(from: Point, to: Point) -> f64 {
    let deg = (-(to.y - from.y)).atan2(to.x - from.x).to_degrees();
    let wrapped = deg.rem_euclid(360.0);
    if wrapped >= 360.0 {
        0.0
    } else {
        wrapped
    }
}

/// Smallest difference between two undirected line orientations, in `[0, 90]`.
pub fn orientation_diff_deg(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(180.0);
    d.min(180.0 - d)
}
