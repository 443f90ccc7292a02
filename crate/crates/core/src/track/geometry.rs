//! Planar points and the four geometric helpers used by the guide-point
//! generators: closest point on a polyline, offset toward a target, farther
//! of two candidates, and projection along a heading.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// Distances closer than this are treated as ties by [`closest_on`].
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the planar cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

/// Result of projecting a query point onto a polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub point: Point,
    /// Arc length along the polyline from its first vertex.
    pub arc_s: f64,
    /// Index of the segment the projection lies on.
    pub segment: usize,
    pub distance: f64,
}

/// Foot of the perpendicular from `q` onto segment `a`-`b`, clamped to the
/// segment. Returns the point and the segment parameter in `[0, 1]`.
pub fn project_on_segment(a: Point, b: Point, q: Point) -> (Point, f64) {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return (a, 0.0);
    }
    let t = ((q - a).dot(ab) / len2).clamp(0.0, 1.0);
    (a + ab * t, t)
}

/// Closest point on a polyline (`g` helper).
///
/// Exact point-to-segment projection over every segment; when two segments
/// are equally close the one with the lower arc length wins. A closed
/// polyline includes the segment from the last vertex back to the first.
///
/// # Panics
/// Panics if `points` is empty.
pub fn closest_on(points: &[Point], closed: bool, query: Point) -> Projection {
    assert!(!points.is_empty(), "closest_on needs a non-empty polyline");
    if points.len() == 1 {
        return Projection {
            point: points[0],
            arc_s: 0.0,
            segment: 0,
            distance: points[0].dist(query),
        };
    }
    let n_seg = if closed { points.len() } else { points.len() - 1 };
    let mut best = Projection {
        point: points[0],
        arc_s: 0.0,
        segment: 0,
        distance: f64::INFINITY,
    };
    let mut s0 = 0.0;
    for i in 0..n_seg {
        let a = points[i];
        let b = points[(i + 1) % points.len()];
        let seg_len = a.dist(b);
        let (p, t) = project_on_segment(a, b, query);
        let d = p.dist(query);
        if d < best.distance - TIE_TOLERANCE {
            best = Projection {
                point: p,
                arc_s: s0 + t * seg_len,
                segment: i,
                distance: d,
            };
        }
        s0 += seg_len;
    }
    best
}

/// Point `d` meters from `from` along the ray toward `toward` (`h` helper).
pub fn offset_toward(from: Point, toward: Point, d: f64) -> Result<Point> {
    let dir = toward - from;
    if dir.x == 0.0 && dir.y == 0.0 {
        return Err(Error::DegenerateDirection);
    }
    let theta = dir.y.atan2(dir.x);
    Ok(project_along(from, theta, d))
}

/// Returns `a` when it is strictly farther from `anchor` than `b`, otherwise
/// `b` (`j` helper).
pub fn farther_of(anchor: Point, a: Point, b: Point) -> Point {
    if anchor.dist(a) > anchor.dist(b) {
        a
    } else {
        b
    }
}

/// `from + d·(cos θ, sin θ)` (`k` helper).
pub fn project_along(from: Point, theta: f64, d: f64) -> Point {
    Point::new(from.x + d * theta.cos(), from.y + d * theta.sin())
}

/// Wraps an angle to `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}
