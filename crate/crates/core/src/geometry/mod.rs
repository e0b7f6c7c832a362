//! Planar geometry: points, obstacle polygons, robot configurations, and the
//! collision / visibility predicates every cost and roadmap query uses.
//!
//! Obstacles are closed sets. A segment that touches an obstacle boundary is in
//! collision, but a sight line that only grazes a boundary is not blocked.

mod dubins;
mod edge;

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dubins::{dubins_shortest_path, dubins_word_path, DubinsWord};
pub use edge::{default_step, segment_exposure_length, EdgeGeometry, EdgeShape};

/// Absolute tolerance used by every geometric predicate, in meters.
pub const GEOM_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("polygon needs at least 3 distinct vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon has a non-finite coordinate")]
    NonFinite,
    #[error("polygon is degenerate (zero area)")]
    ZeroArea,
    #[error("polygon edges {0} and {1} intersect")]
    SelfIntersecting(usize, usize),
    #[error("feature set is empty")]
    NoFeatures,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }

    fn lerp(self, o: Point2, t: f64) -> Point2 {
        Point2::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

fn cross(a: Point2, b: Point2) -> f64 {
    a.x * b.y - a.y * b.x
}

fn dot(a: Point2, b: Point2) -> f64 {
    a.x * b.x + a.y * b.y
}

/// Twice the signed area of triangle `abc`; positive when counter-clockwise.
fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    cross(b.sub(a), c.sub(a))
}

/// Euclidean distance from `p` to the closed segment `a`-`b`.
pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b.sub(a);
    let len2 = dot(ab, ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = (dot(p.sub(a), ab) / len2).clamp(0.0, 1.0);
    p.distance(a.lerp(b, t))
}

/// Closed segment intersection test with tolerance [`GEOM_EPS`].
pub fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    point_segment_distance(a, c, d) <= GEOM_EPS
        || point_segment_distance(b, c, d) <= GEOM_EPS
        || point_segment_distance(c, a, b) <= GEOM_EPS
        || point_segment_distance(d, a, b) <= GEOM_EPS
}

/// A simple polygon stored counter-clockwise, with a cached bounding box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point2>", into = "Vec<Point2>")]
pub struct Polygon {
    vertices: Vec<Point2>,
    min: Point2,
    max: Point2,
}

impl TryFrom<Vec<Point2>> for Polygon {
    type Error = GeometryError;

    fn try_from(v: Vec<Point2>) -> Result<Self, Self::Error> {
        Polygon::new(v)
    }
}

impl From<Polygon> for Vec<Point2> {
    fn from(p: Polygon) -> Self {
        p.vertices
    }
}

impl Polygon {
    /// Validates and normalizes a vertex ring. A repeated closing vertex is
    /// dropped and clockwise input is reversed.
    pub fn new(mut vertices: Vec<Point2>) -> Result<Self, GeometryError> {
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        vertices.dedup();
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        let area = signed_area(&vertices);
        if area.abs() <= GEOM_EPS * GEOM_EPS {
            return Err(GeometryError::ZeroArea);
        }
        if area < 0.0 {
            vertices.reverse();
        }
        let n = vertices.len();
        for i in 0..n {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            for j in (i + 1)..n {
                let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    // Adjacent edges share a vertex; they may not fold back.
                    let shared = if j == i + 1 { b } else { a };
                    let (p, q) = if j == i + 1 { (a, d) } else { (b, c) };
                    if orient(p, shared, q).abs() <= GEOM_EPS * p.distance(q).max(1.0)
                        && dot(p.sub(shared), q.sub(shared)) > 0.0
                    {
                        return Err(GeometryError::SelfIntersecting(i, j));
                    }
                } else if segments_intersect(a, b, c, d) {
                    return Err(GeometryError::SelfIntersecting(i, j));
                }
            }
        }
        let mut min = vertices[0];
        let mut max = vertices[0];
        for p in &vertices {
            min = Point2::new(min.x.min(p.x), min.y.min(p.y));
            max = Point2::new(max.x.max(p.x), max.y.max(p.y));
        }
        Ok(Self { vertices, min, max })
    }

    /// Axis-aligned rectangle, counter-clockwise from the lower-left corner.
    pub fn rectangle(min: Point2, max: Point2) -> Result<Self, GeometryError> {
        Polygon::new(vec![
            min,
            Point2::new(max.x, min.y),
            max,
            Point2::new(min.x, max.y),
        ])
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices) / 2.0
    }

    fn bbox_disjoint(&self, lo: Point2, hi: Point2) -> bool {
        hi.x < self.min.x - GEOM_EPS
            || lo.x > self.max.x + GEOM_EPS
            || hi.y < self.min.y - GEOM_EPS
            || lo.y > self.max.y + GEOM_EPS
    }

    pub fn boundary_distance(&self, p: Point2) -> f64 {
        self.edges()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Even-odd crossing test; boundary points get an arbitrary answer.
    fn crossing_inside(&self, p: Point2) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Membership in the closed polygon (boundary included within [`GEOM_EPS`]).
    pub fn contains(&self, p: Point2) -> bool {
        if self.bbox_disjoint(p, p) {
            return false;
        }
        self.boundary_distance(p) <= GEOM_EPS || self.crossing_inside(p)
    }

    /// Membership in the open interior: inside and farther than [`GEOM_EPS`]
    /// from the boundary.
    pub fn contains_strictly(&self, p: Point2) -> bool {
        if self.bbox_disjoint(p, p) {
            return false;
        }
        self.crossing_inside(p) && self.boundary_distance(p) > GEOM_EPS
    }
}

fn signed_area(v: &[Point2]) -> f64 {
    let n = v.len();
    (0..n).map(|i| cross(v[i], v[(i + 1) % n])).sum()
}

/// A robot pose. The heading is only present for the Dubins model and is kept
/// in `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub position: Point2,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heading: Option<f64>,
}

impl Configuration {
    pub fn planar(x: f64, y: f64) -> Self {
        Self {
            position: Point2::new(x, y),
            heading: None,
        }
    }

    pub fn oriented(x: f64, y: f64, heading: f64) -> Self {
        Self {
            position: Point2::new(x, y),
            heading: Some(normalize_angle(heading)),
        }
    }
}

/// Maps any finite angle into `[0, 2π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// True iff the closed segment `a`-`b` meets any obstacle (interior or boundary).
pub fn segment_collides(a: Point2, b: Point2, obstacles: &[Polygon]) -> bool {
    let lo = Point2::new(a.x.min(b.x), a.y.min(b.y));
    let hi = Point2::new(a.x.max(b.x), a.y.max(b.y));
    obstacles.iter().any(|poly| {
        if poly.bbox_disjoint(lo, hi) {
            return false;
        }
        poly.contains(a)
            || poly.contains(b)
            || poly.edges().any(|(c, d)| segments_intersect(a, b, c, d))
    })
}

/// True iff the sight line between `p` and `threat` never passes through an
/// obstacle interior. Touching or running along a boundary does not block.
pub fn line_of_sight(p: Point2, threat: Point2, obstacles: &[Polygon]) -> bool {
    let lo = Point2::new(p.x.min(threat.x), p.y.min(threat.y));
    let hi = Point2::new(p.x.max(threat.x), p.y.max(threat.y));
    let r = threat.sub(p);
    let len2 = dot(r, r);
    if len2 == 0.0 {
        return !obstacles.iter().any(|poly| poly.contains_strictly(p));
    }
    let mut params: Vec<f64> = Vec::new();
    for poly in obstacles {
        if poly.bbox_disjoint(lo, hi) {
            continue;
        }
        params.clear();
        params.extend([0.0, 1.0]);
        for (c, d) in poly.edges() {
            let s = d.sub(c);
            let denom = cross(r, s);
            if denom.abs() > f64::EPSILON * len2.sqrt() * dot(s, s).sqrt() {
                let u = cross(c.sub(p), s) / denom;
                let v = cross(c.sub(p), r) / denom;
                if (0.0..=1.0).contains(&u) && (-1e-12..=1.0 + 1e-12).contains(&v) {
                    params.push(u);
                }
            }
            // Vertices on (or near) the sight line split it too; this covers
            // collinear overlaps and vertex grazes.
            if point_segment_distance(c, p, threat) <= GEOM_EPS {
                params.push((dot(c.sub(p), r) / len2).clamp(0.0, 1.0));
            }
        }
        params.sort_by(f64::total_cmp);
        for w in params.windows(2) {
            if w[1] - w[0] <= 1e-12 {
                continue;
            }
            let mid = p.lerp(threat, 0.5 * (w[0] + w[1]));
            if poly.contains_strictly(mid) {
                return false;
            }
        }
    }
    true
}

/// A sensing feature: either an isolated landmark or a polygonal region.
#[derive(Clone, Debug, PartialEq)]
pub enum Feature {
    Point(Point2),
    Polygon(Polygon),
}

impl Feature {
    pub fn distance(&self, p: Point2) -> f64 {
        match self {
            Feature::Point(q) => p.distance(*q),
            Feature::Polygon(poly) => {
                if poly.contains(p) {
                    0.0
                } else {
                    poly.boundary_distance(p)
                }
            }
        }
    }
}

/// Distance from `p` to the nearest feature; zero inside a feature polygon.
pub fn min_feature_distance(p: Point2, features: &[Feature]) -> Result<f64, GeometryError> {
    if features.is_empty() {
        return Err(GeometryError::NoFeatures);
    }
    Ok(features
        .iter()
        .map(|f| f.distance(p))
        .fold(f64::INFINITY, f64::min))
}
