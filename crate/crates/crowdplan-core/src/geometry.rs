//! Exact 2-D primitives: distances, intersection, containment and ray
//! extension.
//!
//! Everything here is a pure function on immutable values, safe to call from
//! any number of threads. Coordinates are planar map units throughout; there
//! is no geodesic handling. Degenerate inputs (non-finite coordinates,
//! zero-length segments) are rejected at construction so the distance
//! routines never have to special-case them.

use crate::math::sqrt;
use alloc::vec::Vec;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("coordinate is not finite: ({x}, {y})")]
    NonFinitePoint { x: f64, y: f64 },
    #[error("degenerate segment: both endpoints are ({x}, {y})")]
    DegenerateSegment { x: f64, y: f64 },
    #[error("a convex region needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("duplicate consecutive vertices in region boundary")]
    DuplicateVertex,
    #[error("vertices do not describe a convex polygon")]
    NotConvex,
}

/// A location in map units. Finite by construction when built via [`Point::new`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Result<Self, GeometryError> {
        if x.is_finite() && y.is_finite() {
            Ok(Point { x, y })
        } else {
            Err(GeometryError::NonFinitePoint { x, y })
        }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        point_distance(self, other)
    }
}

/// Selects one endpoint of a [`Segment`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentEnd {
    A,
    B,
}

/// A line segment given by its two (distinct) endpoints.
///
/// The endpoint order is preserved as supplied so reports can echo the
/// original opinion, but every distance defined below is order-insensitive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    a: Point,
    b: Point,
}

impl Segment {
    pub fn new(a: Point, b: Point) -> Result<Self, GeometryError> {
        if a == b {
            return Err(GeometryError::DegenerateSegment { x: a.x, y: a.y });
        }
        Ok(Segment { a, b })
    }

    pub fn a(&self) -> Point {
        self.a
    }

    pub fn b(&self) -> Point {
        self.b
    }

    pub fn endpoint(&self, end: SegmentEnd) -> Point {
        match end {
            SegmentEnd::A => self.a,
            SegmentEnd::B => self.b,
        }
    }

    pub fn length(&self) -> f64 {
        point_distance(&self.a, &self.b)
    }
}

/// Euclidean distance between two points.
pub fn point_distance(p: &Point, q: &Point) -> f64 {
    let dx = p.x - q.x;
    let dy = p.y - q.y;
    sqrt(dx * dx + dy * dy)
}

/// Minimum Euclidean distance from `p` to any point of `s`.
///
/// Equals the distance to the orthogonal projection when the projection
/// falls within the segment, otherwise the distance to the nearer endpoint.
pub fn point_segment_distance(p: &Point, s: &Segment) -> f64 {
    let dx = s.b.x - s.a.x;
    let dy = s.b.y - s.a.y;
    let len2 = dx * dx + dy * dy;
    let t = ((p.x - s.a.x) * dx + (p.y - s.a.y) * dy) / len2;
    // Clamped cases use the endpoint coordinates directly so distances to
    // endpoints are exact (a point at an endpoint measures exactly zero).
    if t <= 0.0 {
        return point_distance(p, &s.a);
    }
    if t >= 1.0 {
        return point_distance(p, &s.b);
    }
    let cx = s.a.x + t * dx;
    let cy = s.a.y + t * dy;
    let ex = p.x - cx;
    let ey = p.y - cy;
    sqrt(ex * ex + ey * ey)
}

fn cross(o: &Point, a: &Point, b: &Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Given `p` collinear with `a`-`b`, is it within the closed segment?
fn collinear_on_segment(a: &Point, b: &Point, p: &Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Do the two closed segments share at least one point?
///
/// Standard orientation test plus collinear-overlap handling; touching at a
/// single endpoint counts as intersecting.
pub fn segments_intersect(s: &Segment, t: &Segment) -> bool {
    let d1 = cross(&t.a, &t.b, &s.a);
    let d2 = cross(&t.a, &t.b, &s.b);
    let d3 = cross(&s.a, &s.b, &t.a);
    let d4 = cross(&s.a, &s.b, &t.b);

    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && collinear_on_segment(&t.a, &t.b, &s.a))
        || (d2 == 0.0 && collinear_on_segment(&t.a, &t.b, &s.b))
        || (d3 == 0.0 && collinear_on_segment(&s.a, &s.b, &t.a))
        || (d4 == 0.0 && collinear_on_segment(&s.a, &s.b, &t.b))
}

/// Symmetric Hausdorff distance between two segments.
///
/// Point-to-segment distance is convex along a segment, so each directed
/// supremum is attained at an endpoint; this makes the closed form over the
/// four endpoints exact. Zero iff the two segments cover the same point set.
pub fn hausdorff_distance(s: &Segment, t: &Segment) -> f64 {
    let d1 = point_segment_distance(&s.a, t);
    let d2 = point_segment_distance(&s.b, t);
    let d3 = point_segment_distance(&t.a, s);
    let d4 = point_segment_distance(&t.b, s);
    d1.max(d2).max(d3).max(d4)
}

/// The grouping distance used when clustering segments: zero for
/// intersecting segments, otherwise the minimum over the four
/// endpoint-to-endpoint Euclidean distances.
///
/// Not a metric (no triangle inequality), but non-negative and symmetric.
pub fn clustering_distance(s: &Segment, t: &Segment) -> f64 {
    if segments_intersect(s, t) {
        return 0.0;
    }
    let d1 = point_distance(&s.a, &t.a);
    let d2 = point_distance(&s.a, &t.b);
    let d3 = point_distance(&s.b, &t.a);
    let d4 = point_distance(&s.b, &t.b);
    d1.min(d2).min(d3).min(d4)
}

/// A convex planning region stored as a counter-clockwise vertex list.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexRegion {
    vertices: Vec<Point>,
}

impl ConvexRegion {
    /// Builds a region from a vertex loop. Clockwise input is reversed to the
    /// canonical counter-clockwise orientation; non-convex or degenerate
    /// loops are rejected.
    pub fn new(vertices: Vec<Point>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        for p in &vertices {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(GeometryError::NonFinitePoint { x: p.x, y: p.y });
            }
        }
        let n = vertices.len();
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(GeometryError::DuplicateVertex);
            }
        }
        // Shoelace: positive area means counter-clockwise.
        let mut area2 = 0.0;
        for i in 0..n {
            let p = &vertices[i];
            let q = &vertices[(i + 1) % n];
            area2 += p.x * q.y - q.x * p.y;
        }
        if area2 == 0.0 {
            return Err(GeometryError::NotConvex);
        }
        let mut vertices = vertices;
        if area2 < 0.0 {
            vertices.reverse();
        }
        // Every turn must be left (or straight) once counter-clockwise.
        for i in 0..n {
            let o = &vertices[i];
            let a = &vertices[(i + 1) % n];
            let b = &vertices[(i + 2) % n];
            if cross(o, a, b) < 0.0 {
                return Err(GeometryError::NotConvex);
            }
        }
        Ok(ConvexRegion { vertices })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Is `p` inside or on the boundary? Half-plane test per edge; `epsilon`
    /// is the on-boundary slack in map units.
    pub fn contains_point(&self, p: &Point, epsilon: f64) -> bool {
        let n = self.vertices.len();
        for i in 0..n {
            let a = &self.vertices[i];
            let b = &self.vertices[(i + 1) % n];
            let edge_len = point_distance(a, b);
            // Signed distance of p from the edge line; interior is left of
            // every edge in counter-clockwise order.
            if cross(a, b, p) / edge_len < -epsilon {
                return false;
            }
        }
        true
    }

    /// Both endpoints inside suffices by convexity.
    pub fn contains_segment(&self, s: &Segment, epsilon: f64) -> bool {
        self.contains_point(&s.a, epsilon) && self.contains_point(&s.b, epsilon)
    }

    /// Area centroid of the polygon.
    pub fn centroid(&self) -> Point {
        let n = self.vertices.len();
        let mut area2 = 0.0;
        let mut cx = 0.0;
        let mut cy = 0.0;
        for i in 0..n {
            let p = &self.vertices[i];
            let q = &self.vertices[(i + 1) % n];
            let w = p.x * q.y - q.x * p.y;
            area2 += w;
            cx += (p.x + q.x) * w;
            cy += (p.y + q.y) * w;
        }
        Point {
            x: cx / (3.0 * area2),
            y: cy / (3.0 * area2),
        }
    }

    /// Axis-aligned bounding box as (min corner, max corner).
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut min = self.vertices[0];
        let mut max = self.vertices[0];
        for p in &self.vertices {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        (min, max)
    }
}

/// Extends `s` beyond the `through` endpoint, along its own direction, until
/// the first intersection of that ray with any background segment; the hit
/// point replaces the `through` endpoint. Returns `None` when the ray never
/// reaches the background (the extension direction cannot satisfy the
/// connectivity constraint).
///
/// Callers are expected to skip segments that already touch the background.
pub fn extend_to_nearest(
    s: &Segment,
    through: SegmentEnd,
    background: &[Segment],
    epsilon: f64,
) -> Option<Segment> {
    let (anchor, tip) = match through {
        SegmentEnd::A => (s.b, s.a),
        SegmentEnd::B => (s.a, s.b),
    };
    // Parametrize x(t) = anchor + t * dir with t = 1 at the tip; extension
    // hits live at t >= 1.
    let dir = (tip.x - anchor.x, tip.y - anchor.y);
    let dir_len2 = dir.0 * dir.0 + dir.1 * dir.1;

    let mut best_t: Option<f64> = None;
    for b in background {
        let e = (b.b.x - b.a.x, b.b.y - b.a.y);
        let w = (b.a.x - anchor.x, b.a.y - anchor.y);
        let denom = dir.0 * e.1 - dir.1 * e.0;
        let t = if denom == 0.0 {
            // Parallel; only a collinear background segment can be hit.
            if w.0 * dir.1 - w.1 * dir.0 != 0.0 {
                continue;
            }
            let ta = (w.0 * dir.0 + w.1 * dir.1) / dir_len2;
            let v = (b.b.x - anchor.x, b.b.y - anchor.y);
            let tb = (v.0 * dir.0 + v.1 * dir.1) / dir_len2;
            let hi = ta.max(tb);
            if hi < 1.0 {
                continue;
            }
            ta.min(tb).max(1.0)
        } else {
            let t = (w.0 * e.1 - w.1 * e.0) / denom;
            let u = (w.0 * dir.1 - w.1 * dir.0) / denom;
            let e_len = sqrt(e.0 * e.0 + e.1 * e.1);
            let slack = epsilon / e_len;
            if t < 1.0 || u < -slack || u > 1.0 + slack {
                continue;
            }
            t
        };
        if best_t.is_none_or(|cur| t < cur) {
            best_t = Some(t);
        }
    }

    let t = best_t?;
    let hit = Point {
        x: anchor.x + t * dir.0,
        y: anchor.y + t * dir.1,
    };
    let extended = match through {
        SegmentEnd::A => Segment::new(hit, s.b),
        SegmentEnd::B => Segment::new(s.a, hit),
    };
    extended.ok()
}
