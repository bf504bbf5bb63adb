//! Exact 2-D polygon primitives in pixel units.
//!
//! Polygons are closed, simple, and stored with positive signed (shoelace)
//! area. In image coordinates (y pointing down) that is clockwise on screen;
//! all formulas only rely on the sign convention.

mod boolean;
mod offset;

pub use boolean::{intersection_area, polygon_iou, union_area};
pub use offset::{clip_to_rect, offset_polygon, JoinPolicy};

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Tolerance for vertex coincidence and orientation tests, in pixels.
pub const EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    x: f64,
    y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::NonFinite { x, y });
        }
        Ok(Self { x, y })
    }

    /// Caller guarantees finiteness; used on values derived from valid points.
    pub(crate) const fn raw(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.x
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.y
    }

    #[inline]
    pub(crate) fn sub(self, o: Point2) -> Point2 {
        Point2::raw(self.x - o.x, self.y - o.y)
    }

    #[inline]
    pub(crate) fn add(self, o: Point2) -> Point2 {
        Point2::raw(self.x + o.x, self.y + o.y)
    }

    #[inline]
    pub(crate) fn scale(self, k: f64) -> Point2 {
        Point2::raw(self.x * k, self.y * k)
    }

    #[inline]
    pub(crate) fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub(crate) fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    #[inline]
    pub fn distance(&self, o: &Point2) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }
}

/// Axis-aligned bounding box `[min_x, max_x] x [min_y, max_y]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BBox {
    pub fn overlaps(&self, o: &BBox) -> bool {
        self.min_x <= o.max_x && o.min_x <= self.max_x && self.min_y <= o.max_y && o.min_y <= self.max_y
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }
}

/// A closed simple polygon with positive signed area.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Polygon {
    vertices: Vec<Point2>,
}

impl Polygon {
    /// Validates and normalizes a vertex ring (implicitly closed).
    ///
    /// Rejects rings with fewer than three vertices, coincident consecutive
    /// vertices, self-intersections (reporting the first offending segment
    /// pair) and zero area. Clockwise input is reversed in place, keeping the
    /// first vertex first.
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::TooFewVertices(n));
        }
        for p in &vertices {
            Point2::new(p.x, p.y)?;
        }
        for i in 0..n {
            let j = (i + 1) % n;
            if vertices[i].distance(&vertices[j]) <= EPS {
                return Err(Error::CoincidentVertices(i, j));
            }
        }
        if let Some((first, second)) = find_self_intersection(&vertices) {
            return Err(Error::SelfIntersection { first, second });
        }
        let area = signed_area(&vertices);
        if area.abs() <= EPS * EPS {
            return Err(Error::ZeroArea);
        }
        let mut vertices = vertices;
        if area < 0.0 {
            vertices[1..].reverse();
        }
        Ok(Self { vertices })
    }

    pub fn from_coords(coords: &[(f64, f64)]) -> Result<Self> {
        let pts = coords.iter().map(|&(x, y)| Point2::new(x, y)).collect::<Result<Vec<_>>>()?;
        Self::new(pts)
    }

    /// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        Self::from_coords(&[(x0, y0), (x1, y0), (x1, y1), (x0, y1)])
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.distance(&b)).sum()
    }

    pub fn bbox(&self) -> BBox {
        let mut b =
            BBox { min_x: f64::INFINITY, min_y: f64::INFINITY, max_x: f64::NEG_INFINITY, max_y: f64::NEG_INFINITY };
        for p in &self.vertices {
            b.min_x = b.min_x.min(p.x);
            b.min_y = b.min_y.min(p.y);
            b.max_x = b.max_x.max(p.x);
            b.max_y = b.max_y.max(p.y);
        }
        b
    }

    /// Even-odd containment; points exactly on the boundary may go either way.
    pub fn contains(&self, p: Point2) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Euclidean distance from `p` to the polygon boundary.
    pub fn boundary_distance(&self, p: Point2) -> f64 {
        self.edges().map(|(a, b)| point_segment_distance(p, a, b)).fold(f64::INFINITY, f64::min)
    }

    /// Minimum distance between two polygons; zero when they overlap.
    pub fn distance_to(&self, other: &Polygon) -> f64 {
        if self.contains(other.vertices[0]) || other.contains(self.vertices[0]) {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for (a, b) in self.edges() {
            for (c, d) in other.edges() {
                if segments_intersect(a, b, c, d) {
                    return 0.0;
                }
                best = best
                    .min(point_segment_distance(a, c, d))
                    .min(point_segment_distance(b, c, d))
                    .min(point_segment_distance(c, a, b))
                    .min(point_segment_distance(d, a, b));
            }
        }
        best
    }

    /// Applies an affine map `p -> R(theta) * s * p + t` to every vertex.
    /// Positive scale and proper rotations keep the polygon valid.
    pub fn transformed(&self, theta: f64, scale: f64, tx: f64, ty: f64) -> Result<Polygon> {
        let (s, c) = theta.sin_cos();
        let pts = self
            .vertices
            .iter()
            .map(|p| Point2::new(scale * (c * p.x - s * p.y) + tx, scale * (s * p.x + c * p.y) + ty))
            .collect::<Result<Vec<_>>>()?;
        Polygon::new(pts)
    }

    pub fn translated(&self, tx: f64, ty: f64) -> Result<Polygon> {
        self.transformed(0.0, 1.0, tx, ty)
    }
}

/// Shrinking coefficient for shrink-mask generation, `0 < delta_s < 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShrinkParams {
    delta_s: f64,
}

impl ShrinkParams {
    pub fn new(delta_s: f64) -> Result<Self> {
        if !(delta_s > 0.0 && delta_s < 1.0) {
            return Err(Error::InvalidParameter(format!("shrink coefficient must lie in (0, 1), got {delta_s}")));
        }
        Ok(Self { delta_s })
    }

    pub fn delta_s(&self) -> f64 {
        self.delta_s
    }
}

impl Default for ShrinkParams {
    fn default() -> Self {
        Self { delta_s: 0.4 }
    }
}

/// Extending coefficient of the fixed (area / perimeter) expansion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedExtendParams {
    delta_t: f64,
}

impl FixedExtendParams {
    /// Zero is accepted here (it simply yields no expansion); post-processing
    /// in fixed mode demands a strictly positive coefficient.
    pub fn new(delta_t: f64) -> Result<Self> {
        if !(delta_t.is_finite() && delta_t >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "extending coefficient must be finite and non-negative, got {delta_t}"
            )));
        }
        Ok(Self { delta_t })
    }

    pub fn delta_t(&self) -> f64 {
        self.delta_t
    }
}

pub fn area(poly: &Polygon) -> f64 {
    poly.area()
}

pub fn perimeter(poly: &Polygon) -> f64 {
    poly.perimeter()
}

/// Inward distance that turns a text contour into its shrink-mask contour:
/// `area / perimeter * (1 - delta_s^2)`.
pub fn shrink_offset(poly: &Polygon, params: ShrinkParams) -> f64 {
    let d = params.delta_s;
    poly.area() / poly.perimeter() * (1.0 - d * d)
}

/// Outward distance used by the fixed extension strategy:
/// `area / perimeter * delta_t`, measured on the predicted shrink contour.
pub fn fixed_offset(poly: &Polygon, params: FixedExtendParams) -> f64 {
    poly.area() / poly.perimeter() * params.delta_t
}

pub(crate) fn signed_area(pts: &[Point2]) -> f64 {
    let n = pts.len();
    if n < 3 {
        return 0.0;
    }
    // Relative to the first vertex to limit cancellation on large coordinates.
    let o = pts[0];
    let mut acc = 0.0;
    for i in 1..n - 1 {
        acc += pts[i].sub(o).cross(pts[i + 1].sub(o));
    }
    0.5 * acc
}

/// Sign of the turn `a -> b -> c` with a distance tolerance of [`EPS`].
#[inline]
pub(crate) fn orient(a: Point2, b: Point2, c: Point2) -> i8 {
    let ab = b.sub(a);
    let v = ab.cross(c.sub(a));
    let len = ab.dot(ab).sqrt();
    if v.abs() <= EPS * len.max(1.0) {
        0
    } else if v > 0.0 {
        1
    } else {
        -1
    }
}

/// Whether `p` (assumed collinear with `a b`) lies on the closed segment.
#[inline]
fn on_segment(a: Point2, b: Point2, p: Point2) -> bool {
    p.x >= a.x.min(b.x) - EPS && p.x <= a.x.max(b.x) + EPS && p.y >= a.y.min(b.y) - EPS && p.y <= a.y.max(b.y) + EPS
}

/// Closed-segment intersection test (touching counts).
pub(crate) fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if o1 * o2 < 0 && o3 * o4 < 0 {
        return true;
    }
    (o1 == 0 && on_segment(a, b, c))
        || (o2 == 0 && on_segment(a, b, d))
        || (o3 == 0 && on_segment(c, d, a))
        || (o4 == 0 && on_segment(c, d, b))
}

pub(crate) fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(&a);
    }
    let t = (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(&a.add(ab.scale(t)))
}

/// Returns the first pair of offending edges, if any. Edges are pruned with
/// an x-sorted sweep so staircase contours with many vertices stay cheap.
fn find_self_intersection(pts: &[Point2]) -> Option<(usize, usize)> {
    let n = pts.len();
    let edge = |i: usize| (pts[i], pts[(i + 1) % n]);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = edge(i);
        let (c, d) = edge(j);
        a.x.min(b.x).total_cmp(&c.x.min(d.x)).then(i.cmp(&j))
    });

    let mut found: Option<(usize, usize)> = None;
    let mut active: Vec<usize> = Vec::new();
    for &i in &order {
        let (a, b) = edge(i);
        let min_x = a.x.min(b.x);
        active.retain(|&j| {
            let (c, d) = edge(j);
            c.x.max(d.x) >= min_x - EPS
        });
        let (ymin, ymax) = (a.y.min(b.y), a.y.max(b.y));
        for &j in &active {
            let (c, d) = edge(j);
            if c.y.max(d.y) < ymin - EPS || c.y.min(d.y) > ymax + EPS {
                continue;
            }
            let (lo, hi) = if i < j { (i, j) } else { (j, i) };
            let bad = if hi == lo + 1 {
                adjacent_overlap(edge(lo), edge(hi))
            } else if lo == 0 && hi == n - 1 {
                adjacent_overlap(edge(hi), edge(lo))
            } else {
                segments_intersect(a, b, c, d)
            };
            if bad && found.is_none_or(|f| (lo, hi) < f) {
                found = Some((lo, hi));
            }
        }
        active.push(i);
    }
    found
}

/// Consecutive edges `p1 -> p2` and `p2 -> q2` overlap when one folds back
/// onto the other.
fn adjacent_overlap((p1, p2): (Point2, Point2), (_q1, q2): (Point2, Point2)) -> bool {
    orient(p1, p2, q2) == 0 && (on_segment(p1, p2, q2) || on_segment(p2, q2, p1)) && {
        // Collinear and continuing forward is fine; only a reversal overlaps.
        p2.sub(p1).dot(q2.sub(p2)) < 0.0
    }
}
