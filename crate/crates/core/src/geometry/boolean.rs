//! Exact intersection / union areas of simple polygons by horizontal slabs.
//!
//! Slab boundaries are every vertex ordinate of both operands plus every
//! ordinate where an edge of one crosses an edge of the other. Inside a slab
//! no two edges cross, so the cross-section of either polygon (and of their
//! intersection or union) is a set of intervals whose endpoints move
//! linearly with `y`. The covered length is therefore linear in `y` and the
//! midpoint rule integrates it exactly.

use super::{Point2, Polygon};

#[derive(Clone, Copy)]
enum Combine {
    Intersection,
    Union,
}

/// Area of `a ∩ b`.
pub fn intersection_area(a: &Polygon, b: &Polygon) -> f64 {
    if !a.bbox().overlaps(&b.bbox()) {
        return 0.0;
    }
    slab_area(a, b, Combine::Intersection)
}

/// Area of `a ∪ b`, computed directly from merged cross-sections.
pub fn union_area(a: &Polygon, b: &Polygon) -> f64 {
    if !a.bbox().overlaps(&b.bbox()) {
        return a.area() + b.area();
    }
    slab_area(a, b, Combine::Union)
}

/// Intersection over union, in `[0, 1]`.
pub fn polygon_iou(a: &Polygon, b: &Polygon) -> f64 {
    if !a.bbox().overlaps(&b.bbox()) {
        return 0.0;
    }
    let inter = slab_area(a, b, Combine::Intersection);
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

fn slab_area(a: &Polygon, b: &Polygon, op: Combine) -> f64 {
    let (ba, bb) = (a.bbox(), b.bbox());
    let (lo, hi) = match op {
        Combine::Intersection => (ba.min_y.max(bb.min_y), ba.max_y.min(bb.max_y)),
        Combine::Union => (ba.min_y.min(bb.min_y), ba.max_y.max(bb.max_y)),
    };
    if hi <= lo {
        return match op {
            Combine::Intersection => 0.0,
            Combine::Union => a.area() + b.area(),
        };
    }

    let mut ys: Vec<f64> =
        a.vertices().iter().chain(b.vertices()).map(|p| p.y()).filter(|&y| y >= lo && y <= hi).collect();
    ys.push(lo);
    ys.push(hi);
    push_crossing_ordinates(a, b, lo, hi, &mut ys);
    ys.sort_by(f64::total_cmp);
    ys.dedup();

    let mut xa = Vec::new();
    let mut xb = Vec::new();
    let mut total = 0.0;
    for w in ys.windows(2) {
        let (y0, y1) = (w[0], w[1]);
        let h = y1 - y0;
        if h <= 0.0 {
            continue;
        }
        let ym = 0.5 * (y0 + y1);
        crossings(a, ym, &mut xa);
        crossings(b, ym, &mut xb);
        let len = match op {
            Combine::Intersection => intersect_len(&xa, &xb),
            Combine::Union => union_len(&xa, &xb),
        };
        total += len * h;
    }
    total
}

/// Sorted x-coordinates where the horizontal line `y` crosses the boundary.
/// Consecutive pairs bound the inside (even-odd).
fn crossings(poly: &Polygon, y: f64, out: &mut Vec<f64>) {
    out.clear();
    for (p, q) in poly.edges() {
        if (p.y() < y) != (q.y() < y) {
            let t = (y - p.y()) / (q.y() - p.y());
            out.push(p.x() + t * (q.x() - p.x()));
        }
    }
    out.sort_by(f64::total_cmp);
}

fn push_crossing_ordinates(a: &Polygon, b: &Polygon, lo: f64, hi: f64, ys: &mut Vec<f64>) {
    let bb = b.bbox();
    let b_edges: Vec<(Point2, Point2)> =
        b.edges().filter(|(p, q)| p.y().max(q.y()) >= lo && p.y().min(q.y()) <= hi).collect();
    for (p, q) in a.edges() {
        let (px0, px1) = (p.x().min(q.x()), p.x().max(q.x()));
        let (py0, py1) = (p.y().min(q.y()), p.y().max(q.y()));
        if px1 < bb.min_x || px0 > bb.max_x || py1 < lo || py0 > hi {
            continue;
        }
        let r = q.sub(p);
        for &(c, d) in &b_edges {
            if c.x().max(d.x()) < px0 || c.x().min(d.x()) > px1 || c.y().max(d.y()) < py0 || c.y().min(d.y()) > py1 {
                continue;
            }
            let s = d.sub(c);
            let denom = r.cross(s);
            if denom == 0.0 {
                // Parallel edges never reorder inside a slab.
                continue;
            }
            let qp = c.sub(p);
            let t = qp.cross(s) / denom;
            let u = qp.cross(r) / denom;
            if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
                let y = p.y() + t * r.y();
                if y > lo && y < hi {
                    ys.push(y);
                }
            }
        }
    }
}

fn intersect_len(a: &[f64], b: &[f64]) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut len = 0.0;
    while i + 1 < a.len() && j + 1 < b.len() {
        let (a0, a1) = (a[i], a[i + 1]);
        let (b0, b1) = (b[j], b[j + 1]);
        let lo = a0.max(b0);
        let hi = a1.min(b1);
        if hi > lo {
            len += hi - lo;
        }
        if a1 < b1 {
            i += 2;
        } else {
            j += 2;
        }
    }
    len
}

fn union_len(a: &[f64], b: &[f64]) -> f64 {
    let mut iv: Vec<(f64, f64)> = a.chunks_exact(2).chain(b.chunks_exact(2)).map(|c| (c[0], c[1])).collect();
    iv.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut len = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for (s, e) in iv {
        cur = match cur {
            Some((cs, ce)) if s <= ce => Some((cs, ce.max(e))),
            Some((cs, ce)) => {
                len += ce - cs;
                Some((s, e))
            }
            None => Some((s, e)),
        };
    }
    if let Some((cs, ce)) = cur {
        len += ce - cs;
    }
    len
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq(x: f64, y: f64) -> Polygon {
        Polygon::rect(x, y, x + 1.0, y + 1.0).unwrap()
    }

    #[test]
    fn squares() {
        assert!((intersection_area(&sq(0.0, 0.0), &sq(0.0, 0.0)) - 1.0).abs() < 1e-12);
        assert!((intersection_area(&sq(0.0, 0.0), &sq(0.5, 0.0)) - 0.5).abs() < 1e-12);
        assert!((union_area(&sq(0.0, 0.0), &sq(0.0, 0.0)) - 1.0).abs() < 1e-12);
        assert!((union_area(&sq(0.0, 0.0), &sq(5.0, 0.0)) - 2.0).abs() < 1e-12);
        assert!((union_area(&sq(0.0, 0.0), &sq(0.5, 0.0)) - 1.5).abs() < 1e-12);
        assert_eq!(polygon_iou(&sq(0.0, 0.0), &sq(3.0, 3.0)), 0.0);
        assert!((polygon_iou(&sq(0.0, 0.0), &sq(0.0, 0.0)) - 1.0).abs() < 1e-12);
        assert!((polygon_iou(&sq(0.0, 0.0), &sq(0.5, 0.0)) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn nested_gives_smaller_area() {
        let outer = Polygon::rect(0.0, 0.0, 10.0, 10.0).unwrap();
        let inner = Polygon::from_coords(&[(2.0, 2.0), (5.0, 3.0), (4.0, 7.0)]).unwrap();
        assert!((intersection_area(&outer, &inner) - inner.area()).abs() < 1e-9);
        assert!((union_area(&outer, &inner) - 100.0).abs() < 1e-9);
    }

    #[test]
    fn crossing_star_and_square() {
        // Concave arrow crossing a rotated square; the two area routes agree.
        let arrow = Polygon::from_coords(&[(0.0, 0.0), (6.0, 3.0), (0.0, 6.0), (2.0, 3.0)]).unwrap();
        let diamond = Polygon::from_coords(&[(3.0, -1.0), (7.0, 3.0), (3.0, 7.0), (-1.0, 3.0)]).unwrap();
        let i = intersection_area(&arrow, &diamond);
        let u = union_area(&arrow, &diamond);
        assert!((arrow.area() + diamond.area() - i - u).abs() < 1e-9);
        assert!(i > 0.0 && i < arrow.area());
    }
}
