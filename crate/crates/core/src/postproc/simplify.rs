//! Douglas-Peucker reduction of traced staircase contours.
//!
//! Crack contours of slanted or curved masks are staircases whose perimeter
//! overstates the true boundary by up to a factor of sqrt(2), and whose many
//! reflex corners turn into spikes under miter expansion. Reducing them
//! before extension keeps both the area/perimeter ratio and the expanded
//! outline faithful.

use crate::geometry::{point_segment_distance, Point2, Polygon};

/// Simplified copy of `poly`, or `None` when the result would not be a valid
/// polygon (too few vertices or self-intersecting).
pub(crate) fn simplify(poly: &Polygon, tolerance: f64) -> Option<Polygon> {
    let v = poly.vertices();
    let n = v.len();
    if tolerance <= 0.0 || n <= 4 {
        return None;
    }
    // Split the ring at vertex 0 and the vertex farthest from it.
    let far = (1..n).max_by(|&a, &b| v[0].distance(&v[a]).total_cmp(&v[0].distance(&v[b])))?;
    let mut keep = vec![false; n];
    keep[0] = true;
    keep[far] = true;
    let ring: Vec<Point2> = v.iter().copied().chain(std::iter::once(v[0])).collect();
    mark(&ring, 0, far, tolerance, &mut keep);
    let mut keep_tail = vec![false; n + 1];
    mark(&ring, far, n, tolerance, &mut keep_tail);
    for (k, &b) in keep_tail.iter().enumerate().take(n) {
        keep[k] |= b;
    }
    let pts: Vec<Point2> = v.iter().zip(&keep).filter(|(_, &k)| k).map(|(p, _)| *p).collect();
    if pts.len() < 3 || pts.len() == n {
        return None;
    }
    Polygon::new(pts).ok()
}

fn mark(pts: &[Point2], lo: usize, hi: usize, tol: f64, keep: &mut [bool]) {
    let mut stack = vec![(lo, hi)];
    while let Some((a, b)) = stack.pop() {
        if b <= a + 1 {
            continue;
        }
        let (mut best, mut at) = (0.0, a);
        for k in a + 1..b {
            let d = point_segment_distance(pts[k], pts[a], pts[b]);
            if d > best {
                best = d;
                at = k;
            }
        }
        if best > tol {
            keep[at] = true;
            stack.push((a, at));
            stack.push((at, b));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn staircase_becomes_diagonal() {
        // Right triangle drawn as a staircase with unit steps.
        let mut c = vec![(0.0, 0.0)];
        for k in 0..8 {
            c.push((k as f64 + 1.0, k as f64));
            c.push((k as f64 + 1.0, k as f64 + 1.0));
        }
        c.push((0.0, 8.0));
        let p = Polygon::from_coords(&c).unwrap();
        let s = simplify(&p, 1.0).unwrap();
        assert!(s.len() < p.len());
        assert!(s.perimeter() < p.perimeter());
        assert!((s.area() - p.area()).abs() < 0.15 * p.area());
    }

    #[test]
    fn small_rings_untouched() {
        let p = Polygon::rect(0.0, 0.0, 3.0, 3.0).unwrap();
        assert!(simplify(&p, 1.0).is_none());
    }
}
