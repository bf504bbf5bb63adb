//! Polygon offsetting and rectangle clipping.
//!
//! Offsetting follows the Clipper recipe: every edge is displaced along its
//! outward normal, joins are closed per [`JoinPolicy`], and the resulting raw
//! ring (which loops back on itself around collapsed corners) is resolved
//! with a positive-winding union. The union and the clipping are delegated
//! to `i_overlay`.

use i_overlay::core::fill_rule::FillRule;
use i_overlay::core::overlay_rule::OverlayRule;
use i_overlay::float::simplify::SimplifyShape;
use i_overlay::float::single::SingleFloatOverlay;

use super::{orient, Point2, Polygon, EPS};
use crate::{Error, Result};

/// Corner treatment for convex joins.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JoinPolicy {
    /// Maximum distance of a miter tip from its vertex, in multiples of the
    /// offset distance. Sharper corners are beveled.
    pub miter_limit: f64,
}

impl Default for JoinPolicy {
    fn default() -> Self {
        Self { miter_limit: 2.0 }
    }
}

/// Offsets `poly` by `delta` pixels: negative shrinks, positive expands.
///
/// Shrinking may split the polygon or remove it entirely; the latter is
/// reported as [`Error::EmptyResult`]. Expansion keeps only outer
/// boundaries, so any pocket that closes up is filled.
pub fn offset_polygon(poly: &Polygon, delta: f64) -> Result<Vec<Polygon>> {
    offset_polygon_with(poly, delta, JoinPolicy::default())
}

pub fn offset_polygon_with(poly: &Polygon, delta: f64, join: JoinPolicy) -> Result<Vec<Polygon>> {
    if !delta.is_finite() {
        return Err(Error::InvalidParameter(format!("offset must be finite, got {delta}")));
    }
    if delta == 0.0 {
        return Ok(vec![poly.clone()]);
    }
    let raw = raw_offset_ring(poly.vertices(), delta, join);
    let shapes = raw.simplify_shape(FillRule::Positive);
    let mut out: Vec<Polygon> = shapes
        .into_iter()
        .filter_map(|shape| shape.into_iter().next())
        .filter_map(|contour| polygon_from_contour(&contour))
        .collect();
    if out.is_empty() {
        return Err(Error::EmptyResult);
    }
    out.sort_by(|a, b| b.area().total_cmp(&a.area()));
    Ok(out)
}

/// Intersects `poly` with the rectangle `[0, width] x [0, height]`.
/// Returns the pieces ordered by decreasing area (empty when disjoint).
pub fn clip_to_rect(poly: &Polygon, width: f64, height: f64) -> Vec<Polygon> {
    let b = poly.bbox();
    if b.min_x >= 0.0 && b.min_y >= 0.0 && b.max_x <= width && b.max_y <= height {
        return vec![poly.clone()];
    }
    let subj: Vec<[f64; 2]> = poly.vertices().iter().map(|p| [p.x(), p.y()]).collect();
    let rect = vec![[0.0, 0.0], [width, 0.0], [width, height], [0.0, height]];
    let shapes = subj.overlay(&rect, OverlayRule::Intersect, FillRule::NonZero);
    let mut out: Vec<Polygon> = shapes
        .into_iter()
        .filter_map(|shape| shape.into_iter().next())
        .filter_map(|contour| polygon_from_contour(&contour))
        .collect();
    out.sort_by(|a, b| b.area().total_cmp(&a.area()));
    out
}

fn raw_offset_ring(pts: &[Point2], delta: f64, join: JoinPolicy) -> Vec<[f64; 2]> {
    let n = pts.len();
    let normals: Vec<Point2> = (0..n)
        .map(|i| {
            let d = pts[(i + 1) % n].sub(pts[i]);
            let len = d.dot(d).sqrt();
            Point2::raw(d.y() / len, -d.x() / len)
        })
        .collect();

    // cos of the angle between normals above which a miter stays inside the limit.
    let miter_cos = 2.0 / (join.miter_limit * join.miter_limit) - 1.0;
    let mut ring = Vec::with_capacity(3 * n);
    let mut push = |p: Point2| ring.push([p.x(), p.y()]);

    for j in 0..n {
        let k = (j + n - 1) % n;
        let p = pts[j];
        let (n1, n2) = (normals[k], normals[j]);
        let sin_a = n1.cross(n2).clamp(-1.0, 1.0);
        let cos_a = n1.dot(n2);
        if cos_a > -0.999 && sin_a * delta < 0.0 {
            // Edges overlap here; route through the vertex and let the
            // winding union discard the reversed loop.
            push(p.add(n1.scale(delta)));
            push(p);
            push(p.add(n2.scale(delta)));
        } else if cos_a > 0.999 || cos_a > miter_cos {
            let q = delta / (1.0 + cos_a);
            push(p.add(n1.add(n2).scale(q)));
        } else {
            // Bevel.
            push(p.add(n1.scale(delta)));
            push(p.add(n2.scale(delta)));
        }
    }
    ring
}

/// Converts an overlay contour into a validated polygon, dropping duplicate
/// and collinear vertices first. Degenerate contours yield `None`.
pub(crate) fn polygon_from_contour(contour: &[[f64; 2]]) -> Option<Polygon> {
    let mut pts: Vec<Point2> = Vec::with_capacity(contour.len());
    for c in contour {
        let p = Point2::new(c[0], c[1]).ok()?;
        if pts.last().is_none_or(|q: &Point2| q.distance(&p) > EPS) {
            pts.push(p);
        }
    }
    while pts.len() > 1 && pts[0].distance(pts.last().unwrap()) <= EPS {
        pts.pop();
    }
    remove_collinear(&mut pts);
    match Polygon::new(pts) {
        Ok(p) => Some(p),
        Err(e) => {
            log::debug!("dropping overlay contour: {e}");
            None
        }
    }
}

pub(crate) fn remove_collinear(pts: &mut Vec<Point2>) {
    let redundant = |a: Point2, b: Point2, c: Point2| orient(a, b, c) == 0 && b.sub(a).dot(c.sub(b)) > 0.0;
    loop {
        let before = pts.len();
        let mut i = 0;
        while pts.len() >= 3 && i < pts.len() {
            let n = pts.len();
            if redundant(pts[(i + n - 1) % n], pts[i], pts[(i + 1) % n]) {
                pts.remove(i);
                i = i.saturating_sub(1);
            } else {
                i += 1;
            }
        }
        if pts.len() == before || pts.len() < 3 {
            break;
        }
    }
}
