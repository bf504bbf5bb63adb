#![allow(dead_code)]

use proptest::prelude::*;
use shrinkmask::{Point2, Polygon};

/// Star-shaped polygon around `(cx, cy)`. Angles increase strictly, so the
/// ring never crosses itself.
pub fn star(cx: f64, cy: f64, radii: &[f64], jitter: &[f64]) -> Polygon {
    let n = radii.len();
    let pts = radii
        .iter()
        .zip(jitter)
        .enumerate()
        .map(|(k, (&r, &j))| {
            let a = (k as f64 + j) / n as f64 * std::f64::consts::TAU;
            Point2::new(cx + r * a.cos(), cy + r * a.sin()).unwrap()
        })
        .collect();
    Polygon::new(pts).unwrap()
}

pub fn star_strategy(center: std::ops::Range<f64>, radius: std::ops::Range<f64>) -> impl Strategy<Value = Polygon> {
    (3usize..12, center.clone(), center).prop_flat_map(move |(n, cx, cy)| {
        (proptest::collection::vec(radius.clone(), n), proptest::collection::vec(0.0f64..0.8, n))
            .prop_map(move |(r, j)| star(cx, cy, &r, &j))
    })
}

/// Sorted x-intervals where the horizontal line at `y` is inside `p`
/// (even-odd).
pub fn scanline_intervals(p: &Polygon, y: f64) -> Vec<(f64, f64)> {
    let mut xs: Vec<f64> = p
        .edges()
        .filter(|(a, b)| (a.y() <= y) != (b.y() <= y))
        .map(|(a, b)| a.x() + (y - a.y()) / (b.y() - a.y()) * (b.x() - a.x()))
        .collect();
    xs.sort_by(f64::total_cmp);
    xs.chunks_exact(2).map(|c| (c[0], c[1])).collect()
}

fn overlap(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let mut s = 0.0;
    for &(a0, a1) in a {
        for &(b0, b1) in b {
            s += (a1.min(b1) - a0.max(b0)).max(0.0);
        }
    }
    s
}

/// `(area a, area b, intersection)` by midpoint integration over `rows`
/// horizontal scanlines.
pub fn scanline_areas(a: &Polygon, b: &Polygon, rows: usize) -> (f64, f64, f64) {
    let (ba, bb) = (a.bbox(), b.bbox());
    let y0 = ba.min_y.min(bb.min_y);
    let y1 = ba.max_y.max(bb.max_y);
    let dy = (y1 - y0) / rows as f64;
    let (mut sa, mut sb, mut si) = (0.0, 0.0, 0.0);
    for r in 0..rows {
        let y = y0 + (r as f64 + 0.5) * dy;
        let ia = scanline_intervals(a, y);
        let ib = scanline_intervals(b, y);
        sa += ia.iter().map(|(l, h)| h - l).sum::<f64>();
        sb += ib.iter().map(|(l, h)| h - l).sum::<f64>();
        si += overlap(&ia, &ib);
    }
    (sa * dy, sb * dy, si * dy)
}

/// Shoelace area and edge-length sum, computed from the vertex list.
pub fn area_and_perimeter(p: &Polygon) -> (f64, f64) {
    let v = p.vertices();
    let (mut s, mut l) = (0.0, 0.0);
    for i in 0..v.len() {
        let (a, b) = (v[i], v[(i + 1) % v.len()]);
        s += a.x() * b.y() - b.x() * a.y();
        l += ((b.x() - a.x()).powi(2) + (b.y() - a.y()).powi(2)).sqrt();
    }
    (s.abs() / 2.0, l)
}
