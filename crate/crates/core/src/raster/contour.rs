//! Crack-following contour extraction.
//!
//! The boundary of a component is walked along pixel edges (the corner
//! lattice), so the traced ring encloses exactly the component's pixel
//! squares. Two adjustments keep the ring a simple polygon without moving
//! any pixel center across it:
//!
//! * where two diagonal pixels meet at a single corner the walk passes the
//!   corner twice; each pass is chamfered by [`PINCH_CHAMFER`] so the passes
//!   separate;
//! * holes are spliced into the outer ring through a vertical slit of width
//!   [`SLIT_WIDTH`] placed a quarter pixel right of a lattice line.

use std::collections::HashMap;

use super::ComponentLabels;
use crate::geometry::{Point2, Polygon};
use crate::{Error, Result};

const PINCH_CHAMFER: f64 = 1e-3;
const SLIT_WIDTH: f64 = 1e-3;
const SLIT_INSET: f64 = 0.25;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
struct Dir(i64, i64);

const E: Dir = Dir(1, 0);
const S: Dir = Dir(0, 1);
const W: Dir = Dir(-1, 0);
const N: Dir = Dir(0, -1);

#[derive(Clone, Copy)]
struct Edge {
    from: (i64, i64),
    to: (i64, i64),
    dir: Dir,
}

/// Outer boundary of component `id` as a simple polygon whose
/// rasterization reproduces the component's pixels exactly.
pub fn trace_contour(labels: &ComponentLabels, id: u32) -> Result<Polygon> {
    let st = *labels.stats(id)?;
    let inside = |r: i64, c: i64| -> bool {
        r >= st.min_row as i64
            && r <= st.max_row as i64
            && c >= st.min_col as i64
            && c <= st.max_col as i64
            && labels.get(r as usize, c as usize) == id
    };

    let mut edges: Vec<Edge> = Vec::new();
    for r in st.min_row as i64..=st.max_row as i64 {
        for c in st.min_col as i64..=st.max_col as i64 {
            if !inside(r, c) {
                continue;
            }
            let (x, y) = (c, r);
            if !inside(r - 1, c) {
                edges.push(Edge { from: (x, y), to: (x + 1, y), dir: E });
            }
            if !inside(r, c + 1) {
                edges.push(Edge { from: (x + 1, y), to: (x + 1, y + 1), dir: S });
            }
            if !inside(r + 1, c) {
                edges.push(Edge { from: (x + 1, y + 1), to: (x, y + 1), dir: W });
            }
            if !inside(r, c - 1) {
                edges.push(Edge { from: (x, y + 1), to: (x, y), dir: N });
            }
        }
    }

    let mut outgoing: HashMap<(i64, i64), [usize; 2]> = HashMap::with_capacity(edges.len());
    for (i, e) in edges.iter().enumerate() {
        let slot = outgoing.entry(e.from).or_insert([usize::MAX; 2]);
        if slot[0] == usize::MAX {
            slot[0] = i;
        } else {
            slot[1] = i;
        }
    }

    let mut used = vec![false; edges.len()];
    let mut loops: Vec<Vec<(i64, i64)>> = Vec::new();
    for start in 0..edges.len() {
        if used[start] {
            continue;
        }
        let mut ring = Vec::new();
        let mut cur = start;
        loop {
            used[cur] = true;
            let e = edges[cur];
            let next = next_edge(&edges, &outgoing[&e.to], e.dir);
            if edges[next].dir != e.dir {
                ring.push(e.to);
            }
            if next == start {
                break;
            }
            cur = next;
        }
        // Start at the first vertex of the first edge when it is a corner.
        if let Some(pos) = ring.iter().position(|&v| v == edges[start].from) {
            ring.rotate_left(pos);
        }
        loops.push(ring);
    }

    let mut outer: Option<Vec<Point2>> = None;
    let mut holes: Vec<Vec<Point2>> = Vec::new();
    for ring in loops {
        let pts: Vec<Point2> = ring.iter().map(|&(x, y)| Point2::raw(x as f64, y as f64)).collect();
        if crate::geometry::signed_area(&pts) > 0.0 {
            debug_assert!(outer.is_none(), "connected component has one outer boundary");
            outer = Some(pts);
        } else {
            holes.push(pts);
        }
    }
    let mut merged = outer.ok_or(Error::EmptyMask)?;

    holes.sort_by(|a, b| {
        let ka = top_left(a);
        let kb = top_left(b);
        ka.1.total_cmp(&kb.1).then(ka.0.total_cmp(&kb.0))
    });
    for hole in &holes {
        splice_hole(&mut merged, hole)?;
    }

    chamfer_pinches(&mut merged);
    Polygon::new(merged)
}

/// Picks the continuation at a lattice vertex. At a pinch (two outgoing
/// edges) the walk turns away from the pixel it was following, which joins
/// diagonal neighbours into one ring.
fn next_edge(edges: &[Edge], out: &[usize; 2], din: Dir) -> usize {
    if out[1] == usize::MAX {
        return out[0];
    }
    let cross = |d: Dir| din.0 * d.1 - din.1 * d.0;
    if cross(edges[out[0]].dir) < 0 {
        out[0]
    } else {
        out[1]
    }
}

fn top_left(pts: &[Point2]) -> (f64, f64) {
    pts.iter()
        .map(|p| (p.x(), p.y()))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)))
        .expect("non-empty ring")
}

/// Joins `hole` (negative orientation) into `ring` through a thin slit
/// running straight up from the hole's top-left pixel.
fn splice_hole(ring: &mut Vec<Point2>, hole: &[Point2]) -> Result<()> {
    let (cx, yh) = top_left(hole);
    let xl = cx + SLIT_INSET;
    let xr = xl + SLIT_WIDTH;

    // Hole vertex at the top-left corner; the edge into it runs west along y = yh.
    let hv = hole.iter().position(|p| p.x() == cx && p.y() == yh).expect("top-left vertex is on the ring");
    let hu = (hv + hole.len() - 1) % hole.len();
    debug_assert!(hole[hu].y() == yh && hole[hu].x() > xr);

    // Nearest eastward edge strictly above, spanning the slit.
    let n = ring.len();
    let mut hit: Option<(usize, f64)> = None;
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        if a.y() != b.y() || a.y() >= yh || b.x() <= a.x() {
            continue;
        }
        if a.x() < xl && b.x() > xr && hit.is_none_or(|(_, y)| a.y() > y) {
            hit = Some((i, a.y()));
        }
    }
    let (ia, yt) = hit.ok_or_else(|| Error::Format("hole without enclosing boundary".into()))?;

    let mut spliced = Vec::with_capacity(n + hole.len() + 4);
    spliced.extend_from_slice(&ring[..=ia]);
    spliced.push(Point2::raw(xl, yt));
    spliced.push(Point2::raw(xl, yh));
    spliced.extend(hole[hv..].iter().chain(&hole[..hv]).copied());
    spliced.push(Point2::raw(xr, yh));
    spliced.push(Point2::raw(xr, yt));
    spliced.extend_from_slice(&ring[ia + 1..]);
    *ring = spliced;
    Ok(())
}

/// Replaces every repeated vertex by a short chord across its corner.
fn chamfer_pinches(ring: &mut Vec<Point2>) {
    let key = |p: &Point2| (p.x().to_bits(), p.y().to_bits());
    let mut seen: HashMap<(u64, u64), usize> = HashMap::new();
    for p in ring.iter() {
        *seen.entry(key(p)).or_default() += 1;
    }
    if seen.values().all(|&c| c == 1) {
        return;
    }
    let n = ring.len();
    let mut out = Vec::with_capacity(n + 8);
    for i in 0..n {
        let v = ring[i];
        if seen[&key(&v)] > 1 {
            let prev = ring[(i + n - 1) % n];
            let next = ring[(i + 1) % n];
            let din = unit(v.sub(prev));
            let dout = unit(next.sub(v));
            out.push(v.sub(din.scale(PINCH_CHAMFER)));
            out.push(v.add(dout.scale(PINCH_CHAMFER)));
        } else {
            out.push(v);
        }
    }
    *ring = out;
}

fn unit(p: Point2) -> Point2 {
    let len = p.dot(p).sqrt();
    p.scale(1.0 / len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{connected_components, rasterize, BitMask, Connectivity};

    fn roundtrip(rows: &[&str], conn: Connectivity) {
        let m = BitMask::from_ascii(rows).unwrap();
        let labels = connected_components(&m, conn);
        for id in 1..=labels.count() {
            let poly = trace_contour(&labels, id).unwrap();
            let back = rasterize(&poly, m.width(), m.height()).unwrap();
            assert_eq!(back, labels.component_mask(id).unwrap(), "component {id} of {rows:?}");
        }
    }

    #[test]
    fn block_traces_to_square() {
        let m = BitMask::from_ascii(&["###.", "###.", "###.", "...."]).unwrap();
        let l = connected_components(&m, Connectivity::Eight);
        let p = trace_contour(&l, 1).unwrap();
        let want: Vec<Point2> =
            [(0.0, 0.0), (3.0, 0.0), (3.0, 3.0), (0.0, 3.0)].iter().map(|&(x, y)| Point2::raw(x, y)).collect();
        assert_eq!(p.vertices(), &want[..]);
    }

    #[test]
    fn single_pixel_is_unit_square() {
        let m = BitMask::from_ascii(&["...", ".#.", "..."]).unwrap();
        let l = connected_components(&m, Connectivity::Eight);
        let p = trace_contour(&l, 1).unwrap();
        assert_eq!(p.area(), 1.0);
        assert_eq!(p.vertices()[0], Point2::raw(1.0, 1.0));
    }

    #[test]
    fn unknown_component() {
        let m = BitMask::from_ascii(&["#"]).unwrap();
        let l = connected_components(&m, Connectivity::Eight);
        assert!(matches!(trace_contour(&l, 2), Err(Error::UnknownComponent { .. })));
        assert!(matches!(trace_contour(&l, 0), Err(Error::UnknownComponent { .. })));
    }

    #[test]
    fn pinches_and_holes_roundtrip() {
        roundtrip(&["#.", ".#"], Connectivity::Eight);
        roundtrip(&[".#", "#."], Connectivity::Eight);
        roundtrip(&["#####", "#...#", "#.#.#", "#...#", "#####"], Connectivity::Eight);
        roundtrip(&["####", "#..#", "####"], Connectivity::Four);
        // Hole touching the outside through a diagonal pinch.
        roundtrip(&["##.#", "#..#", "####"], Connectivity::Eight);
        roundtrip(&[".##.", "#..#", "#..#", ".##."], Connectivity::Eight);
        // Two holes in the same column, and nested islands.
        roundtrip(
            &["#######", "#.#####", "#######", "#.###.#", "#######", "##...##", "##.#.##", "##...##", "#######"],
            Connectivity::Eight,
        );
        roundtrip(&["#.#.#", ".#.#.", "#.#.#", ".#.#."], Connectivity::Eight);
        roundtrip(&["#.#.#", ".#.#.", "#.#.#", ".#.#."], Connectivity::Four);
    }
}
