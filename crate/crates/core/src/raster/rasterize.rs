use super::BitMask;
use crate::geometry::Polygon;
use crate::Result;

/// Scan-converts `poly` with the even-odd rule, sampling pixel centers.
/// Parts of the polygon outside the grid are clipped away.
pub fn rasterize(poly: &Polygon, width: usize, height: usize) -> Result<BitMask> {
    let mut mask = BitMask::new(width, height)?;
    rasterize_into(poly, &mut mask);
    Ok(mask)
}

/// Sets (ORs) the pixels covered by `poly` into an existing mask.
pub fn rasterize_into(poly: &Polygon, mask: &mut BitMask) {
    let (w, h) = (mask.width(), mask.height());
    let b = poly.bbox();
    // Rows whose center y = i + 0.5 lies in [min_y, max_y].
    let row_lo = ((b.min_y - 0.5).ceil().max(0.0)) as usize;
    let row_hi = (b.max_y - 0.5).floor();
    if row_hi < 0.0 || row_lo >= h {
        return;
    }
    let row_hi = (row_hi as usize).min(h - 1);

    let edges: Vec<_> = poly.edges().collect();
    let mut xs: Vec<f64> = Vec::new();
    for i in row_lo..=row_hi {
        let y = i as f64 + 0.5;
        xs.clear();
        for &(p, q) in &edges {
            // Half-open in y so shared vertices are counted once.
            if (p.y() <= y) != (q.y() <= y) {
                let t = (y - p.y()) / (q.y() - p.y());
                xs.push(p.x() + t * (q.x() - p.x()));
            }
        }
        xs.sort_by(f64::total_cmp);
        for span in xs.chunks_exact(2) {
            // Columns with center in [x0, x1).
            let c0 = (span[0] - 0.5).ceil().max(0.0);
            let c1 = (span[1] - 0.5).ceil().min(w as f64);
            if c1 <= c0 {
                continue;
            }
            for j in c0 as usize..c1 as usize {
                mask.set(i, j, true);
            }
        }
    }
}
