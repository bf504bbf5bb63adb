//! Supervision maps: shrink mask, adaptive offset, SPW and the IoU contrast map.

use crate::geometry::{offset_polygon, shrink_offset, Point2, Polygon, ShrinkParams};
use crate::raster::{distance_transform, rasterize, rasterize_into, BitMask, FloatMap};
use crate::{Error, Result};

/// Smallest shrink part (px²) kept as a shrink region.
pub const MIN_SHRINK_PART_AREA: f64 = 1.0;

pub const DEFAULT_WINDOW: usize = 32;

/// Text and do-not-care polygons of one image.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneAnnotation {
    pub width: usize,
    pub height: usize,
    pub texts: Vec<Polygon>,
    pub ignores: Vec<Polygon>,
}

impl SceneAnnotation {
    pub fn new(width: usize, height: usize, texts: Vec<Polygon>, ignores: Vec<Polygon>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyGrid { width, height });
        }
        Ok(Self { width, height, texts, ignores })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, Vec::new(), Vec::new())
    }
}

/// Square anchor of side `size` centred on a pixel. The window covers rows
/// `row - (size-1)/2 ..= row + size/2` (same for columns), clipped to the image.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnchorWindow {
    center: Point2,
    size: usize,
}

impl AnchorWindow {
    pub fn new(center: Point2, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidParameter("anchor window size must be positive".into()));
        }
        Ok(Self { center, size })
    }

    /// Window centred on pixel `(row, col)`.
    pub fn at_pixel(row: usize, col: usize, size: usize) -> Result<Self> {
        Self::new(Point2::new(col as f64 + 0.5, row as f64 + 0.5)?, size)
    }

    pub fn center(&self) -> Point2 {
        self.center
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Half-open pixel ranges `(rows, cols)` inside a `width x height` image.
    pub fn pixel_span(&self, width: usize, height: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let row = self.center.y().floor() as i64;
        let col = self.center.x().floor() as i64;
        let lo = (self.size as i64 - 1) / 2;
        let hi = self.size as i64 / 2;
        let clip = |c: i64, n: usize| (c - lo).clamp(0, n as i64) as usize..(c + hi + 1).clamp(0, n as i64) as usize;
        (clip(row, height), clip(col, width))
    }
}

/// Which pixels carry SPW supervision.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SpwValidRegion {
    #[default]
    All,
    ShrinkOnly,
}

impl std::str::FromStr for SpwValidRegion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Self::All),
            "shrink-only" => Ok(Self::ShrinkOnly),
            _ => Err(Error::InvalidParameter(format!("unknown SPW region {s:?}"))),
        }
    }
}

/// Shrink regions per text; `None` marks a text that collapsed.
#[derive(Clone, Debug)]
pub struct ShrinkRegions {
    pub regions: Vec<Option<Vec<Polygon>>>,
    pub mask: BitMask,
}

impl ShrinkRegions {
    /// Indices of texts whose shrink collapsed.
    pub fn skipped(&self) -> Vec<usize> {
        self.regions.iter().enumerate().filter(|(_, r)| r.is_none()).map(|(i, _)| i).collect()
    }
}

#[derive(Clone, Debug)]
pub struct LabelMaps {
    pub shrink: BitMask,
    pub offset: FloatMap,
    pub spw: FloatMap,
    pub ignore: BitMask,
    /// Texts left out of every map because their shrink collapsed.
    pub skipped: Vec<usize>,
}

impl LabelMaps {
    pub fn spw_region(&self, mode: SpwValidRegion) -> BitMask {
        match mode {
            SpwValidRegion::All => {
                BitMask::from_bits(self.shrink.width(), self.shrink.height(), vec![true; self.shrink.bits().len()])
                    .expect("non-empty grid")
            }
            SpwValidRegion::ShrinkOnly => self.shrink.clone(),
        }
    }

    /// Pixels where the offset target is defined (inside some kept text).
    pub fn offset_region(&self) -> BitMask {
        self.offset.threshold(f64::MIN_POSITIVE)
    }
}

/// Shrunk parts of one text, or `None` when nothing of at least
/// [`MIN_SHRINK_PART_AREA`] survives.
pub fn shrink_text(text: &Polygon, params: ShrinkParams) -> Option<Vec<Polygon>> {
    let parts = offset_polygon(text, -shrink_offset(text, params)).ok()?;
    let parts: Vec<Polygon> = parts.into_iter().filter(|p| p.area() >= MIN_SHRINK_PART_AREA).collect();
    (!parts.is_empty()).then_some(parts)
}

pub fn shrink_regions(ann: &SceneAnnotation, params: ShrinkParams) -> ShrinkRegions {
    let mut mask = BitMask::new(ann.width, ann.height).expect("annotation has positive size");
    let mut regions = Vec::with_capacity(ann.texts.len());
    for (i, text) in ann.texts.iter().enumerate() {
        let parts = shrink_text(text, params);
        match &parts {
            Some(parts) => parts.iter().for_each(|p| rasterize_into(p, &mut mask)),
            None => log::info!("text {i} collapses under shrinking; skipped"),
        }
        regions.push(parts);
    }
    ShrinkRegions { regions, mask }
}

pub fn gen_shrink_mask(ann: &SceneAnnotation, params: ShrinkParams) -> BitMask {
    shrink_regions(ann, params).mask
}

/// Distance from each pixel centre inside a text to that text's contour,
/// minimised over the texts covering the pixel; zero elsewhere.
pub fn gen_offset_map(ann: &SceneAnnotation) -> FloatMap {
    offset_map_for(ann, ann.texts.iter())
}

/// Offset map over the texts whose shrink survived.
pub fn gen_kept_offset_map(ann: &SceneAnnotation, shrink: &ShrinkRegions) -> FloatMap {
    offset_map_for(ann, ann.texts.iter().zip(&shrink.regions).filter(|(_, r)| r.is_some()).map(|(t, _)| t))
}

fn offset_map_for<'a>(ann: &SceneAnnotation, texts: impl Iterator<Item = &'a Polygon>) -> FloatMap {
    let (w, h) = (ann.width, ann.height);
    let mut out = FloatMap::new(w, h).expect("annotation has positive size");
    let mut covered = vec![false; w * h];
    for text in texts {
        let Some((r0, c0, local)) = text_distances(text, w, h) else { continue };
        let lw = local.width();
        for (k, &d) in local.values().iter().enumerate() {
            if d <= 0.0 {
                continue;
            }
            let (r, c) = (r0 + (k / lw) as i64, c0 + (k % lw) as i64);
            if r < 0 || c < 0 || r >= h as i64 || c >= w as i64 {
                continue;
            }
            let idx = r as usize * w + c as usize;
            // Distance from the pixel centre to the crack between it and the
            // nearest outside pixel is half a pixel shorter than centre to centre.
            let v = d - 0.5;
            let slot = &mut out.values_mut()[idx];
            if !covered[idx] || v < *slot {
                *slot = v;
                covered[idx] = true;
            }
        }
    }
    out
}

/// Per-text distance transform on a padded local grid, so that texts cut by
/// the image border still measure distance to their own contour. Returns the
/// grid origin `(row, col)` in image coordinates.
fn text_distances(text: &Polygon, width: usize, height: usize) -> Option<(i64, i64, FloatMap)> {
    let b = text.bbox();
    let r0 = b.min_y.floor() as i64 - 1;
    let c0 = b.min_x.floor() as i64 - 1;
    let r1 = b.max_y.ceil() as i64 + 1;
    let c1 = b.max_x.ceil() as i64 + 1;
    if r1 <= 0 || c1 <= 0 || r0 >= height as i64 || c0 >= width as i64 {
        return None;
    }
    let local = text.translated(-(c0 as f64), -(r0 as f64)).ok()?;
    let m = rasterize(&local, (c1 - c0) as usize, (r1 - r0) as usize).ok()?;
    Some((r0, c0, distance_transform(&m)))
}

/// Fraction of each pixel's (clipped) anchor window covered by shrink masks.
pub fn gen_spw_map(ann: &SceneAnnotation, shrink: &BitMask, window: usize) -> Result<FloatMap> {
    if window == 0 {
        return Err(Error::InvalidParameter("anchor window size must be positive".into()));
    }
    let (w, h) = (ann.width, ann.height);
    let dims = BitMask::new(w, h)?;
    dims.same_shape(shrink)?;
    let sat = SummedArea::new(shrink);
    let mut values = Vec::with_capacity(w * h);
    for i in 0..h {
        for j in 0..w {
            let (rows, cols) = AnchorWindow::at_pixel(i, j, window)?.pixel_span(w, h);
            let area = (rows.len() * cols.len()) as f64;
            values.push(sat.sum(rows, cols) as f64 / area);
        }
    }
    FloatMap::from_values(w, h, values)
}

/// IoU between each pixel's anchor window and the text region it overlaps most.
pub fn gen_iou_map(ann: &SceneAnnotation, window: usize) -> Result<FloatMap> {
    if window == 0 {
        return Err(Error::InvalidParameter("anchor window size must be positive".into()));
    }
    let (w, h) = (ann.width, ann.height);
    let texts: Vec<(SummedArea, f64)> = ann
        .texts
        .iter()
        .map(|t| {
            let m = rasterize(t, w, h).expect("annotation has positive size");
            let n = m.count() as f64;
            (SummedArea::new(&m), n)
        })
        .collect();
    let mut values = Vec::with_capacity(w * h);
    for i in 0..h {
        for j in 0..w {
            let (rows, cols) = AnchorWindow::at_pixel(i, j, window)?.pixel_span(w, h);
            let area = (rows.len() * cols.len()) as f64;
            let mut best: Option<(f64, f64)> = None;
            for (sat, text_area) in &texts {
                let inter = sat.sum(rows.clone(), cols.clone()) as f64;
                if inter == 0.0 {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bi, ba)) => inter > bi || (inter == bi && *text_area < ba),
                };
                if better {
                    best = Some((inter, *text_area));
                }
            }
            values.push(best.map_or(0.0, |(inter, ta)| inter / (area + ta - inter)));
        }
    }
    FloatMap::from_values(w, h, values)
}

pub fn gen_labels(ann: &SceneAnnotation, params: ShrinkParams, window: usize) -> Result<LabelMaps> {
    let shrink = shrink_regions(ann, params);
    let skipped = shrink.skipped();
    let offset = gen_kept_offset_map(ann, &shrink);
    let spw = gen_spw_map(ann, &shrink.mask, window)?;
    let mut ignore = BitMask::new(ann.width, ann.height)?;
    for p in &ann.ignores {
        rasterize_into(p, &mut ignore);
    }
    Ok(LabelMaps { shrink: shrink.mask, offset, spw, ignore, skipped })
}

/// Integral image over a mask for O(1) rectangle counts.
struct SummedArea {
    width: usize,
    table: Vec<u32>,
}

impl SummedArea {
    fn new(m: &BitMask) -> Self {
        let (w, h) = (m.width(), m.height());
        let mut table = vec![0u32; (w + 1) * (h + 1)];
        for i in 0..h {
            let mut row = 0u32;
            for j in 0..w {
                row += m.get(i, j) as u32;
                table[(i + 1) * (w + 1) + j + 1] = table[i * (w + 1) + j + 1] + row;
            }
        }
        Self { width: w, table }
    }

    fn sum(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> u32 {
        let s = self.width + 1;
        let at = |r: usize, c: usize| self.table[r * s + c];
        at(rows.end, cols.end) + at(rows.start, cols.start) - at(rows.start, cols.end) - at(rows.end, cols.start)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(x: f64, y: f64, s: f64) -> Polygon {
        Polygon::rect(x, y, x + s, y + s).unwrap()
    }

    fn scene(w: usize, h: usize, texts: Vec<Polygon>) -> SceneAnnotation {
        SceneAnnotation::new(w, h, texts, vec![]).unwrap()
    }

    #[test]
    fn square_text_shrinks_to_inset() {
        let ann = scene(40, 40, vec![square(10.0, 10.0, 20.0)]);
        let m = gen_shrink_mask(&ann, ShrinkParams::default());
        // Inset square [14.2, 25.8]: centres 14.5..=25.5, twelve per side.
        assert_eq!(m.count(), 144);
        let side = 20.0 - 2.0 * (400.0 / 80.0 * 0.84);
        assert!((m.count() as f64 - side * side).abs() <= 4.0 * side);
    }

    #[test]
    fn empty_annotation_gives_empty_maps() {
        let ann = SceneAnnotation::empty(8, 8).unwrap();
        let l = gen_labels(&ann, ShrinkParams::default(), 3).unwrap();
        assert!(l.shrink.is_empty() && l.ignore.is_empty());
        assert_eq!(l.offset.max_value(), 0.0);
        assert_eq!(l.spw.max_value(), 0.0);
    }

    #[test]
    fn offset_center_of_21_square() {
        let ann = scene(31, 31, vec![square(5.0, 5.0, 21.0)]);
        let o = gen_offset_map(&ann);
        assert_eq!(o.get(15, 15), 10.5);
        assert_eq!(o.get(5, 5), 0.5);
        assert_eq!(o.get(2, 2), 0.0);
    }

    #[test]
    fn offset_of_border_cut_text_measures_true_contour() {
        // Text extends 10 px past the left border.
        let ann = scene(20, 20, vec![Polygon::rect(-10.0, 0.0, 10.0, 20.0).unwrap()]);
        let o = gen_offset_map(&ann);
        assert_eq!(o.get(10, 0), 9.5);
    }

    #[test]
    fn spw_examples() {
        // 10x10 window at the centre of a 30x30 image.
        let ann = SceneAnnotation::empty(30, 30).unwrap();
        let (ci, cj) = (15, 15);
        let (rows, cols) = AnchorWindow::at_pixel(ci, cj, 10).unwrap().pixel_span(30, 30);
        assert_eq!((rows.clone(), cols.clone()), (11..21, 11..21));

        let mut full = BitMask::new(30, 30).unwrap();
        let mut half = BitMask::new(30, 30).unwrap();
        let mut two = BitMask::new(30, 30).unwrap();
        for i in rows.clone() {
            for j in cols.clone() {
                full.set(i, j, true);
                half.set(i, j, j < 16);
            }
        }
        // 25 pixels of one mask, 10 of another.
        for i in 11..16 {
            for j in 11..16 {
                two.set(i, j, true);
            }
        }
        for j in 11..21 {
            two.set(20, j, true);
        }
        let at = |m: &BitMask| gen_spw_map(&ann, m, 10).unwrap().get(ci, cj);
        assert_eq!(at(&full), 1.0);
        assert_eq!(at(&half), 0.5);
        assert_eq!(at(&two), 0.35);
    }

    #[test]
    fn spw_window_one_is_mask() {
        let ann = scene(12, 12, vec![square(1.0, 1.0, 10.0)]);
        let m = gen_shrink_mask(&ann, ShrinkParams::default());
        assert_eq!(gen_spw_map(&ann, &m, 1).unwrap(), m.to_float());
    }

    #[test]
    fn iou_examples() {
        // Window 10x10 centred at (15, 15) covers [11, 21).
        let big = scene(40, 40, vec![Polygon::rect(6.0, 6.0, 26.0, 26.0).unwrap()]);
        assert_eq!(gen_iou_map(&big, 10).unwrap().get(15, 15), 0.25);
        let none = scene(40, 40, vec![square(30.0, 30.0, 5.0)]);
        assert_eq!(gen_iou_map(&none, 10).unwrap().get(15, 15), 0.0);
        // Overlap 30 (3 columns x 10 rows) with a 20x10 text.
        let part = scene(60, 40, vec![Polygon::rect(18.0, 11.0, 38.0, 21.0).unwrap()]);
        let v = gen_iou_map(&part, 10).unwrap().get(15, 15);
        assert!((v - 30.0 / 270.0).abs() < 1e-15);
    }

    #[test]
    fn spw_sees_tiny_text_iou_does_not() {
        // A 3x3 text under a 32x32 anchor; its shrink mask is non-empty.
        let ann = scene(64, 64, vec![square(30.0, 30.0, 3.0)]);
        let l = gen_labels(&ann, ShrinkParams::default(), 32).unwrap();
        let iou = gen_iou_map(&ann, 32).unwrap();
        let (s, u) = (l.spw.get(31, 31), iou.get(31, 31));
        assert!(s > 0.0 && u < 0.1);
    }

    #[test]
    fn tiny_text_is_skipped() {
        let ann = scene(16, 16, vec![square(2.0, 2.0, 1.0), square(6.0, 6.0, 8.0)]);
        let l = gen_labels(&ann, ShrinkParams::default(), 4).unwrap();
        assert_eq!(l.skipped, vec![0]);
        assert_eq!(l.offset.get(2, 2), 0.0);
        assert!(l.offset.get(8, 8) > 0.0);
    }

    #[test]
    fn ignore_only_annotation() {
        let ann = SceneAnnotation::new(10, 10, vec![], vec![square(1.0, 1.0, 4.0)]).unwrap();
        let l = gen_labels(&ann, ShrinkParams::default(), 5).unwrap();
        assert!(l.shrink.is_empty());
        assert_eq!(l.ignore.count(), 16);
    }
}
