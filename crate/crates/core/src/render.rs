//! Small RGBA canvas for overlays and map previews.

use crate::geometry::Polygon;
use crate::raster::{BitMask, FloatMap};

pub type Rgb = [u8; 3];

pub const GROUND_TRUTH: Rgb = [40, 200, 70];
pub const ADAPTIVE: Rgb = [40, 110, 240];
pub const FIXED: Rgb = [230, 50, 50];
pub const IGNORED: Rgb = [150, 150, 150];

/// Row-major RGBA8 image.
#[derive(Clone, Debug, PartialEq)]
pub struct Canvas {
    width: usize,
    height: usize,
    rgba: Vec<u8>,
}

impl Canvas {
    pub fn new(width: usize, height: usize, background: Rgb) -> Self {
        let mut rgba = Vec::with_capacity(width * height * 4);
        for _ in 0..width * height {
            rgba.extend_from_slice(&[background[0], background[1], background[2], 255]);
        }
        Self { width, height, rgba }
    }

    /// Colour-mapped view of `map`, scaled so `[lo, hi]` spans the palette.
    pub fn heatmap(map: &FloatMap, lo: f64, hi: f64) -> Self {
        let mut c = Self::new(map.width(), map.height(), [0, 0, 0]);
        let span = if hi > lo { hi - lo } else { 1.0 };
        for i in 0..map.height() {
            for j in 0..map.width() {
                let t = ((map.get(i, j) - lo) / span).clamp(0.0, 1.0);
                c.put(i, j, palette(t));
            }
        }
        c
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn rgba(&self) -> &[u8] {
        &self.rgba
    }

    pub fn into_rgba(self) -> Vec<u8> {
        self.rgba
    }

    fn put(&mut self, row: usize, col: usize, c: Rgb) {
        let k = 4 * (row * self.width + col);
        self.rgba[k..k + 3].copy_from_slice(&c);
    }

    fn blend(&mut self, row: usize, col: usize, c: Rgb, alpha: f64) {
        let k = 4 * (row * self.width + col);
        for (ch, &v) in self.rgba[k..k + 3].iter_mut().zip(&c) {
            *ch = (*ch as f64 * (1.0 - alpha) + v as f64 * alpha).round() as u8;
        }
    }

    /// Tints every set pixel of `mask`. Masks of another size are clipped.
    pub fn fill_mask(&mut self, mask: &BitMask, color: Rgb, alpha: f64) {
        let alpha = alpha.clamp(0.0, 1.0);
        for i in 0..mask.height().min(self.height) {
            for j in 0..mask.width().min(self.width) {
                if mask.get(i, j) {
                    self.blend(i, j, color, alpha);
                }
            }
        }
    }

    /// Draws the closed outline of `poly`, one pixel wide.
    pub fn draw_polygon(&mut self, poly: &Polygon, color: Rgb) {
        for (a, b) in poly.edges() {
            let len = a.distance(&b);
            let steps = (len * 2.0).ceil().max(1.0) as usize;
            for s in 0..=steps {
                let t = s as f64 / steps as f64;
                let x = a.x() + (b.x() - a.x()) * t;
                let y = a.y() + (b.y() - a.y()) * t;
                // Points on the far image edge belong to the last pixel.
                let col = x.floor().min(self.width as f64 - 1.0);
                let row = y.floor().min(self.height as f64 - 1.0);
                if col >= 0.0 && row >= 0.0 {
                    self.put(row as usize, col as usize, color);
                }
            }
        }
    }
}

/// Dark blue through teal and green to yellow.
fn palette(t: f64) -> Rgb {
    const STOPS: [[f64; 3]; 5] =
        [[68.0, 1.0, 84.0], [59.0, 82.0, 139.0], [33.0, 145.0, 140.0], [94.0, 201.0, 98.0], [253.0, 231.0, 37.0]];
    let x = t * (STOPS.len() - 1) as f64;
    let i = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - i as f64;
    let mut out = [0u8; 3];
    for ch in 0..3 {
        out[ch] = (STOPS[i][ch] * (1.0 - f) + STOPS[i + 1][ch] * f).round() as u8;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outline_touches_corners() {
        let mut c = Canvas::new(10, 10, [0, 0, 0]);
        c.draw_polygon(&Polygon::rect(1.0, 1.0, 10.0, 6.0).unwrap(), FIXED);
        let at = |i: usize, j: usize| &c.rgba()[4 * (i * 10 + j)..4 * (i * 10 + j) + 3];
        assert_eq!(at(1, 1), &FIXED);
        assert_eq!(at(6, 9), &FIXED);
        assert_eq!(at(3, 4), &[0, 0, 0]);
    }

    #[test]
    fn heatmap_ends() {
        let m = FloatMap::from_values(2, 1, vec![0.0, 1.0]).unwrap();
        let c = Canvas::heatmap(&m, 0.0, 1.0);
        assert_eq!(&c.rgba()[..3], &[68, 1, 84]);
        assert_eq!(&c.rgba()[4..7], &[253, 231, 37]);
    }

    #[test]
    fn mask_blend() {
        let mut c = Canvas::new(2, 1, [0, 0, 0]);
        c.fill_mask(&BitMask::from_ascii(&["#."]).unwrap(), [200, 100, 0], 0.5);
        assert_eq!(&c.rgba()[..8], &[100, 50, 0, 255, 0, 0, 0, 255]);
    }
}
