//! Dense row-major grids and the pixel-level primitives built on them.
//!
//! Pixel `(row i, column j)` covers the unit square `[j, j+1] x [i, i+1]`
//! and is sampled at its center `(j + 0.5, i + 0.5)`.

mod components;
mod contour;
mod edt;
mod rasterize;

pub use components::{connected_components, ComponentLabels, ComponentStats, Connectivity};
pub use contour::trace_contour;
pub use edt::distance_transform;
pub use rasterize::{rasterize, rasterize_into};

use crate::{Error, Result};

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::EmptyGrid { width, height });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BitMask {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self { width, height, bits: vec![false; width * height] })
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        check_dims(width, height)?;
        if bits.len() != width * height {
            return Err(Error::Format(format!("mask payload has {} entries, expected {}", bits.len(), width * height)));
        }
        Ok(Self { width, height, bits })
    }

    /// Builds a mask from rows of `'#'` (set) and anything else (unset).
    pub fn from_ascii(rows: &[&str]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        let mut bits = Vec::with_capacity(width * height);
        for r in rows {
            if r.len() != width {
                return Err(Error::Format("ragged ascii mask".into()));
            }
            bits.extend(r.bytes().map(|b| b == b'#'));
        }
        Self::from_bits(width, height, bits)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: bool) {
        self.bits[row * self.width + col] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn same_shape<T: Grid>(&self, other: &T) -> Result<()> {
        same_shape(self.width, self.height, other)
    }

    pub fn union_with(&mut self, other: &BitMask) -> Result<()> {
        self.same_shape(other)?;
        for (a, &b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
        Ok(())
    }

    /// True when every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BitMask) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    pub fn to_float(&self) -> FloatMap {
        FloatMap {
            width: self.width,
            height: self.height,
            values: self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }
}

/// Real-valued grid. Values are kept in `f64`; map files store `f32`.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl FloatMap {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        check_dims(width, height)?;
        if !value.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite fill value {value}")));
        }
        Ok(Self { width, height, values: vec![value; width * height] })
    }

    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        if values.len() != width * height {
            return Err(Error::Format(format!(
                "map payload has {} entries, expected {}",
                values.len(),
                width * height
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite map value {v}")));
        }
        Ok(Self { width, height, values })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable access; callers must keep values finite.
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        debug_assert!(v.is_finite());
        self.values[row * self.width + col] = v;
    }

    pub fn same_shape<T: Grid>(&self, other: &T) -> Result<()> {
        same_shape(self.width, self.height, other)
    }

    /// Pixels with value `>= threshold`.
    pub fn threshold(&self, threshold: f64) -> BitMask {
        BitMask { width: self.width, height: self.height, bits: self.values.iter().map(|&v| v >= threshold).collect() }
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Shared shape accessors for shape checks.
pub trait Grid {
    fn dims(&self) -> (usize, usize);
}

impl Grid for BitMask {
    fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

impl Grid for FloatMap {
    fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

fn same_shape<T: Grid>(width: usize, height: usize, other: &T) -> Result<()> {
    let (w, h) = other.dims();
    if (w, h) != (width, height) {
        return Err(Error::ShapeMismatch { expected_width: width, expected_height: height, width: w, height: h });
    }
    Ok(())
}

/// Mean of `map` over the set pixels of `mask`.
pub fn mask_mean_inside(map: &FloatMap, mask: &BitMask) -> Result<f64> {
    map.same_shape(mask)?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for (&v, &b) in map.values.iter().zip(&mask.bits) {
        if b {
            sum += v;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(sum / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_inside_examples() {
        let map = FloatMap::filled(4, 3, 2.1).unwrap();
        let mask = BitMask::from_ascii(&["#..#", ".#..", "...."]).unwrap();
        assert!((mask_mean_inside(&map, &mask).unwrap() - 2.1).abs() < 1e-12);

        let map = FloatMap::from_values(2, 1, vec![1.0, 3.0]).unwrap();
        let mask = BitMask::from_ascii(&["##"]).unwrap();
        assert_eq!(mask_mean_inside(&map, &mask).unwrap(), 2.0);

        let empty = BitMask::new(2, 1).unwrap();
        assert_eq!(mask_mean_inside(&map, &empty), Err(Error::EmptyMask));
        let wrong = BitMask::new(3, 1).unwrap();
        assert!(matches!(mask_mean_inside(&map, &wrong), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn grids_reject_bad_payloads() {
        assert!(BitMask::new(0, 3).is_err());
        assert!(FloatMap::from_values(2, 2, vec![0.0; 3]).is_err());
        assert!(FloatMap::from_values(1, 1, vec![f64::NAN]).is_err());
    }
}
