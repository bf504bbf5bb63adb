//! Deterministic synthetic scenes and oracle prediction maps.

use std::f64::consts::PI;

use rand::{RngExt, SeedableRng};
use rand_distr::{Distribution, Normal};
use rand_xoshiro::Xoshiro256StarStar;
use serde::Serialize;

use crate::geometry::{Point2, Polygon, ShrinkParams};
use crate::labelgen::{gen_kept_offset_map, shrink_regions, SceneAnnotation};
use crate::raster::FloatMap;
use crate::{Error, Result};

/// Rejection-sampling budget per placed polygon.
pub const MAX_ATTEMPTS: usize = 1000;

/// Vertices per side of a curved band.
const BAND_SIDE: usize = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeFamily {
    Rectangle,
    RotatedRect,
    CurvedBand,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    /// Inclusive range of texts per scene.
    pub count: (usize, usize),
    /// Inclusive range of text heights (short side), px.
    pub text_size: (f64, f64),
    /// Inclusive range of length / height ratios.
    pub aspect: (f64, f64),
    pub families: Vec<ShapeFamily>,
    pub min_separation: f64,
    /// Probability that a scene carries one do-not-care region.
    pub ignore_probability: f64,
}

impl SynthConfig {
    /// Mixed rectangles, rotated rectangles and curved bands with texts at
    /// least 40 px high on 512 x 512 images.
    pub fn mixed(seed: u64) -> Self {
        Self {
            seed,
            width: 512,
            height: 512,
            count: (1, 4),
            text_size: (40.0, 64.0),
            aspect: (1.5, 3.0),
            families: vec![ShapeFamily::Rectangle, ShapeFamily::RotatedRect, ShapeFamily::CurvedBand],
            min_separation: 8.0,
            ignore_probability: 0.2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if self.width == 0 || self.height == 0 {
            return Err(Error::EmptyGrid { width: self.width, height: self.height });
        }
        if self.count.0 > self.count.1 {
            return bad("empty text count range");
        }
        if !(self.text_size.0 > 0.0 && self.text_size.0 <= self.text_size.1) {
            return bad("text size range must be positive and non-empty");
        }
        if !(self.aspect.0 >= 1.0 && self.aspect.0 <= self.aspect.1) {
            return bad("aspect range must start at 1 or more and be non-empty");
        }
        if self.families.is_empty() {
            return bad("no shape family selected");
        }
        if !(self.min_separation >= 0.0 && self.min_separation.is_finite()) {
            return bad("separation must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.ignore_probability) {
            return bad("ignore probability must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Independent stream for scene `index`: the base generator advanced by
/// `index` jumps of 2^128 steps.
fn scene_rng(seed: u64, index: u64) -> Xoshiro256StarStar {
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    for _ in 0..index {
        rng.jump();
    }
    rng
}

pub fn generate_scene(cfg: &SynthConfig, index: u64) -> Result<SceneAnnotation> {
    cfg.validate()?;
    let mut rng = scene_rng(cfg.seed, index);
    let n = rng.random_range(cfg.count.0..=cfg.count.1);
    let margin = (cfg.min_separation / 2.0).max(1.0);
    let (w, h) = (cfg.width as f64, cfg.height as f64);

    let mut texts: Vec<Polygon> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut placed = false;
        for _ in 0..MAX_ATTEMPTS {
            let family = cfg.families[rng.random_range(0..cfg.families.len())];
            let Some(shape) = sample_shape(&mut rng, cfg, family) else { continue };
            let Some(poly) = place(&mut rng, &shape, w, h, margin) else { continue };
            if separated(&poly, &texts, cfg.min_separation) {
                texts.push(poly);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::PlacementFailure { attempts: MAX_ATTEMPTS });
        }
    }

    let mut ignores = Vec::new();
    if rng.random_bool(cfg.ignore_probability) {
        let mut placed = false;
        for _ in 0..MAX_ATTEMPTS {
            let (a, b) = (rng.random_range(8.0..24.0), rng.random_range(8.0..24.0));
            let Ok(shape) = Polygon::rect(-a / 2.0, -b / 2.0, a / 2.0, b / 2.0) else { continue };
            let Some(poly) = place(&mut rng, &shape, w, h, margin) else { continue };
            if separated(&poly, &texts, cfg.min_separation.max(1.0)) {
                ignores.push(poly);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::PlacementFailure { attempts: MAX_ATTEMPTS });
        }
    }
    SceneAnnotation::new(cfg.width, cfg.height, texts, ignores)
}

/// A text shape centred on the origin, before rotation and placement.
fn sample_shape(rng: &mut Xoshiro256StarStar, cfg: &SynthConfig, family: ShapeFamily) -> Option<Polygon> {
    let th = rng.random_range(cfg.text_size.0..=cfg.text_size.1);
    let aspect = rng.random_range(cfg.aspect.0..=cfg.aspect.1);
    let len = th * aspect;
    let (hx, hy) = (len / 2.0, th / 2.0);
    match family {
        ShapeFamily::Rectangle | ShapeFamily::RotatedRect => Polygon::rect(-hx, -hy, hx, hy).ok(),
        ShapeFamily::CurvedBand => {
            // One arch of a cosine, bounded so the curvature radius stays
            // above the band height.
            let max_rel = (aspect / (PI * PI)).min(0.25);
            let amp = rng.random_range(0.05..=max_rel.max(0.05)) * len;
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let center = |t: f64| {
                let x = (t - 0.5) * len;
                let y = sign * amp * (PI * (t - 0.5)).cos();
                let slope = -sign * amp * PI / len * (PI * (t - 0.5)).sin();
                let n = (1.0 + slope * slope).sqrt();
                // Unit normal pointing to +y for a flat band.
                (x, y, -slope / n, 1.0 / n)
            };
            let mut pts = Vec::with_capacity(2 * BAND_SIDE);
            for i in 0..BAND_SIDE {
                let (x, y, nx, ny) = center(i as f64 / (BAND_SIDE - 1) as f64);
                pts.push(Point2::new(x - nx * hy, y - ny * hy).ok()?);
            }
            for i in (0..BAND_SIDE).rev() {
                let (x, y, nx, ny) = center(i as f64 / (BAND_SIDE - 1) as f64);
                pts.push(Point2::new(x + nx * hy, y + ny * hy).ok()?);
            }
            // Re-centre vertically on the bounding box.
            let poly = Polygon::new(pts).ok()?;
            let b = poly.bbox();
            poly.translated(0.0, -(b.min_y + b.max_y) / 2.0).ok()
        }
    }
    .and_then(|p| match family {
        ShapeFamily::Rectangle => Some(p),
        _ => p.transformed(rng.random_range(-PI / 3.0..PI / 3.0), 1.0, 0.0, 0.0).ok(),
    })
}

/// Random translation keeping `shape` at least `margin` inside the image.
fn place(rng: &mut Xoshiro256StarStar, shape: &Polygon, w: f64, h: f64, margin: f64) -> Option<Polygon> {
    let b = shape.bbox();
    let (x0, x1) = (margin - b.min_x, w - margin - b.max_x);
    let (y0, y1) = (margin - b.min_y, h - margin - b.max_y);
    if x1 <= x0 || y1 <= y0 {
        return None;
    }
    shape.translated(rng.random_range(x0..x1), rng.random_range(y0..y1)).ok()
}

fn separated(poly: &Polygon, others: &[Polygon], sep: f64) -> bool {
    let b = poly.bbox();
    others.iter().all(|o| {
        let c = o.bbox();
        let far = b.min_x - c.max_x >= sep
            || c.min_x - b.max_x >= sep
            || b.min_y - c.max_y >= sep
            || c.min_y - b.max_y >= sep;
        far || poly.distance_to(o) >= sep
    })
}

/// Ground-truth shrink probability and offset maps with optional Gaussian
/// noise of standard deviation `sigma`; the probability is clamped to
/// `[0, 1]` and the offset to `>= 0`.
pub fn oracle_predictions(
    ann: &SceneAnnotation,
    params: ShrinkParams,
    sigma: f64,
    seed: u64,
) -> Result<(FloatMap, FloatMap)> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise level must be >= 0, got {sigma}")));
    }
    let regions = shrink_regions(ann, params);
    let mut prob = regions.mask.to_float();
    let mut offset = gen_kept_offset_map(ann, &regions);
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
        for v in prob.values_mut() {
            *v = (*v + normal.sample(&mut rng)).clamp(0.0, 1.0);
        }
        for v in offset.values_mut() {
            *v = (*v + normal.sample(&mut rng)).max(0.0);
        }
    }
    Ok((prob, offset))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_count_is_empty() {
        let cfg = SynthConfig { count: (0, 0), ignore_probability: 0.0, ..SynthConfig::mixed(1) };
        let s = generate_scene(&cfg, 3).unwrap();
        assert!(s.texts.is_empty() && s.ignores.is_empty());
    }

    #[test]
    fn deterministic() {
        let cfg = SynthConfig::mixed(42);
        assert_eq!(generate_scene(&cfg, 5).unwrap(), generate_scene(&cfg, 5).unwrap());
        assert_ne!(generate_scene(&cfg, 5).unwrap(), generate_scene(&cfg, 6).unwrap());
    }

    #[test]
    fn curved_band_has_fourteen_vertices() {
        let cfg = SynthConfig { families: vec![ShapeFamily::CurvedBand], count: (3, 3), ..SynthConfig::mixed(9) };
        let s = generate_scene(&cfg, 0).unwrap();
        assert!(s.texts.iter().all(|t| t.len() == 14));
    }

    #[test]
    fn too_dense_fails() {
        let cfg = SynthConfig { width: 64, height: 64, count: (5, 5), ..SynthConfig::mixed(1) };
        assert!(matches!(generate_scene(&cfg, 0), Err(Error::PlacementFailure { .. })));
    }

    #[test]
    fn noiseless_oracle_is_exact() {
        let cfg = SynthConfig::mixed(3);
        let s = generate_scene(&cfg, 0).unwrap();
        let (p, o) = oracle_predictions(&s, ShrinkParams::default(), 0.0, 1).unwrap();
        let regions = shrink_regions(&s, ShrinkParams::default());
        assert_eq!(p, regions.mask.to_float());
        assert_eq!(o, gen_kept_offset_map(&s, &regions));
        let a = oracle_predictions(&s, ShrinkParams::default(), 0.1, 7).unwrap();
        let b = oracle_predictions(&s, ShrinkParams::default(), 0.1, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.0.values().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
