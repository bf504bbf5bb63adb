//! Robustness of the two extension strategies to shrink-mask prediction error.

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use rand_xoshiro::Xoshiro256StarStar;
use serde::Serialize;

use super::{adaptive_offset, prepared_contour, reconstruct, reconstruct_with_delta_map, ExtendMode, PostprocConfig};
use crate::geometry::polygon_iou;
use crate::labelgen::{gen_kept_offset_map, shrink_regions, SceneAnnotation};
use crate::raster::{connected_components, distance_transform, BitMask, Connectivity, FloatMap};
use crate::{Error, Result, ShrinkParams};

/// Dilates (`k > 0`) or erodes (`k < 0`) `mask` with a Euclidean disc of
/// radius `|k|`. Erosion treats everything beyond the image as unset.
pub fn perturb_mask(mask: &BitMask, k: i32) -> BitMask {
    let (w, h) = (mask.width(), mask.height());
    if k == 0 {
        return mask.clone();
    }
    let r = k.unsigned_abs() as f64;
    if k < 0 {
        let d = distance_transform(mask);
        return d.threshold(r + 1e-9);
    }
    // Distance to the nearest set pixel, padded so the image border does
    // not act as a source.
    let pad = k as usize + 1;
    let (pw, ph) = (w + 2 * pad, h + 2 * pad);
    let mut inv = BitMask::from_bits(pw, ph, vec![true; pw * ph]).expect("non-empty grid");
    for i in 0..h {
        for j in 0..w {
            inv.set(i + pad, j + pad, !mask.get(i, j));
        }
    }
    let d = distance_transform(&inv);
    let mut out = BitMask::new(w, h).expect("non-empty grid");
    for i in 0..h {
        for j in 0..w {
            out.set(i, j, d.get(i + pad, j + pad) <= r + 1e-9);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StudyConfig {
    pub shrink: ShrinkParams,
    /// Base post-processing settings; the extension mode is set per run.
    pub postproc: PostprocConfig,
    /// Standard deviation of Gaussian noise added to the perturbed
    /// probability map (clamped to `[0, 1]`).
    pub noise_sigma: f64,
    pub noise_seed: u64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self { shrink: ShrinkParams::default(), postproc: PostprocConfig::default(), noise_sigma: 0.0, noise_seed: 0 }
    }
}

/// Mean best IoU against ground-truth texts for one perturbation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StudyRow {
    pub k: i32,
    pub adaptive_mean_iou: f64,
    pub fixed_mean_iou: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudyReport {
    pub scenes: usize,
    pub texts: usize,
    pub rows: Vec<StudyRow>,
}

/// Per-scene IoU sums, `sums[i] = (adaptive, fixed)` for `k_values[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneStudy {
    pub texts: usize,
    pub sums: Vec<(f64, f64)>,
}

/// Studies one scene. The adaptive run always reads the unperturbed offset
/// labels; the fixed run uses a per-component coefficient chosen so that both
/// strategies extend the unperturbed mask by the same distance. `index`
/// selects the noise stream.
pub fn study_scene(scene: &SceneAnnotation, index: u64, k_values: &[i32], cfg: &StudyConfig) -> Result<SceneStudy> {
    let mut noise = if cfg.noise_sigma > 0.0 {
        let n = Normal::new(0.0, cfg.noise_sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let seed = cfg.noise_seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        Some((n, Xoshiro256StarStar::seed_from_u64(seed)))
    } else if cfg.noise_sigma == 0.0 {
        None
    } else {
        return Err(Error::InvalidParameter(format!("noise level must be >= 0, got {}", cfg.noise_sigma)));
    };
    let regions = shrink_regions(scene, cfg.shrink);
    let offset = gen_kept_offset_map(scene, &regions);
    let delta = calibrate(&regions.mask, &offset, k_values, cfg)?;

    let adaptive = PostprocConfig { extend_mode: ExtendMode::Adaptive, ..cfg.postproc };
    let fixed = PostprocConfig { extend_mode: ExtendMode::Fixed, ..cfg.postproc };
    let mut sums = Vec::with_capacity(k_values.len());
    for &k in k_values {
        let mut prob = perturb_mask(&regions.mask, k).to_float();
        if let Some((n, rng)) = noise.as_mut() {
            for v in prob.values_mut() {
                *v = (*v + n.sample(rng)).clamp(0.0, 1.0);
            }
        }
        let (da, _) = reconstruct(&prob, &offset, &adaptive)?;
        let (df, _) = reconstruct_with_delta_map(&prob, &offset, Some(&delta), &fixed)?;
        let best =
            |dets: &[super::Detection], t| dets.iter().map(|d| polygon_iou(&d.contour, t)).fold(0.0f64, f64::max);
        let (mut sa, mut sf) = (0.0, 0.0);
        for t in &scene.texts {
            sa += best(&da, t);
            sf += best(&df, t);
        }
        sums.push((sa, sf));
    }
    Ok(SceneStudy { texts: scene.texts.len(), sums })
}

/// Paints each unperturbed component's matching coefficient over its
/// neighbourhood, wide enough to cover every perturbation in the study.
fn calibrate(mask: &BitMask, offset: &FloatMap, k_values: &[i32], cfg: &StudyConfig) -> Result<FloatMap> {
    let reach = k_values.iter().map(|k| k.abs()).max().unwrap_or(0) + 1;
    let labels = connected_components(mask, Connectivity::Eight);
    let mut groups = vec![Vec::new(); labels.count() as usize];
    for (k, &l) in labels.labels().iter().enumerate() {
        if l > 0 {
            groups[l as usize - 1].push(k);
        }
    }
    let mut delta = FloatMap::new(mask.width(), mask.height())?;
    for (idx, pixels) in groups.iter().enumerate() {
        let id = idx as u32 + 1;
        let contour = prepared_contour(&labels, id, cfg.postproc.simplify_tolerance)?;
        let o = adaptive_offset(&labels, id, pixels, offset, cfg.postproc.offset_aggregation);
        let d = o * contour.perimeter() / contour.area();
        if !(d > 0.0) {
            continue;
        }
        // Dilate on a crop around the component only.
        let st = labels.stats(id)?;
        let r = reach as usize;
        let (r0, c0) = (st.min_row.saturating_sub(r), st.min_col.saturating_sub(r));
        let r1 = (st.max_row + r + 1).min(mask.height());
        let c1 = (st.max_col + r + 1).min(mask.width());
        let mut crop = BitMask::new(c1 - c0, r1 - r0)?;
        for i in r0..r1 {
            for j in c0..c1 {
                crop.set(i - r0, j - c0, labels.get(i, j) == id);
            }
        }
        let near = perturb_mask(&crop, reach);
        for i in r0..r1 {
            for j in c0..c1 {
                if near.get(i - r0, j - c0) {
                    delta.set(i, j, d);
                }
            }
        }
    }
    Ok(delta)
}

impl StudyReport {
    /// Reduces per-scene results in scene order.
    pub fn from_scenes(k_values: &[i32], scenes: &[SceneStudy]) -> Self {
        let texts: usize = scenes.iter().map(|s| s.texts).sum();
        let rows = k_values
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                let (sa, sf) = scenes.iter().fold((0.0, 0.0), |(a, f), s| (a + s.sums[i].0, f + s.sums[i].1));
                let n = texts.max(1) as f64;
                StudyRow { k, adaptive_mean_iou: sa / n, fixed_mean_iou: sf / n }
            })
            .collect();
        Self { scenes: scenes.len(), texts, rows }
    }

    pub fn row(&self, k: i32) -> Option<&StudyRow> {
        self.rows.iter().find(|r| r.k == k)
    }
}

pub fn run_perturbation_study(scenes: &[SceneAnnotation], k_values: &[i32], cfg: &StudyConfig) -> Result<StudyReport> {
    if scenes.is_empty() {
        return Err(Error::InvalidParameter("perturbation study needs at least one scene".into()));
    }
    let per =
        scenes.iter().enumerate().map(|(i, s)| study_scene(s, i as u64, k_values, cfg)).collect::<Result<Vec<_>>>()?;
    Ok(StudyReport::from_scenes(k_values, &per))
}
