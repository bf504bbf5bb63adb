//! Text contour reconstruction from predicted shrink-mask and offset maps.

mod simplify;
mod study;

pub use study::{perturb_mask, run_perturbation_study, study_scene, SceneStudy, StudyConfig, StudyReport, StudyRow};

use serde::Serialize;
use web_time::Instant;

use crate::geometry::{clip_to_rect, fixed_offset, offset_polygon, FixedExtendParams, Polygon};
use crate::raster::{connected_components, trace_contour, ComponentLabels, Connectivity, FloatMap};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtendMode {
    #[default]
    Adaptive,
    Fixed,
}

impl ExtendMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Adaptive => "adaptive",
            Self::Fixed => "fixed",
        }
    }
}

impl std::str::FromStr for ExtendMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adaptive" => Ok(Self::Adaptive),
            "fixed" => Ok(Self::Fixed),
            _ => Err(Error::InvalidParameter(format!("unknown extend mode {s:?}"))),
        }
    }
}

/// How per-pixel offset predictions are reduced to one extension distance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OffsetAggregation {
    /// Mean over the component's outermost pixel ring.
    #[default]
    ContourBandMean,
    /// Mean over every component pixel.
    RegionMean,
}

impl OffsetAggregation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::ContourBandMean => "contour-band-mean",
            Self::RegionMean => "region-mean",
        }
    }
}

impl std::str::FromStr for OffsetAggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "contour-band-mean" => Ok(Self::ContourBandMean),
            "region-mean" => Ok(Self::RegionMean),
            _ => Err(Error::InvalidParameter(format!("unknown offset aggregation {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PostprocConfig {
    pub binarize_threshold: f64,
    /// Minimum component size in pixels.
    pub min_area: f64,
    pub min_score: f64,
    pub extend_mode: ExtendMode,
    pub delta_t: f64,
    pub offset_aggregation: OffsetAggregation,
    /// Douglas-Peucker tolerance (px) applied to traced contours; 0 disables.
    pub simplify_tolerance: f64,
}

impl Default for PostprocConfig {
    fn default() -> Self {
        Self {
            binarize_threshold: 0.3,
            min_area: 16.0,
            min_score: 0.5,
            extend_mode: ExtendMode::Adaptive,
            delta_t: 1.5,
            offset_aggregation: OffsetAggregation::ContourBandMean,
            simplify_tolerance: 1.0,
        }
    }
}

impl PostprocConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.binarize_threshold > 0.0 && self.binarize_threshold < 1.0) {
            return bad(format!("binarize threshold must lie in (0, 1), got {}", self.binarize_threshold));
        }
        if !(self.min_score >= 0.0 && self.min_score <= 1.0) {
            return bad(format!("min score must lie in [0, 1], got {}", self.min_score));
        }
        if !(self.min_area >= 0.0 && self.min_area.is_finite()) {
            return bad(format!("min area must be non-negative, got {}", self.min_area));
        }
        if !(self.simplify_tolerance >= 0.0 && self.simplify_tolerance.is_finite()) {
            return bad(format!("simplify tolerance must be non-negative, got {}", self.simplify_tolerance));
        }
        if self.extend_mode == ExtendMode::Fixed && !(self.delta_t > 0.0 && self.delta_t.is_finite()) {
            return bad(format!("fixed extension needs delta_t > 0, got {}", self.delta_t));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Detection {
    pub contour: Polygon,
    pub score: f64,
    pub shrink_contour: Polygon,
    pub offset_used: f64,
    pub mode: ExtendMode,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct TimingBreakdown {
    pub binarize_ms: f64,
    pub components_ms: f64,
    pub trace_ms: f64,
    pub extend_ms: f64,
    pub total_ms: f64,
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

pub fn reconstruct(
    shrink_prob: &FloatMap,
    offset_pred: &FloatMap,
    cfg: &PostprocConfig,
) -> Result<(Vec<Detection>, TimingBreakdown)> {
    reconstruct_with_delta_map(shrink_prob, offset_pred, None, cfg)
}

/// As [`reconstruct`]; in fixed mode a component's coefficient is taken from
/// the mean of the positive `delta_map` values under it when any exist, else
/// from `cfg.delta_t`.
pub fn reconstruct_with_delta_map(
    shrink_prob: &FloatMap,
    offset_pred: &FloatMap,
    delta_map: Option<&FloatMap>,
    cfg: &PostprocConfig,
) -> Result<(Vec<Detection>, TimingBreakdown)> {
    cfg.validate()?;
    shrink_prob.same_shape(offset_pred)?;
    if let Some(d) = delta_map {
        shrink_prob.same_shape(d)?;
    }
    let start = Instant::now();
    let mut timing = TimingBreakdown::default();

    let t = Instant::now();
    let mask = shrink_prob.threshold(cfg.binarize_threshold);
    timing.binarize_ms = ms_since(t);

    let t = Instant::now();
    let labels = connected_components(&mask, Connectivity::Eight);
    let groups = component_pixels(&labels);
    timing.components_ms = ms_since(t);

    let (w, h) = (shrink_prob.width(), shrink_prob.height());
    let mut dets = Vec::new();
    for (idx, pixels) in groups.iter().enumerate() {
        let id = idx as u32 + 1;
        if (pixels.len() as f64) < cfg.min_area {
            continue;
        }
        let score = pixels.iter().map(|&k| shrink_prob.values()[k]).sum::<f64>() / pixels.len() as f64;
        if score < cfg.min_score {
            continue;
        }

        let t = Instant::now();
        let shrink_contour = prepared_contour(&labels, id, cfg.simplify_tolerance)?;
        timing.trace_ms += ms_since(t);

        let t = Instant::now();
        let offset = match cfg.extend_mode {
            ExtendMode::Adaptive => adaptive_offset(&labels, id, pixels, offset_pred, cfg.offset_aggregation),
            ExtendMode::Fixed => {
                let delta = delta_map.and_then(|d| positive_mean(d, pixels)).unwrap_or(cfg.delta_t);
                fixed_offset(&shrink_contour, FixedExtendParams::new(delta)?)
            }
        };
        let contour = extend(&shrink_contour, offset, w, h);
        timing.extend_ms += ms_since(t);

        match contour {
            Some(contour) => {
                dets.push(Detection { contour, score, shrink_contour, offset_used: offset, mode: cfg.extend_mode })
            }
            None => log::warn!("component {id}: expansion by {offset:.3} px produced no valid polygon; dropped"),
        }
    }
    dets.sort_by(|a, b| b.score.total_cmp(&a.score));
    timing.total_ms = ms_since(start);
    Ok((dets, timing))
}

/// Pixel indices of every component, in component order.
fn component_pixels(labels: &ComponentLabels) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); labels.count() as usize];
    for (k, &l) in labels.labels().iter().enumerate() {
        if l > 0 {
            groups[l as usize - 1].push(k);
        }
    }
    groups
}

/// Traced contour of a component, simplified when that stays valid.
pub fn prepared_contour(labels: &ComponentLabels, id: u32, tolerance: f64) -> Result<Polygon> {
    let raw = trace_contour(labels, id)?;
    Ok(simplify::simplify(&raw, tolerance).unwrap_or(raw))
}

/// Extension distance from the offset map. Ring pixels sit half a pixel
/// inside the traced crack contour, so that half pixel is taken off.
fn adaptive_offset(
    labels: &ComponentLabels,
    id: u32,
    pixels: &[usize],
    offset_pred: &FloatMap,
    aggregation: OffsetAggregation,
) -> f64 {
    let w = labels.width();
    let h = labels.height();
    let vals = offset_pred.values();
    let on_ring = |k: usize| {
        let (r, c) = (k / w, k % w);
        r == 0
            || c == 0
            || r + 1 == h
            || c + 1 == w
            || labels.get(r - 1, c) != id
            || labels.get(r + 1, c) != id
            || labels.get(r, c - 1) != id
            || labels.get(r, c + 1) != id
    };
    let (sum, n) = pixels
        .iter()
        .filter(|&&k| aggregation == OffsetAggregation::RegionMean || on_ring(k))
        .fold((0.0, 0usize), |(s, n), &k| (s + vals[k], n + 1));
    (sum / n as f64 - 0.5).max(0.0)
}

fn positive_mean(map: &FloatMap, pixels: &[usize]) -> Option<f64> {
    let (s, n) =
        pixels.iter().map(|&k| map.values()[k]).filter(|&v| v > 0.0).fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Expands and clips to the image, keeping the largest piece.
fn extend(contour: &Polygon, offset: f64, width: usize, height: usize) -> Option<Polygon> {
    let grown = offset_polygon(contour, offset).ok()?.into_iter().next()?;
    clip_to_rect(&grown, width as f64, height as f64).into_iter().next()
}
