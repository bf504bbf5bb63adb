//! IoU matching and precision / recall / F-measure.

use serde::Serialize;

use crate::geometry::{intersection_area, polygon_iou, Polygon};
use crate::postproc::Detection;
use crate::{Error, Result};

impl AsRef<Polygon> for Detection {
    fn as_ref(&self) -> &Polygon {
        &self.contour
    }
}

impl AsRef<Polygon> for Polygon {
    fn as_ref(&self) -> &Polygon {
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatchConfig {
    iou_thresholds: Vec<f64>,
    ignore_overlap: f64,
}

impl MatchConfig {
    pub fn new(iou_thresholds: Vec<f64>, ignore_overlap: f64) -> Result<Self> {
        if iou_thresholds.is_empty() {
            return Err(Error::InvalidParameter("at least one IoU threshold is required".into()));
        }
        if let Some(t) = iou_thresholds.iter().find(|&&t| !(t > 0.0 && t <= 1.0)) {
            return Err(Error::InvalidParameter(format!("IoU threshold {t} outside (0, 1]")));
        }
        if iou_thresholds.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("IoU thresholds must be strictly increasing".into()));
        }
        if !(0.0..=1.0).contains(&ignore_overlap) {
            return Err(Error::InvalidParameter(format!("ignore overlap {ignore_overlap} outside [0, 1]")));
        }
        Ok(Self { iou_thresholds, ignore_overlap })
    }

    pub fn iou_thresholds(&self) -> &[f64] {
        &self.iou_thresholds
    }

    pub fn ignore_overlap(&self) -> f64 {
        self.ignore_overlap
    }
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self { iou_thresholds: vec![0.5, 0.75], ignore_overlap: 0.5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThresholdMetrics {
    pub threshold: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

impl ThresholdMetrics {
    /// Metrics from counts; an empty side counts as perfect.
    pub fn from_counts(threshold: f64, tp: usize, fp: usize, fn_: usize) -> Self {
        let precision = if tp + fp == 0 { 1.0 } else { tp as f64 / (tp + fp) as f64 };
        let recall = if tp + fn_ == 0 { 1.0 } else { tp as f64 / (tp + fn_) as f64 };
        let f_measure = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        Self { threshold, tp, fp, fn_, precision, recall, f_measure }
    }
}

/// One accepted detection / ground-truth pairing. `image` is the position of
/// the source report after aggregation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MatchPair {
    pub image: usize,
    pub det: usize,
    pub gt: usize,
    pub iou: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub per_threshold: Vec<ThresholdMetrics>,
    pub matches: Vec<MatchPair>,
    /// Detections dropped for lying in do-not-care regions.
    pub ignored: usize,
}

impl EvalReport {
    pub fn at(&self, threshold: f64) -> Option<&ThresholdMetrics> {
        self.per_threshold.iter().find(|m| m.threshold == threshold)
    }
}

/// Greedy one-to-one matching by descending IoU. Detections overlapping
/// do-not-care regions by more than `ignore_overlap` of their own area are
/// removed before counting.
pub fn match_detections<D: AsRef<Polygon>>(
    dets: &[D],
    gts: &[Polygon],
    ignores: &[Polygon],
    cfg: &MatchConfig,
) -> EvalReport {
    let kept: Vec<usize> = (0..dets.len())
        .filter(|&i| {
            let d = dets[i].as_ref();
            let limit = cfg.ignore_overlap * d.area();
            !ignores.iter().any(|g| intersection_area(d, g) > limit)
        })
        .collect();
    let ignored = dets.len() - kept.len();

    let mut pairs = Vec::new();
    for &i in &kept {
        for (j, g) in gts.iter().enumerate() {
            let iou = polygon_iou(dets[i].as_ref(), g);
            if iou > 0.0 {
                pairs.push(MatchPair { image: 0, det: i, gt: j, iou });
            }
        }
    }
    pairs.sort_by(|a, b| b.iou.total_cmp(&a.iou).then(a.det.cmp(&b.det)).then(a.gt.cmp(&b.gt)));
    let mut det_used = vec![false; dets.len()];
    let mut gt_used = vec![false; gts.len()];
    let mut matches = Vec::new();
    for p in pairs {
        if !det_used[p.det] && !gt_used[p.gt] {
            det_used[p.det] = true;
            gt_used[p.gt] = true;
            matches.push(p);
        }
    }

    let per_threshold = cfg
        .iou_thresholds
        .iter()
        .map(|&t| {
            let tp = matches.iter().filter(|m| m.iou >= t).count();
            ThresholdMetrics::from_counts(t, tp, kept.len() - tp, gts.len() - tp)
        })
        .collect();
    EvalReport { per_threshold, matches, ignored }
}

/// Micro-averaged dataset metrics from per-image reports.
pub fn aggregate(reports: &[EvalReport]) -> Result<EvalReport> {
    let first = reports.first().ok_or_else(|| Error::InvalidParameter("nothing to aggregate".into()))?;
    let thresholds: Vec<f64> = first.per_threshold.iter().map(|m| m.threshold).collect();
    let mut counts = vec![(0usize, 0usize, 0usize); thresholds.len()];
    let mut matches = Vec::new();
    let mut ignored = 0;
    for (image, r) in reports.iter().enumerate() {
        if r.per_threshold.len() != thresholds.len()
            || r.per_threshold.iter().zip(&thresholds).any(|(m, &t)| m.threshold != t)
        {
            return Err(Error::ThresholdMismatch);
        }
        for (c, m) in counts.iter_mut().zip(&r.per_threshold) {
            c.0 += m.tp;
            c.1 += m.fp;
            c.2 += m.fn_;
        }
        matches.extend(r.matches.iter().map(|m| MatchPair { image, ..*m }));
        ignored += r.ignored;
    }
    let per_threshold = thresholds
        .iter()
        .zip(counts)
        .map(|(&t, (tp, fp, fn_))| ThresholdMetrics::from_counts(t, tp, fp, fn_))
        .collect();
    Ok(EvalReport { per_threshold, matches, ignored })
}
