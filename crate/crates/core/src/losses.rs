//! Dice loss with hard example mining, ratio losses and the weighted total,
//! each with its analytic gradient.

use rand::{RngExt, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

use crate::labelgen::{LabelMaps, SpwValidRegion};
use crate::raster::{BitMask, FloatMap};
use crate::{Error, Result};

/// Lower clamp applied to both operands of the ratio loss.
pub const RATIO_EPS: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
}

impl LossWeights {
    pub fn new(lambda1: f64, lambda2: f64, lambda3: f64) -> Result<Self> {
        for l in [lambda1, lambda2, lambda3] {
            if !(l.is_finite() && l >= 0.0) {
                return Err(Error::InvalidParameter(format!("loss weight must be >= 0, got {l}")));
            }
        }
        Ok(Self { lambda1, lambda2, lambda3 })
    }

    pub fn combine(&self, l_sm: f64, l_oa: f64, l_spw: f64) -> f64 {
        self.lambda1 * l_sm + self.lambda2 * l_oa + self.lambda3 * l_spw
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { lambda1: 1.0, lambda2: 0.25, lambda3: 0.25 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OhemConfig {
    negative_ratio: f64,
    min_negatives: usize,
}

impl OhemConfig {
    pub fn new(negative_ratio: f64, min_negatives: usize) -> Result<Self> {
        if !(negative_ratio.is_finite() && negative_ratio > 0.0) {
            return Err(Error::InvalidParameter(format!("negative ratio must be positive, got {negative_ratio}")));
        }
        Ok(Self { negative_ratio, min_negatives })
    }

    pub fn negative_ratio(&self) -> f64 {
        self.negative_ratio
    }

    pub fn min_negatives(&self) -> usize {
        self.min_negatives
    }

    /// Number of negatives kept for `positives` positives out of `available`.
    pub fn negatives_for(&self, positives: usize, available: usize) -> usize {
        let k =
            if positives == 0 { self.min_negatives } else { (self.negative_ratio * positives as f64).floor() as usize };
        k.min(available)
    }
}

impl Default for OhemConfig {
    fn default() -> Self {
        Self { negative_ratio: 3.0, min_negatives: 256 }
    }
}

/// Loss values and gradients of the weighted total with respect to each
/// prediction map.
#[derive(Clone, Debug)]
pub struct LossReport {
    pub l_sm: f64,
    pub l_oa: f64,
    pub l_spw: f64,
    pub total: f64,
    pub grad_sm: FloatMap,
    pub grad_oa: FloatMap,
    pub grad_spw: FloatMap,
}

/// `1 - (2·Σpg + 1) / (Σp + Σg + 1)` over valid pixels.
pub fn dice_loss(pred: &FloatMap, gt: &BitMask, valid: &BitMask) -> Result<(f64, FloatMap)> {
    pred.same_shape(gt)?;
    pred.same_shape(valid)?;
    let (mut inter, mut sp, mut sg) = (0.0, 0.0, 0.0);
    for ((&p, &g), &v) in pred.values().iter().zip(gt.bits()).zip(valid.bits()) {
        if v {
            let g = g as u8 as f64;
            inter += p * g;
            sp += p;
            sg += g;
        }
    }
    let num = 2.0 * inter + 1.0;
    let den = sp + sg + 1.0;
    let loss = 1.0 - num / den;
    let mut grad = FloatMap::new(pred.width(), pred.height())?;
    for ((d, &g), &v) in grad.values_mut().iter_mut().zip(gt.bits()).zip(valid.bits()) {
        if v {
            let g = g as u8 as f64;
            *d = -(2.0 * g * den - num) / (den * den);
        }
    }
    Ok((loss, grad))
}

/// All non-ignored positives plus the hardest non-ignored negatives (highest
/// prediction, ties broken by row-major index).
pub fn ohem_select(pred: &FloatMap, gt: &BitMask, ignore: &BitMask, cfg: OhemConfig) -> Result<BitMask> {
    pred.same_shape(gt)?;
    pred.same_shape(ignore)?;
    let mut valid = BitMask::new(pred.width(), pred.height())?;
    let mut negatives = Vec::new();
    let mut positives = 0usize;
    for (k, (&g, &ig)) in gt.bits().iter().zip(ignore.bits()).enumerate() {
        if ig {
            continue;
        }
        if g {
            positives += 1;
            valid.set(k / pred.width(), k % pred.width(), true);
        } else {
            negatives.push(k);
        }
    }
    let keep = cfg.negatives_for(positives, negatives.len());
    let vals = pred.values();
    negatives.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
    for &k in &negatives[..keep] {
        valid.set(k / pred.width(), k % pred.width(), true);
    }
    Ok(valid)
}

/// `log(max(p, p_hat) / min(p, p_hat))` and its derivative in `p_hat`
/// (zero at equality).
pub fn ratio_loss(p: f64, p_hat: f64) -> Result<(f64, f64)> {
    if !(p.is_finite() && p_hat.is_finite() && p > 0.0 && p_hat > 0.0) {
        return Err(Error::NonPositiveInput { p, p_hat });
    }
    let loss = (p_hat.ln() - p.ln()).abs();
    let d = if p_hat > p {
        1.0 / p_hat
    } else if p_hat < p {
        -1.0 / p_hat
    } else {
        0.0
    };
    Ok((loss, d))
}

/// Mean clamped ratio loss over `region`; zero (with zero gradient) when the
/// region is empty.
fn region_ratio_loss(pred: &FloatMap, gt: &FloatMap, region: &BitMask) -> Result<(f64, FloatMap)> {
    pred.same_shape(gt)?;
    pred.same_shape(region)?;
    let mut grad = FloatMap::new(pred.width(), pred.height())?;
    let n = region.count();
    if n == 0 {
        return Ok((0.0, grad));
    }
    let inv = 1.0 / n as f64;
    let mut sum = 0.0;
    for (k, &r) in region.bits().iter().enumerate() {
        if !r {
            continue;
        }
        let p_hat = pred.values()[k];
        let (l, d) = ratio_loss(gt.values()[k].max(RATIO_EPS), p_hat.max(RATIO_EPS))?;
        sum += l;
        // The clamp is flat below RATIO_EPS.
        grad.values_mut()[k] = if p_hat > RATIO_EPS { d * inv } else { 0.0 };
    }
    Ok((sum * inv, grad))
}

pub fn offset_loss(pred: &FloatMap, gt: &FloatMap, region: &BitMask) -> Result<(f64, FloatMap)> {
    region_ratio_loss(pred, gt, region)
}

pub fn spw_loss(pred: &FloatMap, gt: &FloatMap, region: &BitMask) -> Result<(f64, FloatMap)> {
    region_ratio_loss(pred, gt, region)
}

/// Predicted maps for one image.
#[derive(Clone, Copy, Debug)]
pub struct Predictions<'a> {
    pub shrink: &'a FloatMap,
    pub offset: &'a FloatMap,
    pub spw: &'a FloatMap,
}

pub fn total_loss(
    pred: Predictions<'_>,
    labels: &LabelMaps,
    spw_region: SpwValidRegion,
    weights: LossWeights,
    ohem: OhemConfig,
) -> Result<LossReport> {
    let valid = ohem_select(pred.shrink, &labels.shrink, &labels.ignore, ohem)?;
    let (l_sm, mut grad_sm) = dice_loss(pred.shrink, &labels.shrink, &valid)?;
    let (l_oa, mut grad_oa) = offset_loss(pred.offset, &labels.offset, &labels.offset_region())?;
    let (l_spw, mut grad_spw) = spw_loss(pred.spw, &labels.spw, &labels.spw_region(spw_region))?;
    for (g, l) in [(&mut grad_sm, weights.lambda1), (&mut grad_oa, weights.lambda2), (&mut grad_spw, weights.lambda3)] {
        g.values_mut().iter_mut().for_each(|v| *v *= l);
    }
    Ok(LossReport { l_sm, l_oa, l_spw, total: weights.combine(l_sm, l_oa, l_spw), grad_sm, grad_oa, grad_spw })
}

/// Largest relative disagreement between `analytic` and central differences
/// of `f` at `x` with step `h`. Relative errors use a floor of 1e-8 on the
/// magnitude so exact zeros compare cleanly.
pub fn finite_difference_error(f: impl Fn(&FloatMap) -> f64, x: &FloatMap, analytic: &FloatMap, h: f64) -> f64 {
    let mut probe = x.clone();
    let mut worst = 0.0f64;
    for k in 0..x.values().len() {
        let orig = x.values()[k];
        probe.values_mut()[k] = orig + h;
        let up = f(&probe);
        probe.values_mut()[k] = orig - h;
        let down = f(&probe);
        probe.values_mut()[k] = orig;
        let numeric = (up - down) / (2.0 * h);
        let a = analytic.values()[k];
        let scale = a.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((a - numeric).abs() / scale);
    }
    worst
}

/// Worst finite-difference error per loss over randomized instances.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GradCheckSummary {
    pub trials: usize,
    pub dice: f64,
    pub offset: f64,
    pub spw: f64,
}

impl GradCheckSummary {
    pub fn worst(&self) -> f64 {
        self.dice.max(self.offset).max(self.spw)
    }
}

pub const GRADCHECK_STEP: f64 = 1e-5;

/// Runs `trials` random `size x size` instances per loss.
pub fn gradient_check(trials: usize, size: usize, seed: u64) -> Result<GradCheckSummary> {
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let mut out = GradCheckSummary { trials, ..Default::default() };
    let n = size * size;
    let h = GRADCHECK_STEP;
    for _ in 0..trials {
        let pred = FloatMap::from_values(size, size, (0..n).map(|_| rng.random_range(0.0..1.0)).collect())?;
        let gt = BitMask::from_bits(size, size, (0..n).map(|_| rng.random_bool(0.4)).collect())?;
        let valid = BitMask::from_bits(size, size, (0..n).map(|_| rng.random_bool(0.8)).collect())?;
        let (_, g) = dice_loss(&pred, &gt, &valid)?;
        let f = |x: &FloatMap| dice_loss(x, &gt, &valid).map(|r| r.0).unwrap_or(f64::NAN);
        out.dice = out.dice.max(finite_difference_error(f, &pred, &g, h));

        // Keep predictions well clear of the clamp and of the targets so the
        // kinks of |log| stay outside the difference stencil.
        let region = BitMask::from_bits(size, size, (0..n).map(|_| rng.random_bool(0.7)).collect())?;
        for (scale, slot) in [(20.0, &mut out.offset), (1.0, &mut out.spw)] {
            let gt: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0) * scale).collect();
            let pred: Vec<f64> = gt
                .iter()
                .map(|&g| {
                    let r: f64 = rng.random_range(1.05..2.0);
                    if rng.random_bool(0.5) {
                        g * r
                    } else {
                        g / r
                    }
                })
                .collect();
            let gt = FloatMap::from_values(size, size, gt)?;
            let pred = FloatMap::from_values(size, size, pred)?;
            let (_, g) = region_ratio_loss(&pred, &gt, &region)?;
            let f = |x: &FloatMap| region_ratio_loss(x, &gt, &region).map(|r| r.0).unwrap_or(f64::NAN);
            *slot = slot.max(finite_difference_error(f, &pred, &g, h));
        }
    }
    Ok(out)
}
