//! WebAssembly bindings for the static demo page in `www/`.
//!
//! One [`Demo`] holds a synthetic scene and answers three kinds of request:
//! supervision map previews, the shrink-mask perturbation explorer and an
//! anchor probe that compares SPW with plain window IoU.

use shrinkmask::geometry::polygon_iou;
use shrinkmask::labelgen::{gen_iou_map, gen_kept_offset_map, gen_spw_map, shrink_regions, SceneAnnotation};
use shrinkmask::postproc::{perturb_mask, reconstruct, Detection, ExtendMode, PostprocConfig};
use shrinkmask::render::{Canvas, ADAPTIVE, FIXED, GROUND_TRUTH, IGNORED};
use shrinkmask::synth::{generate_scene, SynthConfig};
use shrinkmask::{BitMask, FloatMap, Polygon, ShrinkParams};
use wasm_bindgen::prelude::*;

fn js(e: shrinkmask::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Demo {
    scene: SceneAnnotation,
    shrink: BitMask,
    offset: FloatMap,
    // SPW and IoU maps for the last probed window size.
    windows: Option<(usize, FloatMap, FloatMap)>,
    adaptive_iou: f64,
    fixed_iou: f64,
}

#[wasm_bindgen]
impl Demo {
    /// Scene `index` of the mixed synthetic set seeded with `seed`.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, index: u32) -> Result<Demo, JsError> {
        let scene = generate_scene(&SynthConfig::mixed(seed as u64), index as u64).map_err(js)?;
        let mut demo = Demo {
            shrink: BitMask::new(scene.width, scene.height).map_err(js)?,
            offset: FloatMap::new(scene.width, scene.height).map_err(js)?,
            scene,
            windows: None,
            adaptive_iou: 0.0,
            fixed_iou: 0.0,
        };
        demo.set_shrink_ratio(ShrinkParams::default().delta_s())?;
        Ok(demo)
    }

    pub fn width(&self) -> usize {
        self.scene.width
    }

    pub fn height(&self) -> usize {
        self.scene.height
    }

    pub fn texts(&self) -> usize {
        self.scene.texts.len()
    }

    /// Regenerates the shrink and offset labels for a new shrink ratio.
    pub fn set_shrink_ratio(&mut self, delta_s: f64) -> Result<(), JsError> {
        let regions = shrink_regions(&self.scene, ShrinkParams::new(delta_s).map_err(js)?);
        self.offset = gen_kept_offset_map(&self.scene, &regions);
        self.shrink = regions.mask;
        self.windows = None;
        Ok(())
    }

    /// RGBA preview of one supervision map (`shrink`, `offset`, `spw` or
    /// `iou`) with the annotation outlines on top.
    pub fn label_view(&mut self, kind: &str, window: usize) -> Result<Vec<u8>, JsError> {
        let mut canvas = match kind {
            "shrink" => Canvas::heatmap(&self.shrink.to_float(), 0.0, 1.0),
            "offset" => {
                let hi = self.offset.values().iter().copied().fold(0.0, f64::max);
                Canvas::heatmap(&self.offset, 0.0, hi)
            }
            "spw" => Canvas::heatmap(self.window_maps(window)?.0, 0.0, 1.0),
            "iou" => Canvas::heatmap(self.window_maps(window)?.1, 0.0, 1.0),
            _ => return Err(JsError::new(&format!("unknown map {kind:?}"))),
        };
        self.outline(&mut canvas);
        Ok(canvas.into_rgba())
    }

    /// Dilates (`k > 0`) or erodes (`k < 0`) the shrink mask by `k` px and
    /// reconstructs with both strategies. The fixed run uses coefficient
    /// `delta_t`. Mean best IoUs are available afterwards.
    pub fn perturb(&mut self, k: i32, delta_t: f64) -> Result<Vec<u8>, JsError> {
        let mask = perturb_mask(&self.shrink, k);
        let prob = mask.to_float();
        let base = PostprocConfig { delta_t, ..PostprocConfig::default() };
        let run = |extend_mode| reconstruct(&prob, &self.offset, &PostprocConfig { extend_mode, ..base });
        let (adaptive, _) = run(ExtendMode::Adaptive).map_err(js)?;
        let (fixed, _) = run(ExtendMode::Fixed).map_err(js)?;
        self.adaptive_iou = mean_best_iou(&adaptive, &self.scene.texts);
        self.fixed_iou = mean_best_iou(&fixed, &self.scene.texts);

        let mut canvas = Canvas::new(self.scene.width, self.scene.height, [24, 24, 28]);
        canvas.fill_mask(&mask, [255, 255, 255], 0.25);
        self.outline(&mut canvas);
        for d in &fixed {
            canvas.draw_polygon(&d.contour, FIXED);
        }
        for d in &adaptive {
            canvas.draw_polygon(&d.contour, ADAPTIVE);
        }
        Ok(canvas.into_rgba())
    }

    pub fn adaptive_iou(&self) -> f64 {
        self.adaptive_iou
    }

    pub fn fixed_iou(&self) -> f64 {
        self.fixed_iou
    }

    /// `[spw, iou]` for the anchor of side `window` centred on a pixel.
    pub fn probe(&mut self, row: usize, col: usize, window: usize) -> Result<Vec<f64>, JsError> {
        if row >= self.scene.height || col >= self.scene.width {
            return Err(JsError::new(&format!("pixel ({row}, {col}) is outside the image")));
        }
        let (spw, iou) = self.window_maps(window)?;
        Ok(vec![spw.get(row, col), iou.get(row, col)])
    }
}

impl Demo {
    fn window_maps(&mut self, window: usize) -> Result<(&FloatMap, &FloatMap), JsError> {
        if self.windows.as_ref().is_none_or(|(w, _, _)| *w != window) {
            let spw = gen_spw_map(&self.scene, &self.shrink, window).map_err(js)?;
            let iou = gen_iou_map(&self.scene, window).map_err(js)?;
            self.windows = Some((window, spw, iou));
        }
        let (_, spw, iou) = self.windows.as_ref().expect("just filled");
        Ok((spw, iou))
    }

    fn outline(&self, canvas: &mut Canvas) {
        for p in &self.scene.ignores {
            canvas.draw_polygon(p, IGNORED);
        }
        for p in &self.scene.texts {
            canvas.draw_polygon(p, GROUND_TRUTH);
        }
    }
}

fn mean_best_iou(dets: &[Detection], texts: &[Polygon]) -> f64 {
    if texts.is_empty() {
        return 0.0;
    }
    let best = |t: &Polygon| dets.iter().map(|d| polygon_iou(&d.contour, t)).fold(0.0, f64::max);
    texts.iter().map(best).sum::<f64>() / texts.len() as f64
}
