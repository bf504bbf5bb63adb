use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use shrinkmask::eval::{aggregate, match_detections, MatchConfig};
use shrinkmask::io::{
    decode_map, encode_map, parse_annotation, parse_detections, write_annotation, write_detections, AnnotationFile,
    DetectionFile, MapData,
};
use shrinkmask::labelgen::{gen_labels, SpwValidRegion};
use shrinkmask::losses::gradient_check;
use shrinkmask::postproc::{reconstruct, ExtendMode, OffsetAggregation, PostprocConfig, StudyConfig};
use shrinkmask::render::{self, Canvas};
use shrinkmask::synth::{generate_scene, SynthConfig};
use shrinkmask::{Error, ShrinkParams};
use shrinkmask_cli::{bench, oracle_roundtrip, perturbation_study, pool, report, thread_count};

/// Usage problems found after argument parsing; exit code 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

#[derive(Parser)]
#[command(name = "shrinkmask", version, about = "Shrink-mask text detection toolkit")]
struct Cli {
    /// Worker threads (SHRINKMASK_THREADS overrides; default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print structured JSON reports instead of text.
    #[arg(long, global = true)]
    json_style: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic annotation files.
    Synth(SynthArgs),
    /// Generate shrink, offset, SPW and ignore maps for annotation files.
    GenLabels(GenLabelsArgs),
    /// Rebuild text contours from a shrink probability map and an offset map.
    Reconstruct(ReconstructArgs),
    /// Score detection files against annotation files paired by file stem.
    Evaluate(EvaluateArgs),
    /// Synthetic scenes through labels, oracle maps, reconstruction and evaluation.
    Roundtrip(RoundtripArgs),
    /// Robustness of adaptive and fixed extension to shrink-mask dilation and erosion.
    Study(StudyArgs),
    /// Finite-difference check of the loss gradients.
    LossCheck(LossCheckArgs),
    /// Post-processing latency on oracle maps.
    Bench(BenchArgs),
    /// Overlay annotations and detections on an image.
    Render(RenderArgs),
}

#[derive(Args)]
struct SceneArgs {
    #[arg(long, default_value_t = 200)]
    scenes: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Image size as WxH.
    #[arg(long, value_parser = parse_size, default_value = "512x512")]
    size: (usize, usize),
}

impl SceneArgs {
    fn synth(&self) -> Result<SynthConfig> {
        let cfg = SynthConfig { width: self.size.0, height: self.size.1, ..SynthConfig::mixed(self.seed) };
        cfg.validate().map_err(|e| usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    scenes: SceneArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenLabelsArgs {
    #[arg(long)]
    ann: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_parser = parse_delta_s, default_value_t = 0.4)]
    delta_s: f64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..), default_value_t = 32)]
    window: u64,
    #[arg(long, default_value = "all", value_parser = parse_with::<SpwValidRegion>)]
    spw_valid_region: SpwValidRegion,
    /// Image size for files without a size header (default: fit the polygons).
    #[arg(long, value_parser = parse_size)]
    size: Option<(usize, usize)>,
}

#[derive(Args)]
struct PostArgs {
    #[arg(long, value_parser = parse_with::<ExtendMode>, default_value = "adaptive")]
    mode: ExtendMode,
    /// Fixed-mode extension coefficient.
    #[arg(long)]
    delta_t: Option<f64>,
    #[arg(long, default_value_t = 0.3)]
    threshold: f64,
    #[arg(long, default_value_t = 16.0)]
    min_area: f64,
    #[arg(long, default_value_t = 0.5)]
    min_score: f64,
    #[arg(long, value_parser = parse_with::<OffsetAggregation>, default_value = "contour-band-mean")]
    aggregation: OffsetAggregation,
}

impl PostArgs {
    fn config(&self, require_delta_t: bool) -> Result<PostprocConfig> {
        let delta_t = match (self.mode, self.delta_t) {
            (ExtendMode::Fixed, None) if require_delta_t => return Err(usage("--mode fixed requires --delta-t")),
            (_, Some(d)) => d,
            (_, None) => PostprocConfig::default().delta_t,
        };
        let cfg = PostprocConfig {
            binarize_threshold: self.threshold,
            min_area: self.min_area,
            min_score: self.min_score,
            extend_mode: self.mode,
            delta_t,
            offset_aggregation: self.aggregation,
            ..PostprocConfig::default()
        };
        cfg.validate().map_err(|e| usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct ReconstructArgs {
    #[arg(long)]
    shrink: PathBuf,
    #[arg(long)]
    offset: PathBuf,
    #[command(flatten)]
    post: PostArgs,
    #[arg(long)]
    out: PathBuf,
    /// Leave the timing line out of the detection file.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Directory of `<stem>.det` files.
    #[arg(long)]
    det: PathBuf,
    /// Directory of `<stem>.txt` annotation files.
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.75")]
    iou: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    ignore_overlap: f64,
}

#[derive(Args)]
struct RoundtripArgs {
    #[command(flatten)]
    scenes: SceneArgs,
    #[command(flatten)]
    post: PostArgs,
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.75")]
    iou: Vec<f64>,
    /// Also write `<scene>.txt` annotations and `<scene>.det` detections here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StudyArgs {
    #[command(flatten)]
    scenes: SceneArgs,
    /// Perturbation radii, as `lo..hi` or a comma list.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_k, default_value = "-3..3")]
    k: KList,
    /// Gaussian noise added to the perturbed probability maps.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
}

#[derive(Clone, Debug)]
struct KList(Vec<i32>);

#[derive(Args)]
struct LossCheckArgs {
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 16)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 10)]
    scenes: usize,
    #[arg(long, value_parser = parse_size, default_value = "640x640")]
    size: (usize, usize),
    #[arg(long, default_value_t = 20)]
    repeat: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    post: PostArgs,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    ann: PathBuf,
    /// Detection files; contours are coloured by their extension mode.
    #[arg(long)]
    det: Vec<PathBuf>,
    /// Optional shrink map (MAPF) tinted underneath.
    #[arg(long)]
    shrink: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_size(s: &str) -> std::result::Result<(usize, usize), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WxH, got {s:?}"))?;
    let w: usize = w.parse().map_err(|_| format!("bad width in {s:?}"))?;
    let h: usize = h.parse().map_err(|_| format!("bad height in {s:?}"))?;
    if w == 0 || h == 0 {
        return Err("image size must be positive".into());
    }
    Ok((w, h))
}

fn parse_delta_s(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    ShrinkParams::new(v).map(|p| p.delta_s()).map_err(|e| e.to_string())
}

fn parse_with<T: std::str::FromStr<Err = Error>>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_k(s: &str) -> std::result::Result<KList, String> {
    let int = |v: &str| v.trim().parse::<i32>().map_err(|_| format!("not an integer: {v:?}"));
    if let Some((lo, hi)) = s.split_once("..") {
        let (lo, hi) = (int(lo)?, int(hi)?);
        if lo > hi {
            return Err(format!("empty range {s:?}"));
        }
        return Ok(KList((lo..=hi).collect()));
    }
    s.split(',').map(int).collect::<std::result::Result<_, _>>().map(KList)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let result = thread_count(cli.threads)
        .map_err(|e| usage(e.to_string()))
        .and_then(pool)
        .and_then(|p| p.install(|| run(&cli)));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<Usage>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn emit<T: Serialize>(json: bool, value: &T, text: impl FnOnce() -> String) -> Result<()> {
    if json {
        println!("{}", serde_json::to_string_pretty(value)?);
    } else {
        print!("{}", text());
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let json = cli.json_style;
    match &cli.command {
        Command::Synth(a) => synth_cmd(a, json),
        Command::GenLabels(a) => gen_labels_cmd(a, json),
        Command::Reconstruct(a) => reconstruct_cmd(a, json),
        Command::Evaluate(a) => evaluate_cmd(a, json),
        Command::Roundtrip(a) => roundtrip_cmd(a, json),
        Command::Study(a) => {
            let synth = a.scenes.synth()?;
            if !(a.sigma >= 0.0 && a.sigma.is_finite()) {
                return Err(usage("--sigma must be a non-negative number"));
            }
            let cfg = StudyConfig { noise_sigma: a.sigma, noise_seed: a.scenes.seed, ..StudyConfig::default() };
            let r = perturbation_study(&synth, a.scenes.scenes, &a.k.0, &cfg)?;
            emit(json, &r, || report::study_text(&r))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::LossCheck(a) => {
            if a.trials == 0 || a.size == 0 {
                return Err(usage("--trials and --size must be positive"));
            }
            let g = gradient_check(a.trials, a.size, a.seed)?;
            #[derive(Serialize)]
            struct Out {
                trials: usize,
                dice: f64,
                offset: f64,
                spw: f64,
                tolerance: f64,
                pass: bool,
            }
            let pass = g.worst() < a.tolerance;
            let out =
                Out { trials: g.trials, dice: g.dice, offset: g.offset, spw: g.spw, tolerance: a.tolerance, pass };
            emit(json, &out, || report::grad_text(&g, a.tolerance))?;
            Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Bench(a) => {
            let synth = SynthConfig { width: a.size.0, height: a.size.1, ..SynthConfig::mixed(a.seed) };
            synth.validate().map_err(|e| usage(e.to_string()))?;
            let post = a.post.config(false)?;
            let r = bench(&synth, a.scenes, a.repeat, &post).map_err(|e| usage(e.to_string()))?;
            emit(json, &r, || report::bench_text(&r))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Render(a) => render_cmd(a),
    }
}

fn scene_name(i: u64) -> String {
    format!("scene_{i:04}")
}

fn synth_cmd(a: &SynthArgs, json: bool) -> Result<ExitCode> {
    let cfg = a.scenes.synth()?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let written = (0..a.scenes.scenes as u64)
        .into_par_iter()
        .map(|i| -> Result<PathBuf> {
            let scene = generate_scene(&cfg, i)?;
            let path = a.out.join(format!("{}.txt", scene_name(i)));
            fs::write(&path, write_annotation(&AnnotationFile::from_scene(&scene)))
                .with_context(|| format!("writing {}", path.display()))?;
            Ok(path)
        })
        .collect::<Result<Vec<_>>>()?;
    emit(json, &serde_json::json!({ "written": written.len() }), || format!("wrote {} scenes\n", written.len()))?;
    Ok(ExitCode::SUCCESS)
}

/// Files in `dir` with extension `ext`, sorted by name.
fn files_with_ext(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let p = e?.path();
        if p.is_file() && p.extension().is_some_and(|x| x == ext) {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn write_map(dir: &Path, name: &str, map: MapData) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, encode_map(&map)).with_context(|| format!("writing {}", path.display()))
}

fn gen_labels_cmd(a: &GenLabelsArgs, json: bool) -> Result<ExitCode> {
    let files = files_with_ext(&a.ann, "txt")?;
    if files.is_empty() {
        log::warn!("no annotation files in {}", a.ann.display());
    }
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let params = ShrinkParams::new(a.delta_s).map_err(|e| usage(e.to_string()))?;
    let outcomes: Vec<std::result::Result<usize, String>> = files
        .par_iter()
        .map(|path| {
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let ann = parse_annotation(&text).map_err(|e| format!("{}:{}: {}", path.display(), e.line, e.error))?;
            let scene = ann.to_scene(a.size).map_err(|e| format!("{}: {e}", path.display()))?;
            let maps = gen_labels(&scene, params, a.window as usize).map_err(|e| format!("{}: {e}", path.display()))?;
            let valid = maps.spw_region(a.spw_valid_region);
            let name = stem(path);
            let write = || -> Result<()> {
                write_map(&a.out, &format!("{name}.shrink.mapf"), MapData::Mask(maps.shrink.clone()))?;
                write_map(&a.out, &format!("{name}.offset.mapf"), MapData::Float(maps.offset.clone()))?;
                write_map(&a.out, &format!("{name}.spw.mapf"), MapData::Float(maps.spw.clone()))?;
                write_map(&a.out, &format!("{name}.spw-valid.mapf"), MapData::Mask(valid))?;
                write_map(&a.out, &format!("{name}.ignore.mapf"), MapData::Mask(maps.ignore.clone()))
            };
            write().map_err(|e| format!("{e:#}"))?;
            Ok(maps.skipped.len())
        })
        .collect();
    let mut failed = 0;
    let mut skipped_texts = 0;
    for o in &outcomes {
        match o {
            Ok(s) => skipped_texts += s,
            Err(msg) => {
                eprintln!("{msg}");
                failed += 1;
            }
        }
    }
    let done = outcomes.len() - failed;
    let summary =
        serde_json::json!({ "files": files.len(), "written": done, "failed": failed, "skipped_texts": skipped_texts });
    emit(json, &summary, || {
        format!("labelled {done} of {} files ({skipped_texts} texts too small to shrink)\n", files.len())
    })?;
    Ok(if failed > 0 { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn read_map(path: &Path) -> Result<MapData> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    decode_map(&bytes).with_context(|| format!("decoding {}", path.display()))
}

fn reconstruct_cmd(a: &ReconstructArgs, json: bool) -> Result<ExitCode> {
    let cfg = a.post.config(true)?;
    let prob = read_map(&a.shrink)?;
    let offset = read_map(&a.offset)?;
    if prob.dims() != offset.dims() {
        return Err(usage(format!("shrink map is {:?} but offset map is {:?}", prob.dims(), offset.dims())));
    }
    let (dets, timing) = reconstruct(&prob.into_float(), &offset.into_float(), &cfg)?;
    let file = DetectionFile { config: Some(cfg), timing: (!a.no_timing).then_some(timing), detections: dets };
    fs::write(&a.out, write_detections(&file)).with_context(|| format!("writing {}", a.out.display()))?;
    let summary = serde_json::json!({ "detections": file.detections.len(), "timing": timing });
    emit(json, &summary, || format!("{} detections\n{}\n", file.detections.len(), report::timing_text(&timing)))?;
    Ok(ExitCode::SUCCESS)
}

fn match_config(iou: &[f64], ignore_overlap: f64) -> Result<MatchConfig> {
    MatchConfig::new(iou.to_vec(), ignore_overlap).map_err(|e| usage(e.to_string()))
}

fn evaluate_cmd(a: &EvaluateArgs, json: bool) -> Result<ExitCode> {
    let cfg = match_config(&a.iou, a.ignore_overlap)?;
    let dets = files_with_ext(&a.det, "det")?;
    let gts = files_with_ext(&a.gt, "txt")?;
    let gt_stems: std::collections::BTreeSet<String> = gts.iter().map(|p| stem(p)).collect();
    let det_stems: std::collections::BTreeSet<String> = dets.iter().map(|p| stem(p)).collect();
    let mut unpaired = 0;
    for p in dets.iter().filter(|p| !gt_stems.contains(&stem(p))) {
        eprintln!("{}: no matching annotation file", p.display());
        unpaired += 1;
    }
    for p in gts.iter().filter(|p| !det_stems.contains(&stem(p))) {
        eprintln!("{}: no matching detection file", p.display());
        unpaired += 1;
    }
    let pairs: Vec<(PathBuf, PathBuf)> = dets
        .iter()
        .filter(|p| gt_stems.contains(&stem(p)))
        .map(|d| (d.clone(), a.gt.join(format!("{}.txt", stem(d)))))
        .collect();
    if pairs.is_empty() {
        bail!("no paired detection and annotation files");
    }
    let reports = pairs
        .par_iter()
        .map(|(d, g)| -> Result<_> {
            let det = parse_detections(&fs::read_to_string(d)?).with_context(|| d.display().to_string())?;
            let gt = parse_annotation(&fs::read_to_string(g)?)
                .map_err(|e| anyhow::anyhow!("{}:{}: {}", g.display(), e.line, e.error))?;
            Ok(match_detections(&det.detections, &gt.texts, &gt.ignores, &cfg))
        })
        .collect::<Result<Vec<_>>>()?;
    let total = aggregate(&reports)?;
    #[derive(Serialize)]
    struct Out<'a> {
        images: usize,
        unpaired: usize,
        ignored: usize,
        metrics: &'a [shrinkmask::eval::ThresholdMetrics],
    }
    let out = Out { images: reports.len(), unpaired, ignored: total.ignored, metrics: &total.per_threshold };
    emit(json, &out, || format!("images {}\n{}", reports.len(), report::eval_text(&total)))?;
    Ok(if unpaired > 0 { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn roundtrip_cmd(a: &RoundtripArgs, json: bool) -> Result<ExitCode> {
    let synth = a.scenes.synth()?;
    let post = a.post.config(false)?;
    let cfg = match_config(&a.iou, 0.5)?;
    let r = oracle_roundtrip(&synth, a.scenes.scenes, ShrinkParams::default(), &post, &cfg)?;
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (i, det) in r.detections.iter().enumerate() {
            let name = scene_name(i as u64);
            let scene = generate_scene(&synth, i as u64)?;
            fs::write(dir.join(format!("{name}.txt")), write_annotation(&AnnotationFile::from_scene(&scene)))?;
            fs::write(dir.join(format!("{name}.det")), write_detections(det))?;
        }
    }
    #[derive(Serialize)]
    struct Out<'a> {
        scenes: usize,
        ignored: usize,
        metrics: &'a [shrinkmask::eval::ThresholdMetrics],
    }
    let out = Out { scenes: a.scenes.scenes, ignored: r.report.ignored, metrics: &r.report.per_threshold };
    emit(json, &out, || format!("scenes {}\n{}", a.scenes.scenes, report::eval_text(&r.report)))?;
    Ok(ExitCode::SUCCESS)
}

fn render_cmd(a: &RenderArgs) -> Result<ExitCode> {
    let ann = parse_annotation(&fs::read_to_string(&a.ann).with_context(|| a.ann.display().to_string())?)
        .map_err(|e| anyhow::anyhow!("{}:{}: {}", a.ann.display(), e.line, e.error))?;
    let scene = ann.to_scene(None)?;
    let mut canvas = Canvas::new(scene.width, scene.height, [24, 24, 28]);
    if let Some(p) = &a.shrink {
        let m = read_map(p)?.into_float();
        canvas.fill_mask(&m.threshold(0.5), [230, 230, 230], 0.25);
    }
    for g in &scene.ignores {
        let m = shrinkmask::raster::rasterize(g, scene.width, scene.height)?;
        canvas.fill_mask(&m, render::IGNORED, 0.4);
    }
    for t in &scene.texts {
        canvas.draw_polygon(t, render::GROUND_TRUTH);
    }
    for d in &a.det {
        let file = parse_detections(&fs::read_to_string(d).with_context(|| d.display().to_string())?)
            .with_context(|| d.display().to_string())?;
        for det in &file.detections {
            let color = match det.mode {
                ExtendMode::Adaptive => render::ADAPTIVE,
                ExtendMode::Fixed => render::FIXED,
            };
            canvas.draw_polygon(&det.contour, color);
        }
    }
    let (w, h) = (canvas.width() as u32, canvas.height() as u32);
    let img = image::RgbaImage::from_raw(w, h, canvas.into_rgba()).context("canvas size")?;
    img.save(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    Ok(ExitCode::SUCCESS)
}
