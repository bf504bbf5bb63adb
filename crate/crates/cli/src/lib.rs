//! Batch pipelines behind the `shrinkmask` command line tool.
//!
//! Every pipeline runs scenes in parallel on the caller's rayon pool and
//! reduces in scene order, so results do not depend on the thread count.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use shrinkmask::eval::{aggregate, match_detections, EvalReport, MatchConfig};
use shrinkmask::io::DetectionFile;
use shrinkmask::postproc::{reconstruct, study_scene, PostprocConfig, StudyConfig, StudyReport, TimingBreakdown};
use shrinkmask::synth::{generate_scene, oracle_predictions, SynthConfig};
use shrinkmask::ShrinkParams;

pub mod report;

pub const THREADS_ENV: &str = "SHRINKMASK_THREADS";

/// Worker count: the environment variable wins over `flag`, which wins over
/// the machine's available parallelism.
pub fn thread_count(flag: Option<usize>) -> anyhow::Result<usize> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().map_err(|_| anyhow::anyhow!("{THREADS_ENV}={v:?} is not a thread count"))?;
        anyhow::ensure!(n > 0, "{THREADS_ENV} must be positive");
        return Ok(n);
    }
    match flag {
        Some(0) => anyhow::bail!("--threads must be positive"),
        Some(n) => Ok(n),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

pub fn pool(threads: usize) -> anyhow::Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(threads).build()?)
}

/// Output of the synthetic label, oracle, reconstruct and evaluate loop.
#[derive(Clone, Debug)]
pub struct Roundtrip {
    pub report: EvalReport,
    /// One detection file per scene, without timing.
    pub detections: Vec<DetectionFile>,
}

pub fn oracle_roundtrip(
    synth: &SynthConfig,
    scenes: usize,
    shrink: ShrinkParams,
    post: &PostprocConfig,
    matching: &MatchConfig,
) -> shrinkmask::Result<Roundtrip> {
    let per: Vec<(EvalReport, DetectionFile)> = (0..scenes as u64)
        .into_par_iter()
        .map(|i| {
            let scene = generate_scene(synth, i)?;
            let (prob, offset) = oracle_predictions(&scene, shrink, 0.0, 0)?;
            let (dets, _) = reconstruct(&prob, &offset, post)?;
            let r = match_detections(&dets, &scene.texts, &scene.ignores, matching);
            Ok((r, DetectionFile { config: Some(*post), timing: None, detections: dets }))
        })
        .collect::<shrinkmask::Result<_>>()?;
    let (reports, detections): (Vec<_>, Vec<_>) = per.into_iter().unzip();
    Ok(Roundtrip { report: aggregate(&reports)?, detections })
}

pub fn perturbation_study(
    synth: &SynthConfig,
    scenes: usize,
    k_values: &[i32],
    cfg: &StudyConfig,
) -> shrinkmask::Result<StudyReport> {
    if scenes == 0 {
        return Err(shrinkmask::Error::InvalidParameter("perturbation study needs at least one scene".into()));
    }
    let per = (0..scenes as u64)
        .into_par_iter()
        .map(|i| study_scene(&generate_scene(synth, i)?, i, k_values, cfg))
        .collect::<shrinkmask::Result<Vec<_>>>()?;
    Ok(StudyReport::from_scenes(k_values, &per))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub width: usize,
    pub height: usize,
    pub scenes: usize,
    pub repeat: usize,
    pub samples: usize,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
    /// Mean of each post-processing stage.
    pub breakdown: TimingBreakdown,
}

/// Times post-processing alone on oracle maps, sequentially on the calling
/// thread. Each scene is warmed up once before its timed repeats.
pub fn bench(
    synth: &SynthConfig,
    scenes: usize,
    repeat: usize,
    post: &PostprocConfig,
) -> shrinkmask::Result<BenchReport> {
    if scenes == 0 || repeat == 0 {
        return Err(shrinkmask::Error::InvalidParameter("bench needs at least one scene and one repeat".into()));
    }
    let mut samples = Vec::with_capacity(scenes * repeat);
    let mut sum = TimingBreakdown::default();
    for i in 0..scenes as u64 {
        let scene = generate_scene(synth, i)?;
        let (prob, offset) = oracle_predictions(&scene, ShrinkParams::default(), 0.0, 0)?;
        reconstruct(&prob, &offset, post)?;
        for _ in 0..repeat {
            let t = Instant::now();
            let (_, timing) = reconstruct(&prob, &offset, post)?;
            samples.push(t.elapsed().as_secs_f64() * 1e3);
            sum.binarize_ms += timing.binarize_ms;
            sum.components_ms += timing.components_ms;
            sum.trace_ms += timing.trace_ms;
            sum.extend_ms += timing.extend_ms;
            sum.total_ms += timing.total_ms;
        }
    }
    let n = samples.len() as f64;
    let breakdown = TimingBreakdown {
        binarize_ms: sum.binarize_ms / n,
        components_ms: sum.components_ms / n,
        trace_ms: sum.trace_ms / n,
        extend_ms: sum.extend_ms / n,
        total_ms: sum.total_ms / n,
    };
    let mean_ms = samples.iter().sum::<f64>() / n;
    samples.sort_by(f64::total_cmp);
    Ok(BenchReport {
        width: synth.width,
        height: synth.height,
        scenes,
        repeat,
        samples: samples.len(),
        mean_ms,
        p50_ms: percentile(&samples, 50.0),
        p99_ms: percentile(&samples, 99.0),
        max_ms: samples[samples.len() - 1],
        breakdown,
    })
}

/// Nearest-rank percentile of sorted samples.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank() {
        let s: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile(&s, 50.0), 50.0);
        assert_eq!(percentile(&s, 99.0), 99.0);
        assert_eq!(percentile(&[3.0], 99.0), 3.0);
        assert_eq!(percentile(&s, 0.0), 1.0);
    }
}
