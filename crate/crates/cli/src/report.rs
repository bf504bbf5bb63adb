//! Human-readable report text. Structured output is plain `serde_json`.

use std::fmt::Write as _;

use shrinkmask::eval::EvalReport;
use shrinkmask::losses::GradCheckSummary;
use shrinkmask::postproc::{StudyReport, TimingBreakdown};

use crate::BenchReport;

/// Metrics as percentages with one decimal, one line per IoU threshold.
pub fn eval_text(r: &EvalReport) -> String {
    let mut s = String::new();
    for m in &r.per_threshold {
        let _ = writeln!(
            s,
            "IoU {:.2}  P {:.1} R {:.1} F {:.1}  (tp {} fp {} fn {})",
            m.threshold,
            100.0 * m.precision,
            100.0 * m.recall,
            100.0 * m.f_measure,
            m.tp,
            m.fp,
            m.fn_
        );
    }
    if r.ignored > 0 {
        let _ = writeln!(s, "ignored detections {}", r.ignored);
    }
    s
}

pub fn study_text(r: &StudyReport) -> String {
    let mut s = format!("scenes {}  texts {}\n", r.scenes, r.texts);
    s.push_str("   k  adaptive     fixed  adaptive-fixed\n");
    for row in &r.rows {
        let _ = writeln!(
            s,
            "{:>4}  {:>8.4}  {:>8.4}  {:>+14.4}",
            row.k,
            row.adaptive_mean_iou,
            row.fixed_mean_iou,
            row.adaptive_mean_iou - row.fixed_mean_iou
        );
    }
    s
}

pub fn timing_text(t: &TimingBreakdown) -> String {
    format!(
        "binarize {:.3} ms  components {:.3} ms  trace {:.3} ms  extend {:.3} ms  total {:.3} ms",
        t.binarize_ms, t.components_ms, t.trace_ms, t.extend_ms, t.total_ms
    )
}

pub fn bench_text(r: &BenchReport) -> String {
    format!(
        "post-processing on {}x{} oracle maps, {} scenes x {} repeats\nmean {:.3} ms  p50 {:.3} ms  p99 {:.3} ms  max {:.3} ms\n{}\n",
        r.width,
        r.height,
        r.scenes,
        r.repeat,
        r.mean_ms,
        r.p50_ms,
        r.p99_ms,
        r.max_ms,
        timing_text(&r.breakdown)
    )
}

pub fn grad_text(g: &GradCheckSummary, tolerance: f64) -> String {
    let mut s = format!("{} random instances per loss, max relative error\n", g.trials);
    for (name, v) in [("dice", g.dice), ("offset", g.offset), ("spw", g.spw)] {
        let verdict = if v < tolerance { "ok" } else { "FAIL" };
        let _ = writeln!(s, "{name:<7} {v:.3e}  {verdict}");
    }
    s
}
