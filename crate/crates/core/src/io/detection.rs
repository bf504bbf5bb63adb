//! Plain-text detection files.
//!
//! ```text
//! # shrinkmask detections v1
//! # config mode=adaptive binarize_threshold=0.3 ...
//! # timing binarize_ms=0.012 components_ms=0.3 ...
//! det score=0.981234 mode=adaptive offset=4.25 contour=x1,y1,... shrink=x1,y1,...
//! ```
//!
//! The config and timing lines are optional. Scores carry 6 decimals; all
//! other numbers are written in shortest round-trip form.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::annotation::coords;
use crate::geometry::{Point2, Polygon};
use crate::postproc::{Detection, PostprocConfig, TimingBreakdown};
use crate::{Error, Result};

const MAGIC_LINE: &str = "# shrinkmask detections v1";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DetectionFile {
    pub config: Option<PostprocConfig>,
    pub timing: Option<TimingBreakdown>,
    pub detections: Vec<Detection>,
}

pub fn write_detections(file: &DetectionFile) -> String {
    let mut s = String::new();
    s.push_str(MAGIC_LINE);
    s.push('\n');
    if let Some(c) = &file.config {
        let _ = writeln!(
            s,
            "# config mode={} binarize_threshold={} min_area={} min_score={} delta_t={} offset_aggregation={} simplify_tolerance={}",
            c.extend_mode.as_str(),
            c.binarize_threshold,
            c.min_area,
            c.min_score,
            c.delta_t,
            c.offset_aggregation.as_str(),
            c.simplify_tolerance
        );
    }
    if let Some(t) = &file.timing {
        let _ = writeln!(
            s,
            "# timing binarize_ms={:.4} components_ms={:.4} trace_ms={:.4} extend_ms={:.4} total_ms={:.4}",
            t.binarize_ms, t.components_ms, t.trace_ms, t.extend_ms, t.total_ms
        );
    }
    for d in &file.detections {
        let _ = writeln!(
            s,
            "det score={:.6} mode={} offset={} contour={} shrink={}",
            d.score,
            d.mode.as_str(),
            d.offset_used,
            coords(&d.contour),
            coords(&d.shrink_contour)
        );
    }
    s
}

fn fields(rest: &str) -> Result<HashMap<&str, &str>> {
    rest.split_whitespace()
        .map(|kv| kv.split_once('=').ok_or_else(|| Error::Format(format!("expected key=value, got {kv:?}"))))
        .collect()
}

fn get<'a>(m: &HashMap<&str, &'a str>, key: &str) -> Result<&'a str> {
    m.get(key).copied().ok_or_else(|| Error::Format(format!("missing field {key:?}")))
}

fn num(m: &HashMap<&str, &str>, key: &str) -> Result<f64> {
    let v = get(m, key)?;
    v.parse().map_err(|_| Error::Format(format!("field {key}: not a number: {v:?}")))
}

fn polygon(s: &str) -> Result<Polygon> {
    let vals = s
        .split(',')
        .map(|v| v.parse::<f64>().map_err(|_| Error::Format(format!("not a number: {v:?}"))))
        .collect::<Result<Vec<_>>>()?;
    if vals.len() % 2 != 0 {
        return Err(Error::Format("odd coordinate count".into()));
    }
    let pts = vals.chunks_exact(2).map(|c| Point2::new(c[0], c[1])).collect::<Result<Vec<_>>>()?;
    Polygon::new(pts)
}

pub fn parse_detections(text: &str) -> Result<DetectionFile> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == MAGIC_LINE => {}
        _ => return Err(Error::Format("missing detection file header".into())),
    }
    let mut out = DetectionFile::default();
    for (i, line) in lines {
        let at = |e: Error| Error::Format(format!("line {}: {e}", i + 1));
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("# config") {
            let f = fields(rest).map_err(at)?;
            let cfg = (|| -> Result<PostprocConfig> {
                Ok(PostprocConfig {
                    extend_mode: get(&f, "mode")?.parse()?,
                    binarize_threshold: num(&f, "binarize_threshold")?,
                    min_area: num(&f, "min_area")?,
                    min_score: num(&f, "min_score")?,
                    delta_t: num(&f, "delta_t")?,
                    offset_aggregation: get(&f, "offset_aggregation")?.parse()?,
                    simplify_tolerance: num(&f, "simplify_tolerance")?,
                })
            })()
            .map_err(at)?;
            out.config = Some(cfg);
        } else if let Some(rest) = line.strip_prefix("# timing") {
            let f = fields(rest).map_err(at)?;
            let t = (|| -> Result<TimingBreakdown> {
                Ok(TimingBreakdown {
                    binarize_ms: num(&f, "binarize_ms")?,
                    components_ms: num(&f, "components_ms")?,
                    trace_ms: num(&f, "trace_ms")?,
                    extend_ms: num(&f, "extend_ms")?,
                    total_ms: num(&f, "total_ms")?,
                })
            })()
            .map_err(at)?;
            out.timing = Some(t);
        } else if line.starts_with('#') {
            continue;
        } else if let Some(rest) = line.strip_prefix("det ") {
            let f = fields(rest).map_err(at)?;
            let d = (|| -> Result<Detection> {
                Ok(Detection {
                    score: num(&f, "score")?,
                    mode: get(&f, "mode")?.parse()?,
                    offset_used: num(&f, "offset")?,
                    contour: polygon(get(&f, "contour")?)?,
                    shrink_contour: polygon(get(&f, "shrink")?)?,
                })
            })()
            .map_err(at)?;
            out.detections.push(d);
        } else {
            return Err(at(Error::Format(format!("unrecognized record {line:?}"))));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::postproc::ExtendMode;

    #[test]
    fn roundtrip() {
        let d = Detection {
            contour: Polygon::from_coords(&[(0.1, 0.2), (10.0 / 3.0, 0.0), (5.0, 7.25)]).unwrap(),
            score: 0.875,
            shrink_contour: Polygon::rect(1.0, 1.0, 2.0, 2.0).unwrap(),
            offset_used: 2.0f64.sqrt(),
            mode: ExtendMode::Fixed,
        };
        let f = DetectionFile {
            config: Some(PostprocConfig::default()),
            timing: Some(TimingBreakdown { total_ms: 1.5, ..Default::default() }),
            detections: vec![d],
        };
        let text = write_detections(&f);
        assert_eq!(parse_detections(&text).unwrap(), f);
    }

    #[test]
    fn empty_and_broken() {
        let f = DetectionFile::default();
        assert_eq!(parse_detections(&write_detections(&f)).unwrap(), f);
        assert!(parse_detections("det score=1").is_err());
        let e = parse_detections(&format!("{MAGIC_LINE}\ndet score=0.5 mode=adaptive\n")).unwrap_err();
        assert!(e.to_string().contains("line 2"));
    }
}
