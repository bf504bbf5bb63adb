//! ICDAR-style polygon annotation files.
//!
//! One polygon per line as `x1,y1,x2,y2,...`; a trailing `,###` marks a
//! do-not-care region. An optional first line `# size WxH` records the
//! image size. Blank lines and other `#` comments are skipped.

use std::fmt::Write as _;

use crate::geometry::{Point2, Polygon};
use crate::labelgen::SceneAnnotation;
use crate::{Error, Result};

const IGNORE_TAG: &str = "###";

/// Parse failure with its 1-based line number.
#[derive(Clone, Debug, PartialEq)]
pub struct LineError {
    pub line: usize,
    pub error: Error,
}

impl std::fmt::Display for LineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.error)
    }
}

impl std::error::Error for LineError {}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AnnotationFile {
    pub size: Option<(usize, usize)>,
    pub texts: Vec<Polygon>,
    pub ignores: Vec<Polygon>,
}

impl AnnotationFile {
    pub fn from_scene(scene: &SceneAnnotation) -> Self {
        Self { size: Some((scene.width, scene.height)), texts: scene.texts.clone(), ignores: scene.ignores.clone() }
    }

    /// Scene of the recorded size, else `fallback`, else the smallest image
    /// holding every polygon.
    pub fn to_scene(&self, fallback: Option<(usize, usize)>) -> Result<SceneAnnotation> {
        let (w, h) = match self.size.or(fallback) {
            Some(s) => s,
            None => {
                let (mut w, mut h) = (1.0f64, 1.0f64);
                for p in self.texts.iter().chain(&self.ignores) {
                    let b = p.bbox();
                    w = w.max(b.max_x.ceil());
                    h = h.max(b.max_y.ceil());
                }
                (w as usize, h as usize)
            }
        };
        SceneAnnotation::new(w, h, self.texts.clone(), self.ignores.clone())
    }
}

pub fn parse_annotation(text: &str) -> std::result::Result<AnnotationFile, LineError> {
    let mut out = AnnotationFile::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let at = |error: Error| LineError { line: i + 1, error };
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(size) = rest.trim().strip_prefix("size") {
                out.size = Some(parse_size(size.trim()).map_err(at)?);
            }
            continue;
        }
        let mut fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let ignore = fields.last() == Some(&IGNORE_TAG);
        if ignore {
            fields.pop();
        }
        if !fields.len().is_multiple_of(2) || fields.len() < 6 {
            return Err(at(Error::Format(format!(
                "expected an even number (at least 6) of coordinates, got {}",
                fields.len()
            ))));
        }
        let mut pts = Vec::with_capacity(fields.len() / 2);
        for pair in fields.chunks_exact(2) {
            let x = parse_coord(pair[0]).map_err(at)?;
            let y = parse_coord(pair[1]).map_err(at)?;
            pts.push(Point2::new(x, y).map_err(at)?);
        }
        let poly = Polygon::new(pts).map_err(at)?;
        if ignore {
            out.ignores.push(poly);
        } else {
            out.texts.push(poly);
        }
    }
    Ok(out)
}

fn parse_size(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Format(format!("malformed size header {s:?}, expected WxH"));
    let (w, h) = s.split_once('x').ok_or_else(bad)?;
    let w: usize = w.trim().parse().map_err(|_| bad())?;
    let h: usize = h.trim().parse().map_err(|_| bad())?;
    if w == 0 || h == 0 {
        return Err(Error::EmptyGrid { width: w, height: h });
    }
    Ok((w, h))
}

fn parse_coord(s: &str) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| Error::Format(format!("not a number: {s:?}")))?;
    if !v.is_finite() {
        return Err(Error::Format(format!("non-finite coordinate {s:?}")));
    }
    Ok(v)
}

/// Writes coordinates in shortest round-trip form, so parsing the output
/// restores every vertex exactly.
pub fn write_annotation(ann: &AnnotationFile) -> String {
    let mut s = String::new();
    if let Some((w, h)) = ann.size {
        let _ = writeln!(s, "# size {w}x{h}");
    }
    for (polys, ignore) in [(&ann.texts, false), (&ann.ignores, true)] {
        for p in polys {
            s.push_str(&coords(p));
            if ignore {
                s.push(',');
                s.push_str(IGNORE_TAG);
            }
            s.push('\n');
        }
    }
    s
}

pub(crate) fn coords(p: &Polygon) -> String {
    let mut s = String::new();
    for (i, v) in p.vertices().iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        let _ = write!(s, "{},{}", v.x(), v.y());
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_texts_and_ignores() {
        let a = parse_annotation("# size 64x32\n0,0,10,0,10,10,0,10\n\n20,0,30,0,30,5,###\n").unwrap();
        assert_eq!(a.size, Some((64, 32)));
        assert_eq!((a.texts.len(), a.ignores.len()), (1, 1));
        assert_eq!(parse_annotation(&write_annotation(&a)).unwrap(), a);
    }

    #[test]
    fn reports_line_numbers() {
        let e = parse_annotation("0,0,1,0,1,1\n0,0,1,0,1\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse_annotation("0,0,2,2,2,0,0,2\n").unwrap_err();
        assert!(matches!(e.error, Error::SelfIntersection { .. }), "{e}");
        let e = parse_annotation("0,0,x,0,1,1\n").unwrap_err();
        assert!(e.to_string().starts_with("line 1:"));
    }

    #[test]
    fn scene_size_fallbacks() {
        let a = parse_annotation("0,0,10.5,0,10.5,7,0,7\n").unwrap();
        let s = a.to_scene(None).unwrap();
        assert_eq!((s.width, s.height), (11, 7));
        assert_eq!(a.to_scene(Some((20, 20))).unwrap().width, 20);
    }
}
