//! `MAPF` binary grids.
//!
//! Layout: magic `MAPF`, version `u8 = 1`, dtype `u8` (0 = bit mask packed
//! 8 px per byte, most significant bit first, rows padded to a byte; 1 =
//! `f32` little endian), width `u32` LE, height `u32` LE, row-major payload.

use crate::raster::{BitMask, FloatMap};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"MAPF";
const VERSION: u8 = 1;
const HEADER: usize = 14;

#[derive(Clone, Debug, PartialEq)]
pub enum MapData {
    Mask(BitMask),
    Float(FloatMap),
}

impl MapData {
    pub fn dims(&self) -> (usize, usize) {
        match self {
            Self::Mask(m) => (m.width(), m.height()),
            Self::Float(f) => (f.width(), f.height()),
        }
    }

    /// Float view; masks read as 0 / 1.
    pub fn into_float(self) -> FloatMap {
        match self {
            Self::Mask(m) => m.to_float(),
            Self::Float(f) => f,
        }
    }
}

fn header(dtype: u8, w: usize, h: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(dtype);
    out.extend_from_slice(&(w as u32).to_le_bytes());
    out.extend_from_slice(&(h as u32).to_le_bytes());
    out
}

pub fn encode_mask(m: &BitMask) -> Vec<u8> {
    let stride = m.width().div_ceil(8);
    let mut out = header(0, m.width(), m.height());
    out.reserve(stride * m.height());
    for i in 0..m.height() {
        let mut row = vec![0u8; stride];
        for j in 0..m.width() {
            if m.get(i, j) {
                row[j / 8] |= 0x80 >> (j % 8);
            }
        }
        out.extend_from_slice(&row);
    }
    out
}

/// Values are stored as `f32`.
pub fn encode_float(f: &FloatMap) -> Vec<u8> {
    let mut out = header(1, f.width(), f.height());
    out.reserve(4 * f.values().len());
    for &v in f.values() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode_map(bytes: &[u8]) -> Result<MapData> {
    let bad = |m: String| Error::Format(m);
    if bytes.len() < HEADER || &bytes[..4] != MAGIC {
        return Err(bad("not a MAPF file".into()));
    }
    if bytes[4] != VERSION {
        return Err(bad(format!("unsupported MAPF version {}", bytes[4])));
    }
    let dtype = bytes[5];
    let w = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes")) as usize;
    let h = u32::from_le_bytes(bytes[10..14].try_into().expect("4 bytes")) as usize;
    let payload = &bytes[HEADER..];
    match dtype {
        0 => {
            let stride = w.div_ceil(8);
            check_len(payload.len(), stride * h)?;
            let mut bits = Vec::with_capacity(w * h);
            for row in payload.chunks_exact(stride.max(1)).take(h) {
                for j in 0..w {
                    bits.push(row[j / 8] & (0x80 >> (j % 8)) != 0);
                }
                let used = w % 8;
                if used != 0 && row[stride - 1] & (0xFF >> used) != 0 {
                    return Err(bad("non-zero row padding bits".into()));
                }
            }
            Ok(MapData::Mask(BitMask::from_bits(w, h, bits)?))
        }
        1 => {
            check_len(payload.len(), 4 * w * h)?;
            let values =
                payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64).collect();
            Ok(MapData::Float(FloatMap::from_values(w, h, values)?))
        }
        d => Err(bad(format!("unknown MAPF dtype {d}"))),
    }
}

fn check_len(got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Format(format!("MAPF payload is {got} bytes, header implies {want}")));
    }
    Ok(())
}

pub fn encode_map(m: &MapData) -> Vec<u8> {
    match m {
        MapData::Mask(b) => encode_mask(b),
        MapData::Float(f) => encode_float(f),
    }
}
