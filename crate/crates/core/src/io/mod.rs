//! On-disk formats: annotations, binary maps and detection lists.

mod annotation;
mod detection;
mod mapfile;

pub use annotation::{parse_annotation, write_annotation, AnnotationFile, LineError};
pub use detection::{parse_detections, write_detections, DetectionFile};
pub use mapfile::{decode_map, encode_float, encode_map, encode_mask, MapData};
