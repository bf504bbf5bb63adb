//! Shrink-mask text representation toolkit.
//!
//! The crate covers the non-neural half of a shrink-mask text detector:
//!
//! * [`geometry`] – exact polygon primitives, boolean areas and offsetting.
//! * [`raster`] – rasterization, exact distance transform, connected
//!   components and crack-following contour tracing.
//! * [`labelgen`] – shrink-mask, adaptive-offset, SPW and IoU supervision maps.
//! * [`losses`] – dice with online hard example mining, ratio losses and
//!   their analytic gradients.
//! * [`postproc`] – contour reconstruction from predicted maps, with the
//!   adaptive and fixed extension strategies, plus the perturbation study.
//! * [`eval`] – IoU matching and precision / recall / F-measure.
//! * [`synth`] – deterministic synthetic scenes and oracle predictions.
//! * [`io`] – annotation, map and detection file formats.
//! * [`render`] – RGBA overlays shared by the CLI and the browser demo.

pub mod eval;
pub mod geometry;
pub mod io;
pub mod labelgen;
pub mod losses;
pub mod postproc;
pub mod raster;
pub mod render;
pub mod synth;

mod error;

pub use error::{Error, Result};
pub use geometry::{FixedExtendParams, Point2, Polygon, ShrinkParams};
pub use raster::{BitMask, ComponentLabels, Connectivity, FloatMap};
