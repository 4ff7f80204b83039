//! Frequency-domain tile processor for a quad stereo camera rig.
//!
//! The library converts overlapping 16x16 image tiles into a lapped
//! frequency-domain representation (four 8x8 quadrants per tile), performs
//! aberration correction, fractional-pixel alignment and phase correlation
//! directly in that domain, and estimates per-tile disparity by iterative
//! refinement. A synthetic-scene generator provides exact ground truth for
//! every stage.
//!
//! Module map:
//!
//! * [`dtt`] — exact 8-point trigonometric transforms (DCT/DST II, III, IV).
//! * [`mclt`] — windowed lapped transform of 16x16 tiles, monochrome and
//!   Bayer-mosaic variants, and the inverse overlap-add path.
//! * [`fd`] — frequency-domain tile operations: complex spectrum view, phase
//!   rotation (sub-pixel shift), calibration-kernel multiply, phase
//!   correlation.
//! * [`geometry`] — quad-camera geometry, disparity-to-offset mapping,
//!   radial distortion, calibration kernel grids.
//! * [`pipeline`] — per-tile unary processing and whole-frame orchestration.
//! * [`disparity`] — correlation consolidation, sub-pixel peak fitting,
//!   iterative disparity refinement, feature export.
//! * [`synth`] — analytic band-limited scene synthesis with exact ground
//!   truth, the authoritative shift oracle for tests.
//! * [`io`] — on-disk formats: 16-bit PGM, calibration JSON, disparity CSV,
//!   feature dumps.

pub mod disparity;
pub mod dtt;
pub mod fd;
pub mod geometry;
pub mod io;
pub mod mclt;
pub mod pipeline;
pub mod synth;
