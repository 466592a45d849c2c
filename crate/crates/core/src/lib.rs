//! Identity-leakage auditing for iris image generators.
//!
//! The crate is organised along the audit pipeline:
//!
//! * [`corpus`] curates raw frames (blink filter, pupil-centred crop,
//!   mirroring, ISO framing) and handles image/manifest I/O.
//! * [`segmentation`] finds pupil and iris boundaries, builds the occlusion
//!   mask and runs the pre-template quality gate.
//! * [`encoding`] unwraps the iris into a polar grid and binarizes filter-bank
//!   responses into bit-packed templates.
//! * [`matching`] computes masked fractional Hamming distances with rotation
//!   compensation and scores whole template sets.
//! * [`analysis`] turns score tables into distributions, ROC curves,
//!   FAR-calibrated thresholds, leakage heatmaps and flagged pairs.
//! * [`synth`] renders parametric irises and simulates a generator with a
//!   known memorization rate, so every audit result has ground truth.

pub mod analysis;
pub mod corpus;
pub mod curate;
pub mod encoding;
pub mod extract;
pub mod matching;
pub mod raster;
pub mod seed;
pub mod segmentation;
pub mod synth;

pub use corpus::{CorpusEntry, Origin, RawImage, SegMask};
pub use encoding::{FilterBank, IrisTemplate, PolarIris, TemplateMeta};
pub use matching::{MatchScore, Orientation, PairType, ShiftRange};
pub use segmentation::{BoundaryCircle, QualityAssessment, Segmentation};
