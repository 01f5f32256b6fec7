//! Zebrafish heart-video analysis: ventricle segmentation post-processing,
//! geometry, and cardiac function indices (EF, FS, SV, CO, HR).
//!
//! A typical pipeline loads a frame sequence, segments each frame (optionally
//! with flip test-time augmentation), keeps the largest filled component,
//! measures its moment-equivalent ellipse and turns the per-frame areas and
//! axes into a [`cardiac::CardiacReport`].

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod augment;
pub mod cardiac;
pub mod cli;
pub mod evalmetrics;
pub mod imaging;
pub mod numfmt;
pub mod segmentation;
pub mod synth;
pub mod tta;
