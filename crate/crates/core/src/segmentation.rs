//! Segmenter contract and the two built-in backends.
//!
//! Any model that maps a [`GrayFrame`] to a [`SoftMask`] can drive the
//! pipeline by implementing [`Segmenter`]. The built-ins are a loader for
//! masks exported by an external model and a fixed intensity threshold.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::imaging::io::{self, FileKind};
use crate::imaging::{Flip, Flippable, GrayFrame, ImagingError, SoftMask};

#[derive(Debug, Error)]
pub enum SegmentError {
    #[error("no precomputed mask for frame {0}")]
    MissingMask(usize),
    #[error("mask for frame {frame} is {found:?}, frame is {expected:?}")]
    DimensionMismatch {
        frame: usize,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("precomputed segmenter requires a mask directory")]
    MissingMaskDir,
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Polarity {
    #[default]
    BrightForeground,
    DarkForeground,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmenterKind {
    Precomputed,
    Intensity,
}

/// Declarative segmenter configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmenterSpec {
    pub kind: SegmenterKind,
    pub mask_dir: Option<PathBuf>,
    pub intensity_threshold: u8,
    pub polarity: Polarity,
}

impl SegmenterSpec {
    pub fn precomputed(mask_dir: impl Into<PathBuf>) -> Self {
        Self {
            kind: SegmenterKind::Precomputed,
            mask_dir: Some(mask_dir.into()),
            intensity_threshold: 128,
            polarity: Polarity::BrightForeground,
        }
    }

    pub fn intensity(threshold: u8, polarity: Polarity) -> Self {
        Self {
            kind: SegmenterKind::Intensity,
            mask_dir: None,
            intensity_threshold: threshold,
            polarity,
        }
    }

    pub fn build(&self) -> Result<Box<dyn Segmenter>, SegmentError> {
        match self.kind {
            SegmenterKind::Intensity => Ok(Box::new(IntensitySegmenter {
                threshold: self.intensity_threshold,
                polarity: self.polarity,
            })),
            SegmenterKind::Precomputed => {
                let dir = self.mask_dir.as_deref().ok_or(SegmentError::MissingMaskDir)?;
                Ok(Box::new(PrecomputedSegmenter::open(dir)?))
            }
        }
    }
}

/// Produces a foreground probability map for one frame.
pub trait Segmenter: Send + Sync {
    fn segment(&self, frame: &GrayFrame) -> Result<SoftMask, SegmentError>;

    /// Predict on `frame` seen through `view`. The result is in the flipped
    /// orientation, exactly as if `segment` were called on the flipped frame.
    fn segment_view(&self, frame: &GrayFrame, view: Flip) -> Result<SoftMask, SegmentError> {
        self.segment(&frame.flipped(view))
    }
}

/// Convenience: build the segmenter described by `spec` and run it once.
pub fn segment(frame: &GrayFrame, spec: &SegmenterSpec) -> Result<SoftMask, SegmentError> {
    spec.build()?.segment(frame)
}

/// Probability 1 where the intensity passes the threshold, 0 elsewhere.
///
/// Bright foreground passes at `value >= threshold`, dark foreground at
/// `value <= threshold`. The decision is per pixel, so the segmenter commutes
/// with every flip.
#[derive(Debug, Clone, Copy)]
pub struct IntensitySegmenter {
    pub threshold: u8,
    pub polarity: Polarity,
}

impl Segmenter for IntensitySegmenter {
    fn segment(&self, frame: &GrayFrame) -> Result<SoftMask, SegmentError> {
        let probs = frame
            .intensities()
            .iter()
            .map(|&v| {
                let pass = match self.polarity {
                    Polarity::BrightForeground => v >= self.threshold,
                    Polarity::DarkForeground => v <= self.threshold,
                };
                if pass {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        Ok(SoftMask::new(frame.width(), frame.height(), probs)?)
    }
}

/// Serves masks from a directory, the `i`-th file in numeric order standing
/// for frame `i`.
///
/// A precomputed mask describes the unflipped frame, so a flipped view is
/// answered with the same mask flipped accordingly.
#[derive(Debug, Clone)]
pub struct PrecomputedSegmenter {
    files: Vec<PathBuf>,
}

impl PrecomputedSegmenter {
    pub fn open(dir: &Path) -> Result<Self, SegmentError> {
        let files = io::list_files(dir, |k| k.is_image() || k == FileKind::RawF32)?;
        Ok(Self { files })
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }
}

impl Segmenter for PrecomputedSegmenter {
    fn segment(&self, frame: &GrayFrame) -> Result<SoftMask, SegmentError> {
        let path = self
            .files
            .get(frame.index())
            .ok_or(SegmentError::MissingMask(frame.index()))?;
        let (w, h) = frame.dims();
        io::read_soft_mask(path, w, h).map_err(|e| match e {
            ImagingError::DimensionMismatch { expected, found } => SegmentError::DimensionMismatch {
                frame: frame.index(),
                expected,
                found,
            },
            other => other.into(),
        })
    }

    fn segment_view(&self, frame: &GrayFrame, view: Flip) -> Result<SoftMask, SegmentError> {
        Ok(self.segment(frame)?.flipped(view))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::io::{write_gray, write_soft_mask_f32};

    #[test]
    fn intensity_uniform_bright_frame() {
        let frame = GrayFrame::filled(4, 3, 200, 0).unwrap();
        let spec = SegmenterSpec::intensity(128, Polarity::BrightForeground);
        let soft = segment(&frame, &spec).unwrap();
        assert!(soft.probabilities().iter().all(|&p| p == 1.0));
        let dark = SegmenterSpec::intensity(128, Polarity::DarkForeground);
        assert!(segment(&frame, &dark).unwrap().probabilities().iter().all(|&p| p == 0.0));
    }

    #[test]
    fn intensity_threshold_is_inclusive_for_both_polarities() {
        let frame = GrayFrame::new(3, 1, vec![99, 100, 101], 0).unwrap();
        let bright = IntensitySegmenter { threshold: 100, polarity: Polarity::BrightForeground };
        let dark = IntensitySegmenter { threshold: 100, polarity: Polarity::DarkForeground };
        assert_eq!(bright.segment(&frame).unwrap().probabilities(), &[0.0, 1.0, 1.0]);
        assert_eq!(dark.segment(&frame).unwrap().probabilities(), &[1.0, 1.0, 0.0]);
    }

    #[test]
    fn intensity_segmenter_is_flip_equivariant() {
        let frame = GrayFrame::new(3, 2, vec![10, 200, 90, 140, 0, 255], 0).unwrap();
        let seg = IntensitySegmenter { threshold: 100, polarity: Polarity::BrightForeground };
        for f in Flip::ALL {
            assert_eq!(
                seg.segment(&frame.flipped(f)).unwrap(),
                seg.segment(&frame).unwrap().flipped(f)
            );
        }
    }

    #[test]
    fn precomputed_passes_stored_mask_through() {
        let dir = tempfile::tempdir().unwrap();
        let stored = SoftMask::new(2, 2, vec![0.0, 0.125, 0.5, 1.0]).unwrap();
        write_soft_mask_f32(&dir.path().join("mask_0.f32"), &stored).unwrap();
        write_gray(&dir.path().join("mask_1.png"), 2, 2, &[0, 255, 51, 0]).unwrap();
        let spec = SegmenterSpec::precomputed(dir.path());
        let frame0 = GrayFrame::filled(2, 2, 0, 0).unwrap();
        assert_eq!(segment(&frame0, &spec).unwrap(), stored);
        let frame1 = GrayFrame::filled(2, 2, 0, 1).unwrap();
        assert_eq!(segment(&frame1, &spec).unwrap().probabilities(), &[0.0, 1.0, 0.2, 0.0]);
    }

    #[test]
    fn precomputed_matches_by_position_not_name() {
        let dir = tempfile::tempdir().unwrap();
        write_gray(&dir.path().join("m_100.png"), 1, 1, &[255]).unwrap();
        write_gray(&dir.path().join("m_7.png"), 1, 1, &[0]).unwrap();
        let seg = PrecomputedSegmenter::open(dir.path()).unwrap();
        let f0 = GrayFrame::filled(1, 1, 0, 0).unwrap();
        assert_eq!(seg.segment(&f0).unwrap().probabilities(), &[0.0]);
    }

    #[test]
    fn precomputed_missing_and_mismatched_masks() {
        let dir = tempfile::tempdir().unwrap();
        for i in 0..3 {
            write_gray(&dir.path().join(format!("{i}.png")), 2, 2, &[0; 4]).unwrap();
        }
        let seg = PrecomputedSegmenter::open(dir.path()).unwrap();
        let frame3 = GrayFrame::filled(2, 2, 0, 3).unwrap();
        assert!(matches!(seg.segment(&frame3), Err(SegmentError::MissingMask(3))));
        let big = GrayFrame::filled(3, 3, 0, 1).unwrap();
        assert!(matches!(
            seg.segment(&big),
            Err(SegmentError::DimensionMismatch { frame: 1, .. })
        ));
    }

    #[test]
    fn precomputed_spec_without_dir_is_rejected() {
        let mut spec = SegmenterSpec::precomputed("x");
        spec.mask_dir = None;
        assert!(matches!(spec.build(), Err(SegmentError::MissingMaskDir)));
    }
}
