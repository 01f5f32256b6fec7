//! Test-time augmentation over the flip group.
//!
//! The segmenter sees the frame through each of the four flips, every
//! prediction is mapped back to the frame's orientation, the four are averaged
//! per pixel, and the average is thresholded (0.2 by default, inclusive).
//! Because the views form a group, the ensemble commutes with every flip even
//! when the segmenter itself does not.

use thiserror::Error;

use crate::imaging::{binarize, BinaryMask, Flip, Flippable, GrayFrame, SoftMask};
use crate::segmentation::{SegmentError, Segmenter};

pub const DEFAULT_TTA_THRESHOLD: f64 = 0.2;

#[derive(Debug, Error)]
pub enum TtaError {
    #[error("cannot average an empty list of masks")]
    EmptyList,
    #[error("mask {index} is {found:?}, expected {expected:?}")]
    DimensionMismatch {
        index: usize,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("threshold {0} is outside [0, 1]")]
    InvalidThreshold(f64),
    #[error(transparent)]
    Segment(#[from] SegmentError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TtaConfig {
    pub enabled: bool,
    pub threshold: f64,
}

impl Default for TtaConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            threshold: DEFAULT_TTA_THRESHOLD,
        }
    }
}

impl TtaConfig {
    /// The view set is fixed to the whole flip group.
    pub const TRANSFORMS: [Flip; 4] = Flip::ALL;

    pub fn with_threshold(threshold: f64) -> Result<Self, TtaError> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(TtaError::InvalidThreshold(threshold));
        }
        Ok(Self {
            enabled: true,
            threshold,
        })
    }
}

/// Per-pixel arithmetic mean of equally sized soft masks.
///
/// Each pixel's values are summed in ascending order, so the result does not
/// depend on the order of `masks`.
pub fn ensemble_average(masks: &[SoftMask]) -> Result<SoftMask, TtaError> {
    let first = masks.first().ok_or(TtaError::EmptyList)?;
    let dims = first.dims();
    if let Some((index, m)) = masks.iter().enumerate().find(|(_, m)| m.dims() != dims) {
        return Err(TtaError::DimensionMismatch {
            index,
            expected: dims,
            found: m.dims(),
        });
    }
    let count = masks.len() as f64;
    let mut column = Vec::with_capacity(masks.len());
    let probs = (0..dims.0 * dims.1)
        .map(|i| {
            column.clear();
            column.extend(masks.iter().map(|m| m.probabilities()[i]));
            column.sort_by(f64::total_cmp);
            column.iter().sum::<f64>() / count
        })
        .collect();
    Ok(SoftMask::new(dims.0, dims.1, probs).expect("mean of probabilities stays in [0, 1]"))
}

/// The four view predictions mapped back to the frame's orientation, in the
/// order of [`TtaConfig::TRANSFORMS`].
pub fn tta_views(frame: &GrayFrame, segmenter: &dyn Segmenter) -> Result<Vec<SoftMask>, TtaError> {
    TtaConfig::TRANSFORMS
        .iter()
        .map(|&view| Ok(segmenter.segment_view(frame, view)?.flipped(view.inverse())))
        .collect()
}

/// Segment `frame` with flip-group TTA and threshold the averaged prediction.
///
/// With `cfg.enabled == false` the single identity prediction is thresholded
/// at `cfg.threshold` instead.
pub fn tta_segment(
    frame: &GrayFrame,
    segmenter: &dyn Segmenter,
    cfg: &TtaConfig,
) -> Result<BinaryMask, TtaError> {
    if !(0.0..=1.0).contains(&cfg.threshold) {
        return Err(TtaError::InvalidThreshold(cfg.threshold));
    }
    let soft = if cfg.enabled {
        ensemble_average(&tta_views(frame, segmenter)?)?
    } else {
        segmenter.segment(frame)?
    };
    Ok(binarize(&soft, cfg.threshold, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmentation::{IntensitySegmenter, Polarity};

    /// Predicts `value` everywhere for the unflipped frame and zero for
    /// every other view.
    struct IdentityOnly(f64);

    impl Segmenter for IdentityOnly {
        fn segment(&self, frame: &GrayFrame) -> Result<SoftMask, SegmentError> {
            Ok(SoftMask::filled(frame.width(), frame.height(), self.0)?)
        }

        fn segment_view(&self, frame: &GrayFrame, view: Flip) -> Result<SoftMask, SegmentError> {
            let v = if view == Flip::Identity { self.0 } else { 0.0 };
            Ok(SoftMask::filled(frame.width(), frame.height(), v)?)
        }
    }

    #[test]
    fn average_of_identical_masks_is_that_mask() {
        let m = SoftMask::filled(3, 3, 0.5).unwrap();
        let avg = ensemble_average(&[m.clone(), m.clone(), m.clone(), m.clone()]).unwrap();
        assert_eq!(avg, m);
        assert_eq!(ensemble_average(std::slice::from_ref(&m)).unwrap(), m);
    }

    #[test]
    fn one_confident_view_averages_to_exactly_point_two() {
        let masks: Vec<_> = [0.8, 0.0, 0.0, 0.0]
            .iter()
            .map(|&v| SoftMask::filled(1, 1, v).unwrap())
            .collect();
        assert_eq!(ensemble_average(&masks).unwrap().probabilities(), &[0.2]);
    }

    #[test]
    fn average_errors() {
        assert!(matches!(ensemble_average(&[]), Err(TtaError::EmptyList)));
        let a = SoftMask::filled(2, 2, 0.0).unwrap();
        let b = SoftMask::filled(2, 3, 0.0).unwrap();
        assert!(matches!(
            ensemble_average(&[a, b]),
            Err(TtaError::DimensionMismatch { index: 1, .. })
        ));
    }

    #[test]
    fn identity_only_point_eight_survives_threshold() {
        let frame = GrayFrame::filled(4, 4, 0, 0).unwrap();
        let out = tta_segment(&frame, &IdentityOnly(0.8), &TtaConfig::default()).unwrap();
        assert_eq!(out.foreground_count(), 16);
        let out = tta_segment(&frame, &IdentityOnly(0.79), &TtaConfig::default()).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn all_zero_views_give_empty_mask() {
        let frame = GrayFrame::filled(4, 4, 0, 0).unwrap();
        let out = tta_segment(&frame, &IdentityOnly(0.0), &TtaConfig::default()).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn equivariant_segmenter_makes_tta_a_no_op() {
        let frame = GrayFrame::new(3, 2, vec![10, 200, 90, 140, 0, 255], 0).unwrap();
        let seg = IntensitySegmenter { threshold: 100, polarity: Polarity::BrightForeground };
        let single = binarize(&seg.segment(&frame).unwrap(), 0.2, true);
        assert_eq!(tta_segment(&frame, &seg, &TtaConfig::default()).unwrap(), single);
    }

    #[test]
    fn disabled_config_uses_single_view() {
        let frame = GrayFrame::filled(2, 2, 0, 0).unwrap();
        let cfg = TtaConfig { enabled: false, threshold: 0.5 };
        assert_eq!(tta_segment(&frame, &IdentityOnly(0.6), &cfg).unwrap().foreground_count(), 4);
    }

    #[test]
    fn threshold_validation() {
        assert!(TtaConfig::with_threshold(1.2).is_err());
        assert!(TtaConfig::with_threshold(0.2).is_ok());
    }
}
