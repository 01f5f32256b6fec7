//! End-diastole / end-systole detection on the ventricle area series.

use thiserror::Error;

use super::{CalibrationConfig, CardiacError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeatError {
    #[error("beat detection needs at least 3 frames, got {0}")]
    SeriesTooShort(usize),
    #[error("ventricle area is constant across the series")]
    ConstantSeries,
    #[error("no complete beat found (global ED frame {global_ed}, global ES frame {global_es})")]
    NoCompleteBeat { global_ed: usize, global_es: usize },
    #[error("heart rate needs at least 2 end-diastole markers, found {0}")]
    InsufficientBeats(usize),
}

/// Ventricle area per analyzed frame.
///
/// Frames whose mask was empty are left out; `frames` keeps the original frame
/// index of every sample so marker positions still refer to the video.
#[derive(Debug, Clone, PartialEq)]
pub struct AreaSeries {
    frames: Vec<usize>,
    areas: Vec<f64>,
    fps: f64,
}

impl AreaSeries {
    pub fn new(areas: Vec<f64>, fps: f64) -> Result<Self, CardiacError> {
        let frames = (0..areas.len()).collect();
        Self::with_frames(frames, areas, fps)
    }

    pub fn with_frames(frames: Vec<usize>, areas: Vec<f64>, fps: f64) -> Result<Self, CardiacError> {
        if frames.len() != areas.len() {
            return Err(CardiacError::InvalidConfig(format!(
                "{} frame indices for {} areas",
                frames.len(),
                areas.len()
            )));
        }
        if frames.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CardiacError::InvalidConfig("frame indices must increase".into()));
        }
        if let Some(&a) = areas.iter().find(|&&a| !(a > 0.0) || !a.is_finite()) {
            return Err(CardiacError::NonPositiveArea(a));
        }
        if !(fps > 0.0) {
            return Err(CardiacError::InvalidConfig(format!("fps must be positive, got {fps}")));
        }
        Ok(Self { frames, areas, fps })
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn frames(&self) -> &[usize] {
        &self.frames
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn len(&self) -> usize {
        self.areas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.areas.is_empty()
    }
}

/// Detected cardiac phases, as original frame indices.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatMarkers {
    /// Local area maxima.
    pub ed_frames: Vec<usize>,
    /// Local area minima.
    pub es_frames: Vec<usize>,
    /// Frame of the largest raw area.
    pub global_ed: usize,
    /// Frame of the smallest raw area.
    pub global_es: usize,
    /// Dominant period in samples, if one was found.
    pub period: Option<usize>,
}

/// Centered moving average; the window shrinks symmetrically at the edges.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let n = values.len();
    (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            let span = &values[i - h..=i + h];
            span.iter().sum::<f64>() / span.len() as f64
        })
        .collect()
}

/// Positions of the first maximum and first minimum.
pub fn global_extrema(values: &[f64]) -> (usize, usize) {
    let mut hi = 0;
    let mut lo = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[hi] {
            hi = i;
        }
        if v < values[lo] {
            lo = i;
        }
    }
    (hi, lo)
}

/// Dominant period from the autocorrelation of the mean-removed series: the
/// first positive local maximum after the autocorrelation turns negative.
pub fn dominant_period(values: &[f64]) -> Option<usize> {
    let n = values.len();
    if n < 4 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let energy: f64 = centered.iter().map(|d| d * d).sum();
    if energy <= 0.0 {
        return None;
    }
    let acf: Vec<f64> = (0..n - 1)
        .map(|lag| {
            centered[..n - lag]
                .iter()
                .zip(&centered[lag..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / energy
        })
        .collect();
    let first_negative = acf.iter().position(|&r| r < 0.0)?;
    (first_negative.max(1)..acf.len() - 1)
        .find(|&k| acf[k] > 0.0 && acf[k] >= acf[k - 1] && acf[k] > acf[k + 1])
}

/// Interior samples that dominate every sample within `guard` positions:
/// strictly above those on the left, at least equal to those on the right
/// (so a flat top counts once, at its first sample).
fn guarded_peaks(values: &[f64], guard: usize) -> Vec<usize> {
    let n = values.len();
    (1..n.saturating_sub(1))
        .filter(|&i| {
            let v = values[i];
            let lo = i.saturating_sub(guard);
            let hi = (i + guard).min(n - 1);
            values[lo..i].iter().all(|&u| v > u) && values[i + 1..=hi].iter().all(|&u| v >= u)
        })
        .collect()
}

/// Locate end-diastole (area maxima) and end-systole (area minima).
///
/// The series is smoothed with `cfg.smoothing_window`; an extremum must
/// dominate its neighbors within a guard distance of a quarter of the
/// dominant period (at least 2 samples). Global ED/ES come from the raw
/// areas, first occurrence on ties.
pub fn detect_beats(series: &AreaSeries, cfg: &CalibrationConfig) -> Result<BeatMarkers, BeatError> {
    let n = series.len();
    if n < 3 {
        return Err(BeatError::SeriesTooShort(n));
    }
    let raw = series.areas();
    let (ed_pos, es_pos) = global_extrema(raw);
    if raw[ed_pos] == raw[es_pos] {
        return Err(BeatError::ConstantSeries);
    }
    let frames = series.frames();
    let global_ed = frames[ed_pos];
    let global_es = frames[es_pos];

    let smoothed = moving_average(raw, cfg.smoothing_window.max(1));
    let period = dominant_period(&smoothed);
    let guard = period.map_or(2, |p| (p / 4).max(2));

    let ed: Vec<usize> = guarded_peaks(&smoothed, guard).into_iter().map(|i| frames[i]).collect();
    let negated: Vec<f64> = smoothed.iter().map(|v| -v).collect();
    let es: Vec<usize> = guarded_peaks(&negated, guard).into_iter().map(|i| frames[i]).collect();

    if ed.is_empty() || es.is_empty() {
        return Err(BeatError::NoCompleteBeat { global_ed, global_es });
    }
    Ok(BeatMarkers {
        ed_frames: ed,
        es_frames: es,
        global_ed,
        global_es,
        period,
    })
}

/// Beats per minute from the mean ED-to-ED interval.
pub fn heart_rate(markers: &BeatMarkers, fps: f64) -> Result<f64, BeatError> {
    let ed = &markers.ed_frames;
    if ed.len() < 2 {
        return Err(BeatError::InsufficientBeats(ed.len()));
    }
    // Consecutive intervals telescope to (last - first).
    let mean_interval = (ed[ed.len() - 1] - ed[0]) as f64 / (ed.len() - 1) as f64;
    Ok(60.0 * fps / mean_interval)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn series(areas: Vec<f64>) -> AreaSeries {
        AreaSeries::new(areas, 250.0).unwrap()
    }

    fn sinusoid(period: f64, cycles: usize, amplitude: f64, phase: f64) -> Vec<f64> {
        let n = (period * cycles as f64) as usize;
        (0..n)
            .map(|t| 1000.0 * (1.0 + amplitude * (2.0 * PI * t as f64 / period + phase).sin()))
            .collect()
    }

    #[test]
    fn moving_average_shrinks_at_edges() {
        let v = [1.0, 2.0, 6.0, 4.0, 5.0];
        assert_eq!(moving_average(&v, 3), vec![1.0, 3.0, 4.0, 5.0, 5.0]);
        assert_eq!(moving_average(&v, 1), v.to_vec());
    }

    #[test]
    fn sinusoid_gives_four_evenly_spaced_end_diastoles() {
        let s = series(sinusoid(50.0, 4, 0.2, 0.0));
        let m = detect_beats(&s, &CalibrationConfig::default()).unwrap();
        assert_eq!(m.ed_frames.len(), 4, "{:?}", m.ed_frames);
        for w in m.ed_frames.windows(2) {
            assert!((w[1] - w[0]).abs_diff(50) <= 1, "{:?}", m.ed_frames);
        }
        assert_eq!(m.es_frames.len(), 4, "{:?}", m.es_frames);
        assert!(m.period.is_some_and(|p| p.abs_diff(50) <= 1), "{:?}", m.period);
    }

    #[test]
    fn noisy_sinusoid_has_no_double_peaks() {
        // Deterministic high-frequency ripple on top of the beat.
        let areas: Vec<f64> = sinusoid(40.0, 5, 0.15, 0.3)
            .iter()
            .enumerate()
            .map(|(i, a)| a + 12.0 * ((i * 7919 % 13) as f64 - 6.0))
            .collect();
        let m = detect_beats(&series(areas), &CalibrationConfig::default()).unwrap();
        for w in m.ed_frames.windows(2) {
            assert!(w[1] - w[0] >= 30, "{:?}", m.ed_frames);
        }
        assert!(m.ed_frames.len() >= 4);
    }

    #[test]
    fn monotone_series_has_no_complete_beat() {
        let s = series((1..=30).map(f64::from).collect());
        assert_eq!(
            detect_beats(&s, &CalibrationConfig::default()),
            Err(BeatError::NoCompleteBeat { global_ed: 29, global_es: 0 })
        );
    }

    #[test]
    fn constant_and_short_series() {
        let s = series(vec![5.0; 10]);
        assert_eq!(detect_beats(&s, &CalibrationConfig::default()), Err(BeatError::ConstantSeries));
        let s = series(vec![5.0, 6.0]);
        assert_eq!(detect_beats(&s, &CalibrationConfig::default()), Err(BeatError::SeriesTooShort(2)));
    }

    #[test]
    fn global_extrema_take_first_occurrence() {
        assert_eq!(global_extrema(&[3.0, 9.0, 1.0, 9.0, 1.0]), (1, 2));
    }

    #[test]
    fn markers_use_original_frame_indices() {
        let areas = sinusoid(20.0, 3, 0.3, 0.0);
        let frames: Vec<usize> = (0..areas.len()).map(|i| i + 100).collect();
        let s = AreaSeries::with_frames(frames, areas, 250.0).unwrap();
        let m = detect_beats(&s, &CalibrationConfig::default()).unwrap();
        assert!(m.ed_frames.iter().all(|&f| f >= 100));
        assert!(m.global_ed >= 100 && m.global_es >= 100);
    }

    #[test]
    fn heart_rate_examples() {
        let mk = |ed: Vec<usize>| BeatMarkers {
            ed_frames: ed,
            es_frames: vec![],
            global_ed: 0,
            global_es: 0,
            period: None,
        };
        assert_eq!(heart_rate(&mk(vec![0, 50, 100, 150]), 250.0).unwrap(), 300.0);
        assert_eq!(heart_rate(&mk(vec![0, 125]), 250.0).unwrap(), 120.0);
        assert_eq!(heart_rate(&mk(vec![7]), 250.0), Err(BeatError::InsufficientBeats(1)));
    }

    #[test]
    fn heart_rate_times_mean_period_is_sixty_fps() {
        for (ed, fps) in [(vec![3, 40, 81, 119], 250.0), (vec![0, 33, 67], 97.5)] {
            let m = BeatMarkers { ed_frames: ed.clone(), es_frames: vec![], global_ed: 0, global_es: 0, period: None };
            let diffs: Vec<f64> = ed.windows(2).map(|w| (w[1] - w[0]) as f64).collect();
            let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
            let hr = heart_rate(&m, fps).unwrap();
            assert!((hr * mean - 60.0 * fps).abs() <= 1e-12 * 60.0 * fps);
        }
    }

    #[test]
    fn area_series_validation() {
        assert!(AreaSeries::new(vec![1.0, 0.0], 250.0).is_err());
        assert!(AreaSeries::new(vec![1.0], 0.0).is_err());
        assert!(AreaSeries::with_frames(vec![2, 1], vec![1.0, 1.0], 250.0).is_err());
    }
}
