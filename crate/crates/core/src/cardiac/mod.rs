//! Cardiac indices from ventricle geometry.
//!
//! Diameters give fractional shortening; ventricle volume is estimated either
//! as a prolate spheroid from the two diameters or from the 2D area and the
//! long axis. End-diastolic and end-systolic volumes then give stroke volume,
//! ejection fraction and, with a heart rate, cardiac output.

use std::f64::consts::PI;

use thiserror::Error;

mod beats;
mod report;

pub use beats::{
    detect_beats, dominant_period, global_extrema, heart_rate, moving_average, AreaSeries, BeatError,
    BeatMarkers,
};
pub use report::{build_report, read_report_rows, write_report_csv, CardiacReport, REPORT_HEADER};

pub const DEFAULT_FPS: f64 = 250.0;

#[derive(Debug, Error, PartialEq)]
pub enum CardiacError {
    #[error("diastolic diameter must be positive (got {0})")]
    NonPositiveDiastolicDiameter(f64),
    #[error("systolic diameter {systolic} is negative or exceeds diastolic diameter {diastolic}")]
    SystolicExceedsDiastolic { diastolic: f64, systolic: f64 },
    #[error("axis lengths must be positive (got {0})")]
    NonPositiveAxis(f64),
    #[error("long axis {long} is shorter than short axis {short}")]
    AxisOrderViolation { long: f64, short: f64 },
    #[error("area must be positive (got {0})")]
    NonPositiveArea(f64),
    #[error("volume must be non-negative (got {0})")]
    NegativeVolume(f64),
    #[error("end-systolic volume {esv} exceeds end-diastolic volume {edv}")]
    NegativeStrokeVolume { edv: f64, esv: f64 },
    #[error("end-diastolic volume must be positive")]
    ZeroEdv,
    #[error("cardiac output needs a heart rate")]
    MissingHeartRate,
    #[error("heart rate must be positive (got {0})")]
    NonPositiveHeartRate(f64),
    #[error("no frame produced a ventricle mask")]
    NoValidFrames,
    #[error("{empty} of {total} frames have an empty ventricle mask")]
    TooManyEmptyFrames { empty: usize, total: usize },
    #[error("invalid calibration: {0}")]
    InvalidConfig(String),
}

/// `(D_d − D_s) / D_d`.
pub fn fractional_shortening(d_d: f64, d_s: f64) -> Result<f64, CardiacError> {
    if !(d_d > 0.0) {
        return Err(CardiacError::NonPositiveDiastolicDiameter(d_d));
    }
    if !(0.0..=d_d).contains(&d_s) {
        return Err(CardiacError::SystolicExceedsDiastolic {
            diastolic: d_d,
            systolic: d_s,
        });
    }
    Ok((d_d - d_s) / d_d)
}

/// Prolate spheroid volume `π/6 · D_L · D_S²`.
pub fn volume_spheroid(d_l: f64, d_s: f64) -> Result<f64, CardiacError> {
    for d in [d_l, d_s] {
        if !(d > 0.0) {
            return Err(CardiacError::NonPositiveAxis(d));
        }
    }
    if d_l < d_s {
        return Err(CardiacError::AxisOrderViolation { long: d_l, short: d_s });
    }
    Ok(PI / 6.0 * d_l * d_s * d_s)
}

/// Area-length volume `8 / (3π · D_L) · A²`.
pub fn volume_area(area: f64, d_l: f64) -> Result<f64, CardiacError> {
    if !(area > 0.0) {
        return Err(CardiacError::NonPositiveArea(area));
    }
    if !(d_l > 0.0) {
        return Err(CardiacError::NonPositiveAxis(d_l));
    }
    Ok(8.0 * area * area / (3.0 * PI * d_l))
}

pub fn stroke_volume(edv: f64, esv: f64) -> Result<f64, CardiacError> {
    if esv < 0.0 {
        return Err(CardiacError::NegativeVolume(esv));
    }
    if esv > edv {
        return Err(CardiacError::NegativeStrokeVolume { edv, esv });
    }
    Ok(edv - esv)
}

/// Ejection fraction in percent, `100 · (EDV − ESV) / EDV`.
pub fn ejection_fraction(edv: f64, esv: f64) -> Result<f64, CardiacError> {
    if !(edv > 0.0) {
        return Err(CardiacError::ZeroEdv);
    }
    Ok(100.0 * stroke_volume(edv, esv)? / edv)
}

/// Stroke volume times heart rate, in the stroke volume's unit per minute.
pub fn cardiac_output(sv: f64, hr_bpm: Option<f64>) -> Result<f64, CardiacError> {
    let hr = hr_bpm.ok_or(CardiacError::MissingHeartRate)?;
    if !(hr > 0.0) {
        return Err(CardiacError::NonPositiveHeartRate(hr));
    }
    if sv < 0.0 {
        return Err(CardiacError::NegativeVolume(sv));
    }
    Ok(sv * hr)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VolumeMethod {
    /// Prolate spheroid from both diameters.
    Spheroid,
    /// Area-length from 2D area and long axis.
    AreaLength,
    /// Both; the spheroid volume drives EDV/ESV/SV.
    #[default]
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FsAxis {
    #[default]
    Long,
    Short,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeUnits {
    CubicPixels,
    Nanoliters,
}

impl VolumeUnits {
    pub fn label(self) -> &'static str {
        match self {
            VolumeUnits::CubicPixels => "px^3",
            VolumeUnits::Nanoliters => "nL",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationConfig {
    pub fps: f64,
    pub microns_per_pixel: Option<f64>,
    /// Odd width of the centered moving average applied before beat detection.
    pub smoothing_window: usize,
    pub volume_method: VolumeMethod,
    pub fs_axis: FsAxis,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            fps: DEFAULT_FPS,
            microns_per_pixel: None,
            smoothing_window: 3,
            volume_method: VolumeMethod::Both,
            fs_axis: FsAxis::Long,
        }
    }
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<(), CardiacError> {
        if !(self.fps > 0.0) || !self.fps.is_finite() {
            return Err(CardiacError::InvalidConfig(format!("fps must be positive, got {}", self.fps)));
        }
        if self.smoothing_window == 0 || self.smoothing_window.is_multiple_of(2) {
            return Err(CardiacError::InvalidConfig(format!(
                "smoothing window must be odd, got {}",
                self.smoothing_window
            )));
        }
        if let Some(um) = self.microns_per_pixel {
            if !(um > 0.0) || !um.is_finite() {
                return Err(CardiacError::InvalidConfig(format!(
                    "microns per pixel must be positive, got {um}"
                )));
            }
        }
        Ok(())
    }

    pub fn volume_units(&self) -> VolumeUnits {
        match self.microns_per_pixel {
            Some(_) => VolumeUnits::Nanoliters,
            None => VolumeUnits::CubicPixels,
        }
    }

    /// Factor converting px³ to the report's volume unit (1 nL = 10⁶ µm³).
    pub fn volume_scale(&self) -> f64 {
        match self.microns_per_pixel {
            Some(um) => um.powi(3) / 1e6,
            None => 1.0,
        }
    }
}
