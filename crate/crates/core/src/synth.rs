//! Synthetic beating ventricle with analytically known geometry.
//!
//! Each frame is a solid rotated ellipse whose axes follow
//! `mid + half_range · cos(2πt / period)`, so frame 0 is end-diastole and
//! frame `period / 2` is end-systole. Frames carry optional Gaussian
//! intensity noise; the ground-truth masks never do.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;
use thiserror::Error;

use crate::cardiac::{
    ejection_fraction, fractional_shortening, stroke_volume, volume_spheroid, write_report_csv, CardiacReport,
    VolumeUnits,
};
use crate::imaging::io::{write_binary_mask, write_frame};
use crate::imaging::{BinaryMask, GrayFrame, ImagingError};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic heart spec: {0}")]
    SpecInvalid(String),
    #[error("{0} already contains files from a different run")]
    StaleOutput(PathBuf),
    #[error("I/O failure: {0}")]
    IoFailure(String),
}

impl From<ImagingError> for SynthError {
    fn from(e: ImagingError) -> Self {
        SynthError::IoFailure(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthHeartSpec {
    pub width: usize,
    pub height: usize,
    pub dl_ed: f64,
    pub ds_ed: f64,
    pub dl_es: f64,
    pub ds_es: f64,
    pub period_frames: usize,
    pub n_cycles: usize,
    /// Rotation of the long axis from the +x axis, in degrees.
    pub orientation_deg: f64,
    pub center: (f64, f64),
    pub fg_intensity: u8,
    pub bg_intensity: u8,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthHeartSpec {
    /// ED axes 200/120 px, ES 170/90 px (EF 52.1875%), 50-frame period,
    /// 4 cycles, centered in a 512×480 frame.
    fn default() -> Self {
        Self {
            width: 512,
            height: 480,
            dl_ed: 200.0,
            ds_ed: 120.0,
            dl_es: 170.0,
            ds_es: 90.0,
            period_frames: 50,
            n_cycles: 4,
            orientation_deg: 0.0,
            center: (255.5, 239.5),
            fg_intensity: 200,
            bg_intensity: 50,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

/// A parsed spec file; `fps` is set when the file names one.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthFile {
    pub spec: SynthHeartSpec,
    pub fps: Option<f64>,
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, SynthError> {
    value
        .parse()
        .map_err(|_| SynthError::SpecInvalid(format!("bad value {value:?} for {key}")))
}

impl SynthHeartSpec {
    /// Parse `key = value` lines over the defaults. `#` starts a comment.
    /// Without an explicit center the ellipse is centered in the frame.
    pub fn parse(text: &str) -> Result<SynthFile, SynthError> {
        let mut spec = SynthHeartSpec::default();
        let mut fps = None;
        let (mut cx, mut cy) = (None, None);
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| SynthError::SpecInvalid(format!("line {}: expected key = value", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "width" => spec.width = parse_value(key, value)?,
                "height" => spec.height = parse_value(key, value)?,
                "dl_ed" => spec.dl_ed = parse_value(key, value)?,
                "ds_ed" => spec.ds_ed = parse_value(key, value)?,
                "dl_es" => spec.dl_es = parse_value(key, value)?,
                "ds_es" => spec.ds_es = parse_value(key, value)?,
                "period_frames" => spec.period_frames = parse_value(key, value)?,
                "n_cycles" => spec.n_cycles = parse_value(key, value)?,
                "orientation_deg" => spec.orientation_deg = parse_value(key, value)?,
                "center_x" => cx = Some(parse_value(key, value)?),
                "center_y" => cy = Some(parse_value(key, value)?),
                "center" => {
                    let (x, y) = value
                        .split_once(',')
                        .ok_or_else(|| SynthError::SpecInvalid("center must be x, y".into()))?;
                    cx = Some(parse_value(key, x.trim())?);
                    cy = Some(parse_value(key, y.trim())?);
                }
                "fg_intensity" => spec.fg_intensity = parse_value(key, value)?,
                "bg_intensity" => spec.bg_intensity = parse_value(key, value)?,
                "noise_sigma" => spec.noise_sigma = parse_value(key, value)?,
                "seed" => spec.seed = parse_value(key, value)?,
                "fps" => fps = Some(parse_value(key, value)?),
                other => return Err(SynthError::SpecInvalid(format!("unknown key {other:?}"))),
            }
        }
        let middle = spec.frame_center();
        spec.center = (cx.unwrap_or(middle.0), cy.unwrap_or(middle.1));
        spec.validate()?;
        Ok(SynthFile { spec, fps })
    }

    fn frame_center(&self) -> (f64, f64) {
        ((self.width as f64 - 1.0) / 2.0, (self.height as f64 - 1.0) / 2.0)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: String| Err(SynthError::SpecInvalid(msg));
        if self.width == 0 || self.height == 0 {
            return bad("frame dimensions must be positive".into());
        }
        if !(self.ds_ed > 0.0 && self.dl_ed >= self.ds_ed) {
            return bad(format!("ED axes must satisfy dl_ed >= ds_ed > 0 ({} / {})", self.dl_ed, self.ds_ed));
        }
        if !(self.ds_es > 0.0 && self.dl_es >= self.ds_es) {
            return bad(format!("ES axes must satisfy dl_es >= ds_es > 0 ({} / {})", self.dl_es, self.ds_es));
        }
        if self.dl_es > self.dl_ed || self.ds_es > self.ds_ed {
            return bad("ES axes must not exceed ED axes".into());
        }
        if self.period_frames < 4 {
            return bad(format!("period_frames must be >= 4, got {}", self.period_frames));
        }
        if self.n_cycles < 1 {
            return bad("n_cycles must be >= 1".into());
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return bad(format!("noise_sigma must be >= 0, got {}", self.noise_sigma));
        }
        if !self.orientation_deg.is_finite() {
            return bad("orientation_deg must be finite".into());
        }
        let (s, c) = self.orientation_deg.to_radians().sin_cos();
        let (a, b) = (self.dl_ed / 2.0, self.ds_ed / 2.0);
        let ext_x = ((a * c).powi(2) + (b * s).powi(2)).sqrt();
        let ext_y = ((a * s).powi(2) + (b * c).powi(2)).sqrt();
        let (cx, cy) = self.center;
        if cx - ext_x < 0.0
            || cy - ext_y < 0.0
            || cx + ext_x > (self.width - 1) as f64
            || cy + ext_y > (self.height - 1) as f64
        {
            return bad("ellipse does not fit inside the frame at end-diastole".into());
        }
        Ok(())
    }

    pub fn frame_count(&self) -> usize {
        self.period_frames * self.n_cycles
    }

    /// `(long, short)` axis lengths at frame `t`.
    pub fn axes_at(&self, t: usize) -> (f64, f64) {
        let c = (2.0 * PI * t as f64 / self.period_frames as f64).cos();
        let interp = |ed: f64, es: f64| (ed + es) / 2.0 + (ed - es) / 2.0 * c;
        (interp(self.dl_ed, self.dl_es), interp(self.ds_ed, self.ds_es))
    }

    pub fn truth_mask(&self, t: usize) -> BinaryMask {
        let (dl, ds) = self.axes_at(t);
        rasterize_ellipse(self.width, self.height, self.center, dl, ds, self.orientation_deg)
    }

    /// Frame `t` with noise drawn from a generator seeded by `seed ^ t`.
    pub fn render_frame(&self, t: usize) -> GrayFrame {
        let mask = self.truth_mask(t);
        let (fg, bg) = (f64::from(self.fg_intensity), f64::from(self.bg_intensity));
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ t as u64);
        let noise = (self.noise_sigma > 0.0)
            .then(|| Normal::new(0.0, self.noise_sigma).expect("validated sigma"));
        let pixels = mask
            .membership()
            .iter()
            .map(|&inside| {
                let base = if inside { fg } else { bg };
                let value = match &noise {
                    Some(n) => base + rng.sample(n),
                    None => base,
                };
                value.round().clamp(0.0, 255.0) as u8
            })
            .collect();
        GrayFrame::new(self.width, self.height, pixels, t).expect("validated dimensions")
    }
}

/// Center-of-pixel rasterization of a solid ellipse with full axis lengths
/// `dl` (along `orientation_deg`) and `ds`.
pub fn rasterize_ellipse(
    width: usize,
    height: usize,
    center: (f64, f64),
    dl: f64,
    ds: f64,
    orientation_deg: f64,
) -> BinaryMask {
    let (s, c) = orientation_deg.to_radians().sin_cos();
    let (a, b) = (dl / 2.0, ds / 2.0);
    BinaryMask::from_fn(width, height, |x, y| {
        let (dx, dy) = (x as f64 - center.0, y as f64 - center.1);
        let u = dx * c + dy * s;
        let v = -dx * s + dy * c;
        (u / a).powi(2) + (v / b).powi(2) <= 1.0
    })
    .expect("positive dimensions")
}

/// Closed-form report for the spec: spheroid volumes from the ED/ES axes,
/// long-axis FS, and `HR = 60 · fps / period`.
pub fn analytic_report(spec: &SynthHeartSpec, fps: f64) -> CardiacReport {
    let edv = volume_spheroid(spec.dl_ed, spec.ds_ed).expect("validated axes");
    let esv = volume_spheroid(spec.dl_es, spec.ds_es).expect("validated axes");
    let sv = stroke_volume(edv, esv).expect("ES axes within ED axes");
    let ef = ejection_fraction(edv, esv).expect("positive EDV");
    let hr = 60.0 * fps / spec.period_frames as f64;
    CardiacReport {
        n_frames: spec.frame_count(),
        ed_frame: 0,
        es_frame: spec.period_frames / 2,
        ed_area: PI / 4.0 * spec.dl_ed * spec.ds_ed,
        es_area: PI / 4.0 * spec.dl_es * spec.ds_es,
        dl_ed: spec.dl_ed,
        ds_ed: spec.ds_ed,
        dl_es: spec.dl_es,
        ds_es: spec.ds_es,
        edv,
        esv,
        sv,
        ef_pct: ef,
        ef_pct_eq2: Some(ef),
        // The ideal ellipse area makes the area-length volume identical.
        ef_pct_eq3: Some(ef),
        fs: Some(fractional_shortening(spec.dl_ed, spec.dl_es).expect("validated axes")),
        hr_bpm: Some(hr),
        co: Some(sv * hr),
        volume_units: VolumeUnits::CubicPixels,
        per_beat_ef: None,
        markers: None,
        excluded_frames: Vec::new(),
        warnings: vec!["analytic".to_string(), "uncalibrated volumes in px^3".to_string()],
    }
}

fn ensure_dir(dir: &Path) -> Result<(), SynthError> {
    fs::create_dir_all(dir).map_err(|e| SynthError::IoFailure(format!("{}: {e}", dir.display())))
}

/// Refuse to mix outputs with leftovers of a longer or differently named run.
fn check_no_stale(dir: &Path, expected: &[PathBuf]) -> Result<(), SynthError> {
    let entries = fs::read_dir(dir).map_err(|e| SynthError::IoFailure(format!("{}: {e}", dir.display())))?;
    for entry in entries.flatten() {
        let path = entry.path();
        if !expected.contains(&path) {
            return Err(SynthError::StaleOutput(path));
        }
    }
    Ok(())
}

/// Write `frames/`, `truth/` and `expected.csv` under `out_dir`; returns the
/// number of frames written.
pub fn generate_sequence(spec: &SynthHeartSpec, fps: f64, out_dir: &Path) -> Result<usize, SynthError> {
    spec.validate()?;
    if !(fps > 0.0) || !fps.is_finite() {
        return Err(SynthError::SpecInvalid(format!("fps must be positive, got {fps}")));
    }
    let n = spec.frame_count();
    let digits = n.saturating_sub(1).to_string().len().max(4);
    let frames_dir = out_dir.join("frames");
    let truth_dir = out_dir.join("truth");
    ensure_dir(&frames_dir)?;
    ensure_dir(&truth_dir)?;
    let frame_paths: Vec<PathBuf> = (0..n)
        .map(|t| frames_dir.join(format!("frame_{t:0digits$}.png")))
        .collect();
    let truth_paths: Vec<PathBuf> = (0..n)
        .map(|t| truth_dir.join(format!("mask_{t:0digits$}.png")))
        .collect();
    check_no_stale(&frames_dir, &frame_paths)?;
    check_no_stale(&truth_dir, &truth_paths)?;

    (0..n).into_par_iter().try_for_each(|t| -> Result<(), SynthError> {
        write_frame(&frame_paths[t], &spec.render_frame(t))?;
        write_binary_mask(&truth_paths[t], &spec.truth_mask(t))?;
        Ok(())
    })?;

    let report = analytic_report(spec, fps);
    let mut buf = Vec::new();
    write_report_csv(&mut buf, [("synth", &report)]).map_err(|e| SynthError::IoFailure(e.to_string()))?;
    let expected = out_dir.join("expected.csv");
    fs::write(&expected, buf).map_err(|e| SynthError::IoFailure(format!("{}: {e}", expected.display())))?;
    Ok(n)
}
