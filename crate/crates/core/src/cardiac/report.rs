//! Per-video report assembly and its CSV form.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::imaging::VentricleGeometry;
use crate::numfmt::sig6;

use super::beats::{detect_beats, global_extrema, heart_rate, AreaSeries, BeatError, BeatMarkers};
use super::{
    cardiac_output, ejection_fraction, fractional_shortening, stroke_volume, volume_area, volume_spheroid,
    CalibrationConfig, CardiacError, FsAxis, VolumeMethod, VolumeUnits,
};

pub const REPORT_HEADER: [&str; 20] = [
    "video_id",
    "n_frames",
    "ed_frame",
    "es_frame",
    "ed_area_px",
    "es_area_px",
    "dl_ed_px",
    "ds_ed_px",
    "dl_es_px",
    "ds_es_px",
    "edv",
    "esv",
    "sv",
    "ef_pct_eq2",
    "ef_pct_eq3",
    "fs",
    "hr_bpm",
    "co",
    "volume_units",
    "warnings",
];

/// Cardiac indices for one video.
///
/// `edv`, `esv` and `sv` come from the spheroid volume unless the config asks
/// for the area-length volume only; `ef_pct` is the matching headline EF.
#[derive(Debug, Clone, PartialEq)]
pub struct CardiacReport {
    pub n_frames: usize,
    pub ed_frame: usize,
    pub es_frame: usize,
    pub ed_area: f64,
    pub es_area: f64,
    pub dl_ed: f64,
    pub ds_ed: f64,
    pub dl_es: f64,
    pub ds_es: f64,
    pub edv: f64,
    pub esv: f64,
    pub sv: f64,
    pub ef_pct: f64,
    pub ef_pct_eq2: Option<f64>,
    pub ef_pct_eq3: Option<f64>,
    pub fs: Option<f64>,
    pub hr_bpm: Option<f64>,
    pub co: Option<f64>,
    pub volume_units: VolumeUnits,
    /// EF of each complete ED-to-ED beat, from that beat's own area extremes.
    pub per_beat_ef: Option<Vec<f64>>,
    pub markers: Option<BeatMarkers>,
    /// Frames dropped because their mask was empty.
    pub excluded_frames: Vec<usize>,
    pub warnings: Vec<String>,
}

impl CardiacReport {
    /// True when frames were dropped or no heart rate could be derived.
    pub fn is_degraded(&self) -> bool {
        !self.excluded_frames.is_empty() || self.hr_bpm.is_none()
    }

    fn csv_record(&self, video_id: &str) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(sig6).unwrap_or_default();
        vec![
            video_id.to_string(),
            self.n_frames.to_string(),
            self.ed_frame.to_string(),
            self.es_frame.to_string(),
            sig6(self.ed_area),
            sig6(self.es_area),
            sig6(self.dl_ed),
            sig6(self.ds_ed),
            sig6(self.dl_es),
            sig6(self.ds_es),
            sig6(self.edv),
            sig6(self.esv),
            sig6(self.sv),
            opt(self.ef_pct_eq2),
            opt(self.ef_pct_eq3),
            opt(self.fs),
            opt(self.hr_bpm),
            opt(self.co),
            self.volume_units.label().to_string(),
            self.warnings.join(";"),
        ]
    }
}

/// Write the header and one row per `(video_id, report)`.
pub fn write_report_csv<'a, W: Write>(
    out: W,
    rows: impl IntoIterator<Item = (&'a str, &'a CardiacReport)>,
) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for (id, report) in rows {
        w.write_record(report.csv_record(id))?;
    }
    w.flush()?;
    Ok(())
}

/// Parse a report CSV into one column-name → value map per row.
pub fn read_report_rows<R: Read>(input: R) -> csv::Result<Vec<BTreeMap<String, String>>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    r.records()
        .map(|rec| {
            let rec = rec?;
            Ok(header.iter().map(str::to_string).zip(rec.iter().map(str::to_string)).collect())
        })
        .collect()
}

struct Volumes {
    primary: VolumeKind,
    units_scale: f64,
}

#[derive(Clone, Copy)]
enum VolumeKind {
    Spheroid,
    Area,
}

impl Volumes {
    fn of(&self, kind: VolumeKind, g: &VentricleGeometry) -> Result<f64, CardiacError> {
        let px3 = match kind {
            VolumeKind::Spheroid => volume_spheroid(g.long_axis, g.short_axis)?,
            VolumeKind::Area => volume_area(g.area as f64, g.long_axis)?,
        };
        Ok(px3 * self.units_scale)
    }

    fn ef(&self, kind: VolumeKind, ed: &VentricleGeometry, es: &VentricleGeometry) -> Result<f64, CardiacError> {
        ejection_fraction(self.of(kind, ed)?, self.of(kind, es)?)
    }
}

/// Assemble the report from per-frame geometry (`None` for frames whose mask
/// was empty).
///
/// ED and ES are the frames of largest and smallest ventricle area. More than
/// 20% empty frames is an error; fewer are dropped with a warning.
pub fn build_report(
    geometries: &[Option<VentricleGeometry>],
    cfg: &CalibrationConfig,
) -> Result<CardiacReport, CardiacError> {
    cfg.validate()?;
    let n_frames = geometries.len();
    let mut warnings = Vec::new();

    let (frames, valid): (Vec<usize>, Vec<VentricleGeometry>) = geometries
        .iter()
        .enumerate()
        .filter_map(|(i, g)| g.map(|g| (i, g)))
        .unzip();
    if valid.is_empty() {
        return Err(CardiacError::NoValidFrames);
    }
    let excluded: Vec<usize> = (0..n_frames).filter(|i| geometries[*i].is_none()).collect();
    if excluded.len() * 5 > n_frames {
        return Err(CardiacError::TooManyEmptyFrames {
            empty: excluded.len(),
            total: n_frames,
        });
    }
    if !excluded.is_empty() {
        let list: Vec<String> = excluded.iter().map(usize::to_string).collect();
        warnings.push(format!("excluded empty frames {}", list.join(" ")));
    }

    let areas: Vec<f64> = valid.iter().map(|g| g.area as f64).collect();
    let series = AreaSeries::with_frames(frames.clone(), areas.clone(), cfg.fps)?;
    let (ed_pos, es_pos) = global_extrema(&areas);
    let markers = match detect_beats(&series, cfg) {
        Ok(m) => Some(m),
        Err(BeatError::SeriesTooShort(n)) => {
            warnings.push(format!("SeriesTooShort: {n} frames; global ED/ES only"));
            None
        }
        Err(BeatError::ConstantSeries) => {
            warnings.push("NoCompleteBeat: constant ventricle area".to_string());
            None
        }
        Err(e) => {
            warnings.push(format!("NoCompleteBeat: {e}"));
            None
        }
    };

    let ed = valid[ed_pos];
    let es = valid[es_pos];
    let vols = Volumes {
        primary: match cfg.volume_method {
            VolumeMethod::AreaLength => VolumeKind::Area,
            _ => VolumeKind::Spheroid,
        },
        units_scale: cfg.volume_scale(),
    };
    let edv = vols.of(vols.primary, &ed)?;
    let esv = vols.of(vols.primary, &es)?;
    let sv = stroke_volume(edv, esv)?;
    let ef_pct = ejection_fraction(edv, esv)?;
    if sv == 0.0 {
        warnings.push("zero stroke volume".to_string());
    }

    let (ef_pct_eq2, ef_pct_eq3) = match cfg.volume_method {
        VolumeMethod::Spheroid => (Some(ef_pct), None),
        VolumeMethod::AreaLength => (None, Some(ef_pct)),
        VolumeMethod::Both => {
            let eq3 = match vols.ef(VolumeKind::Area, &ed, &es) {
                Ok(v) => Some(v),
                Err(e) => {
                    warnings.push(format!("area-length EF unavailable: {e}"));
                    None
                }
            };
            (Some(ef_pct), eq3)
        }
    };

    let (d_ed, d_es) = match cfg.fs_axis {
        FsAxis::Long => (ed.long_axis, es.long_axis),
        FsAxis::Short => (ed.short_axis, es.short_axis),
    };
    let fs = match fractional_shortening(d_ed, d_es) {
        Ok(fs) => {
            if d_es == 0.0 {
                warnings.push("degenerate FS: zero systolic diameter".to_string());
            }
            Some(fs)
        }
        Err(e) => {
            warnings.push(format!("degenerate FS: {e}"));
            None
        }
    };

    let hr_bpm = match markers.as_ref().map(|m| heart_rate(m, cfg.fps)) {
        Some(Ok(hr)) => Some(hr),
        Some(Err(e)) => {
            warnings.push(format!("no HR: {e}"));
            None
        }
        None => {
            warnings.push("no HR".to_string());
            None
        }
    };
    let co = hr_bpm.map(|hr| cardiac_output(sv, Some(hr))).transpose()?;
    if cfg.microns_per_pixel.is_none() {
        warnings.push("uncalibrated volumes in px^3".to_string());
    }

    let per_beat_ef = markers
        .as_ref()
        .filter(|m| m.ed_frames.len() >= 3)
        .map(|m| per_beat_ef(m, &frames, &areas, &valid, &vols, &mut warnings));

    Ok(CardiacReport {
        n_frames,
        ed_frame: frames[ed_pos],
        es_frame: frames[es_pos],
        ed_area: ed.area as f64,
        es_area: es.area as f64,
        dl_ed: ed.long_axis,
        ds_ed: ed.short_axis,
        dl_es: es.long_axis,
        ds_es: es.short_axis,
        edv,
        esv,
        sv,
        ef_pct,
        ef_pct_eq2,
        ef_pct_eq3,
        fs,
        hr_bpm,
        co,
        volume_units: cfg.volume_units(),
        per_beat_ef,
        markers,
        excluded_frames: excluded,
        warnings,
    })
}

fn per_beat_ef(
    markers: &BeatMarkers,
    frames: &[usize],
    areas: &[f64],
    valid: &[VentricleGeometry],
    vols: &Volumes,
    warnings: &mut Vec<String>,
) -> Vec<f64> {
    let pos = |frame: usize| frames.binary_search(&frame).expect("marker is an analyzed frame");
    let mut out = Vec::new();
    for beat in markers.ed_frames.windows(2) {
        let (start, end) = (pos(beat[0]), pos(beat[1]));
        let (hi, lo) = global_extrema(&areas[start..end]);
        match vols.ef(vols.primary, &valid[start + hi], &valid[start + lo]) {
            Ok(ef) => out.push(ef),
            Err(e) => warnings.push(format!("beat starting at frame {} skipped: {e}", beat[0])),
        }
    }
    out
}
