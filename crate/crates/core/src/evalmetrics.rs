//! Overlap metrics between predicted and ground-truth masks, and absolute
//! error aggregation for EF/FS against manual measurements.

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::imaging::io::{list_image_files, read_binary_mask};
use crate::imaging::{BinaryMask, ImagingError};
use crate::numfmt::sig6;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("masks differ in size: {a:?} vs {b:?}")]
    DimensionMismatch { a: (usize, usize), b: (usize, usize) },
    #[error("pair {pair}: prediction {pred:?} vs truth {truth:?}")]
    PairDimensionMismatch {
        pair: String,
        pred: (usize, usize),
        truth: (usize, usize),
    },
    #[error("{pred} predictions but {truth} ground-truth masks")]
    PairCountMismatch { pred: usize, truth: usize },
    #[error("no mask pairs to evaluate")]
    EmptySet,
    #[error("no entries to aggregate")]
    EmptyList,
    #[error("EF table: {0}")]
    Table(String),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// `(|A∩B|, |A|, |B|)`.
fn overlap_counts(a: &BinaryMask, b: &BinaryMask) -> Result<(usize, usize, usize), EvalError> {
    if a.dims() != b.dims() {
        return Err(EvalError::DimensionMismatch { a: a.dims(), b: b.dims() });
    }
    let mut inter = 0;
    let mut na = 0;
    let mut nb = 0;
    for (&x, &y) in a.membership().iter().zip(b.membership()) {
        na += x as usize;
        nb += y as usize;
        inter += (x && y) as usize;
    }
    Ok((inter, na, nb))
}

/// Dice coefficient `2|A∩B| / (|A| + |B|)`; two empty masks score 1.
pub fn dice(a: &BinaryMask, b: &BinaryMask) -> Result<f64, EvalError> {
    let (inter, na, nb) = overlap_counts(a, b)?;
    if na + nb == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / (na + nb) as f64)
}

/// Intersection over union `|A∩B| / |A∪B|`; two empty masks score 1.
pub fn iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64, EvalError> {
    let (inter, na, nb) = overlap_counts(a, b)?;
    let union = na + nb - inter;
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub pair_id: String,
    pub dice: f64,
    pub iou: f64,
    /// Both masks were empty, so the scores are vacuous.
    pub both_empty: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub results: Vec<EvalResult>,
    pub mean_dice: f64,
    pub mean_iou: f64,
}

impl EvalSummary {
    pub fn from_results(results: Vec<EvalResult>) -> Result<Self, EvalError> {
        if results.is_empty() {
            return Err(EvalError::EmptySet);
        }
        let n = results.len() as f64;
        let mean_dice = results.iter().map(|r| r.dice).sum::<f64>() / n;
        let mean_iou = results.iter().map(|r| r.iou).sum::<f64>() / n;
        Ok(Self {
            results,
            mean_dice,
            mean_iou,
        })
    }

    pub fn warnings(&self) -> Vec<String> {
        self.results
            .iter()
            .filter(|r| r.both_empty)
            .map(|r| format!("pair {}: both masks empty, scored 1.0", r.pair_id))
            .collect()
    }

    /// `pair_id,dice,iou` rows followed by `MEAN,<dice>,<iou>`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv_writer(out);
        w.write_record(["pair_id", "dice", "iou"])?;
        for r in &self.results {
            w.write_record([r.pair_id.clone(), sig6(r.dice), sig6(r.iou)])?;
        }
        w.write_record(["MEAN".to_string(), sig6(self.mean_dice), sig6(self.mean_iou)])?;
        w.flush()?;
        Ok(())
    }
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

pub fn evaluate_pair(pair_id: &str, pred: &BinaryMask, truth: &BinaryMask) -> Result<EvalResult, EvalError> {
    let (inter, na, nb) = overlap_counts(pred, truth).map_err(|_| EvalError::PairDimensionMismatch {
        pair: pair_id.to_string(),
        pred: pred.dims(),
        truth: truth.dims(),
    })?;
    Ok(EvalResult {
        pair_id: pair_id.to_string(),
        dice: dice(pred, truth)?,
        iou: iou(pred, truth)?,
        both_empty: inter == 0 && na == 0 && nb == 0,
    })
}

/// Score every prediction against the ground-truth mask at the same numeric
/// position. Pair ids are the prediction file stems.
pub fn evaluate_set(pred_dir: &Path, truth_dir: &Path) -> Result<EvalSummary, EvalError> {
    let preds = list_image_files(pred_dir)?;
    let truths = list_image_files(truth_dir)?;
    if preds.len() != truths.len() {
        return Err(EvalError::PairCountMismatch {
            pred: preds.len(),
            truth: truths.len(),
        });
    }
    if preds.is_empty() {
        return Err(EvalError::EmptySet);
    }
    let results = preds
        .iter()
        .zip(&truths)
        .map(|(p, t)| {
            let id = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            evaluate_pair(&id, &read_binary_mask(p)?, &read_binary_mask(t)?)
        })
        .collect::<Result<Vec<_>, _>>()?;
    EvalSummary::from_results(results)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EfErrorEntry {
    pub video_id: String,
    pub predicted: f64,
    pub manual: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EfErrorReport {
    pub per_video: Vec<EfErrorEntry>,
    pub cumulative_abs_error: f64,
    pub mean_abs_error: f64,
}

impl EfErrorReport {
    /// `video_id,predicted_ef,manual_ef,abs_error` rows, then `CUMULATIVE`
    /// and `MEAN` rows carrying the aggregate in the last column.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv_writer(out);
        w.write_record(["video_id", "predicted_ef", "manual_ef", "abs_error"])?;
        for e in &self.per_video {
            w.write_record([e.video_id.clone(), sig6(e.predicted), sig6(e.manual), sig6(e.abs_error)])?;
        }
        w.write_record(["CUMULATIVE", "", "", &sig6(self.cumulative_abs_error)])?;
        w.write_record(["MEAN", "", "", &sig6(self.mean_abs_error)])?;
        w.flush()?;
        Ok(())
    }
}

/// Absolute error per video plus their sum and mean. Works the same for FS.
pub fn ef_error_report<S: AsRef<str>>(entries: &[(S, f64, f64)]) -> Result<EfErrorReport, EvalError> {
    if entries.is_empty() {
        return Err(EvalError::EmptyList);
    }
    let per_video: Vec<EfErrorEntry> = entries
        .iter()
        .map(|(id, predicted, manual)| EfErrorEntry {
            video_id: id.as_ref().to_string(),
            predicted: *predicted,
            manual: *manual,
            abs_error: (predicted - manual).abs(),
        })
        .collect();
    let cumulative_abs_error: f64 = per_video.iter().map(|e| e.abs_error).sum();
    Ok(EfErrorReport {
        mean_abs_error: cumulative_abs_error / per_video.len() as f64,
        cumulative_abs_error,
        per_video,
    })
}

/// Read `video_id,predicted_ef,manual_ef` rows (header required).
pub fn read_ef_table<R: Read>(input: R) -> Result<Vec<(String, f64, f64)>, EvalError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = r.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| EvalError::Table(format!("missing column {name}")))
    };
    let (id, pred, manual) = (col("video_id")?, col("predicted_ef")?, col("manual_ef")?);
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |i: usize| {
            rec.get(i)
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| EvalError::Table(format!("row {}: bad number in column {i}", line + 1)))
        };
        rows.push((rec.get(id).unwrap_or_default().to_string(), num(pred)?, num(manual)?));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{Flip, Flippable};
    use proptest::prelude::*;

    fn mask(bits: &[u8]) -> BinaryMask {
        BinaryMask::new(bits.len(), 1, bits.iter().map(|&b| b != 0).collect()).unwrap()
    }

    #[test]
    fn dice_examples() {
        let a = mask(&[1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0]);
        assert_eq!(dice(&a, &a).unwrap(), 1.0);
        let (x, y) = (mask(&[1, 1, 1, 1, 0, 0, 0, 0]), mask(&[0, 0, 0, 0, 1, 1, 1, 1]));
        assert_eq!(dice(&x, &y).unwrap(), 0.0);
        let (x, y) = (mask(&[1, 1, 1, 1, 0, 0]), mask(&[0, 0, 1, 1, 1, 1]));
        assert_eq!(dice(&x, &y).unwrap(), 0.5);
    }

    #[test]
    fn iou_examples() {
        let a = mask(&[1, 0, 1]);
        assert_eq!(iou(&a, &a).unwrap(), 1.0);
        assert_eq!(iou(&mask(&[1, 0]), &mask(&[0, 1])).unwrap(), 0.0);
        let (x, y) = (mask(&[1, 1, 1, 1, 0, 0]), mask(&[0, 0, 1, 1, 1, 1]));
        assert_eq!(iou(&x, &y).unwrap(), 2.0 / 6.0);
    }

    #[test]
    fn both_empty_scores_one_and_flags() {
        let e = mask(&[0, 0, 0]);
        assert_eq!(dice(&e, &e).unwrap(), 1.0);
        assert_eq!(iou(&e, &e).unwrap(), 1.0);
        let r = evaluate_pair("p", &e, &e).unwrap();
        assert!(r.both_empty);
        let s = EvalSummary::from_results(vec![r]).unwrap();
        assert_eq!(s.warnings().len(), 1);
    }

    #[test]
    fn size_mismatch() {
        assert!(matches!(
            dice(&mask(&[1]), &mask(&[1, 0])),
            Err(EvalError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            evaluate_pair("x", &mask(&[1]), &mask(&[1, 0])),
            Err(EvalError::PairDimensionMismatch { .. })
        ));
    }

    #[test]
    fn means_are_unweighted() {
        let results = vec![
            EvalResult { pair_id: "a".into(), dice: 1.0, iou: 1.0, both_empty: false },
            EvalResult { pair_id: "b".into(), dice: 2.0 / 3.0, iou: 0.5, both_empty: false },
        ];
        let s = EvalSummary::from_results(results).unwrap();
        assert_eq!(s.mean_iou, 0.75);
        assert!(matches!(EvalSummary::from_results(vec![]), Err(EvalError::EmptySet)));
    }

    #[test]
    fn ef_error_examples() {
        let r = ef_error_report(&[("a", 51.0, 50.0), ("b", 48.0, 50.0), ("c", 63.0, 60.0), ("d", 58.0, 60.0)]).unwrap();
        assert_eq!(r.cumulative_abs_error, 8.0);
        assert_eq!(r.mean_abs_error, 2.0);
        let r = ef_error_report(&[("a", 55.5, 55.5)]).unwrap();
        assert_eq!(r.cumulative_abs_error, 0.0);
        let r = ef_error_report(&[("s1", 54.0, 52.19)]).unwrap();
        assert!((r.per_video[0].abs_error - 1.81).abs() < 1e-12);
        assert!(matches!(ef_error_report::<&str>(&[]), Err(EvalError::EmptyList)));
    }

    #[test]
    fn ef_table_round_trip() {
        let text = "video_id, predicted_ef, manual_ef\nv1,54.0,52.19\nv2,60,61.5\n";
        let rows = read_ef_table(text.as_bytes()).unwrap();
        assert_eq!(rows, vec![("v1".into(), 54.0, 52.19), ("v2".into(), 60.0, 61.5)]);
        let mut buf = Vec::new();
        ef_error_report(&rows).unwrap().write_csv(&mut buf).unwrap();
        let out = String::from_utf8(buf).unwrap();
        assert_eq!(
            out,
            "video_id,predicted_ef,manual_ef,abs_error\nv1,54,52.19,1.81\nv2,60,61.5,1.5\nCUMULATIVE,,,3.31\nMEAN,,,1.655\n"
        );
        assert!(read_ef_table("video_id,x\n".as_bytes()).is_err());
    }

    fn arb_pair() -> impl Strategy<Value = (BinaryMask, BinaryMask)> {
        (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
            (
                proptest::collection::vec(any::<bool>(), w * h),
                proptest::collection::vec(any::<bool>(), w * h),
            )
                .prop_map(move |(a, b)| (BinaryMask::new(w, h, a).unwrap(), BinaryMask::new(w, h, b).unwrap()))
        })
    }

    proptest! {
        #[test]
        fn dice_iou_identity_symmetry_and_range((a, b) in arb_pair()) {
            let d = dice(&a, &b).unwrap();
            let j = iou(&a, &b).unwrap();
            prop_assert!((d - 2.0 * j / (1.0 + j)).abs() <= 1e-12);
            prop_assert!(d >= j);
            prop_assert!((0.0..=1.0).contains(&d) && (0.0..=1.0).contains(&j));
            prop_assert_eq!(d, dice(&b, &a).unwrap());
            prop_assert_eq!(j, iou(&b, &a).unwrap());
            for f in Flip::ALL {
                prop_assert_eq!(d, dice(&a.flipped(f), &b.flipped(f)).unwrap());
                prop_assert_eq!(j, iou(&a.flipped(f), &b.flipped(f)).unwrap());
            }
        }
    }
}
