//! Command-line front end: `analyze`, `eval`, `augment` and `synth`.
//!
//! Exit codes: 0 success, 1 fatal error or bad usage, 2 finished with
//! degraded output (excluded frames, missing heart rate, empty mask pairs,
//! nothing to augment).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::augment::augment_dataset;
use crate::cardiac::{build_report, write_report_csv, CalibrationConfig, FsAxis, VolumeMethod, DEFAULT_FPS};
use crate::evalmetrics::{ef_error_report, evaluate_set, read_ef_table};
use crate::imaging::{fill_holes, largest_component, load_frame_sequence, measure_geometry, ImagingError};
use crate::imaging::{GrayFrame, VentricleGeometry};
use crate::segmentation::{Polarity, Segmenter, SegmenterSpec};
use crate::synth::{generate_sequence, SynthHeartSpec};
use crate::tta::{tta_segment, TtaConfig, DEFAULT_TTA_THRESHOLD};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FATAL: i32 = 1;
pub const EXIT_DEGRADED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "zebraheart", version, about = "Cardiac function indices from zebrafish heart video frames")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Measure EF, FS, SV, CO and HR from a frame sequence.
    Analyze(AnalyzeArgs),
    /// Dice/IoU of predicted masks against ground truth.
    Eval(EvalArgs),
    /// Write the four flip variants of every image/mask pair.
    Augment(AugmentArgs),
    /// Render a synthetic beating ventricle with known indices.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SegmenterArg {
    Precomputed,
    Intensity,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolarityArg {
    Bright,
    Dark,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VolumeMethodArg {
    Eq2,
    Eq3,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FsAxisArg {
    Long,
    Short,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Directory of grayscale frames (PNG or PGM), ordered by the number in the file name.
    #[arg(long)]
    frames: PathBuf,
    /// Segmentation source. Defaults to `precomputed` when `--masks` is given, else `intensity`.
    #[arg(long, value_enum)]
    segmenter: Option<SegmenterArg>,
    /// Directory of per-frame masks for the precomputed segmenter.
    #[arg(long)]
    masks: Option<PathBuf>,
    /// Intensity segmenter cutoff.
    #[arg(long, default_value_t = 128)]
    threshold: u8,
    #[arg(long, value_enum, default_value = "bright")]
    polarity: PolarityArg,
    /// Probability cutoff for masks when TTA is off.
    #[arg(long, default_value_t = 0.5)]
    mask_threshold: f64,
    /// Average predictions over the four flip views.
    #[arg(long)]
    tta: bool,
    #[arg(long, default_value_t = DEFAULT_TTA_THRESHOLD)]
    tta_threshold: f64,
    /// Frame rate of the recording [default: 250].
    #[arg(long)]
    fps: Option<f64>,
    /// Pixel size; volumes are reported in nL when set.
    #[arg(long = "um-per-px")]
    um_per_px: Option<f64>,
    #[arg(long, value_enum, default_value = "both")]
    volume_method: VolumeMethodArg,
    #[arg(long, value_enum, default_value = "long")]
    fs_axis: FsAxisArg,
    /// Moving-average window for beat detection.
    #[arg(long, default_value_t = 3)]
    smoothing_window: usize,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Row label; defaults to the frames directory name.
    #[arg(long)]
    video_id: Option<String>,
    /// Worker threads; defaults to available parallelism.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV with columns video_id, predicted_ef, manual_ef.
    #[arg(long, requires = "ef_out")]
    ef_table: Option<PathBuf>,
    #[arg(long, requires = "ef_table")]
    ef_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AugmentArgs {
    #[arg(long)]
    images: PathBuf,
    #[arg(long)]
    masks: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// `key = value` spec file; built-in defaults when omitted.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Overrides any `fps` in the spec file [default: 250].
    #[arg(long)]
    fps: Option<f64>,
}

/// Parse `args` (including the program name) and run the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_FATAL } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Analyze(a) => cmd_analyze(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Augment(a) => cmd_augment(&a),
        Command::Synth(a) => cmd_synth(&a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_FATAL
        }
    }
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => std::io::stdout().write_all(bytes).context("writing to standard output"),
    }
}

fn build_segmenter(args: &AnalyzeArgs) -> Result<Box<dyn Segmenter>> {
    let kind = args.segmenter.unwrap_or(if args.masks.is_some() {
        SegmenterArg::Precomputed
    } else {
        SegmenterArg::Intensity
    });
    let spec = match kind {
        SegmenterArg::Precomputed => {
            let dir = args
                .masks
                .as_ref()
                .ok_or_else(|| anyhow!("--segmenter precomputed needs --masks DIR"))?;
            SegmenterSpec::precomputed(dir)
        }
        SegmenterArg::Intensity => {
            let polarity = match args.polarity {
                PolarityArg::Bright => Polarity::BrightForeground,
                PolarityArg::Dark => Polarity::DarkForeground,
            };
            SegmenterSpec::intensity(args.threshold, polarity)
        }
    };
    Ok(spec.build()?)
}

fn frame_geometry(frame: &GrayFrame, segmenter: &dyn Segmenter, tta: &TtaConfig) -> Result<Option<VentricleGeometry>> {
    let mask = tta_segment(frame, segmenter, tta)?;
    let component = match largest_component(&mask) {
        Ok(c) => c,
        Err(ImagingError::EmptyMask) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    Ok(Some(measure_geometry(&fill_holes(&component))?))
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<i32> {
    let cfg = CalibrationConfig {
        fps: args.fps.unwrap_or(DEFAULT_FPS),
        microns_per_pixel: args.um_per_px,
        smoothing_window: args.smoothing_window,
        volume_method: match args.volume_method {
            VolumeMethodArg::Eq2 => VolumeMethod::Spheroid,
            VolumeMethodArg::Eq3 => VolumeMethod::AreaLength,
            VolumeMethodArg::Both => VolumeMethod::Both,
        },
        fs_axis: match args.fs_axis {
            FsAxisArg::Long => FsAxis::Long,
            FsAxisArg::Short => FsAxis::Short,
        },
    };
    cfg.validate()?;
    let tta = if args.tta {
        TtaConfig::with_threshold(args.tta_threshold)?
    } else {
        TtaConfig { enabled: false, threshold: args.mask_threshold }
    };
    if !(0.0..=1.0).contains(&tta.threshold) {
        bail!("mask threshold must lie in [0, 1], got {}", tta.threshold);
    }

    let frames = load_frame_sequence(&args.frames).with_context(|| format!("loading {}", args.frames.display()))?;
    let segmenter = build_segmenter(args)?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool.build()?;
    let geometries: Vec<Option<VentricleGeometry>> = pool.install(|| {
        frames
            .par_iter()
            .map(|f| frame_geometry(f, segmenter.as_ref(), &tta).with_context(|| format!("frame {}", f.index())))
            .collect::<Result<_>>()
    })?;

    let mut report = build_report(&geometries, &cfg)?;
    if args.fps.is_none() {
        report.warnings.push(format!("fps={DEFAULT_FPS} (default)"));
    }
    let video_id = match &args.video_id {
        Some(id) => id.clone(),
        None => args
            .frames
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "video".to_string()),
    };
    let mut buf = Vec::new();
    write_report_csv(&mut buf, [(video_id.as_str(), &report)])?;
    write_output(args.out.as_deref(), &buf)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(if report.is_degraded() { EXIT_DEGRADED } else { EXIT_OK })
}

fn cmd_eval(args: &EvalArgs) -> Result<i32> {
    let summary = evaluate_set(&args.pred, &args.truth)?;
    let mut buf = Vec::new();
    summary.write_csv(&mut buf)?;
    write_output(args.out.as_deref(), &buf)?;
    if let (Some(table), Some(ef_out)) = (&args.ef_table, &args.ef_out) {
        let file = fs::File::open(table).with_context(|| format!("opening {}", table.display()))?;
        let report = ef_error_report(&read_ef_table(file)?)?;
        let mut buf = Vec::new();
        report.write_csv(&mut buf)?;
        write_output(Some(ef_out), &buf)?;
    }
    let warnings = summary.warnings();
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    Ok(if warnings.is_empty() { EXIT_OK } else { EXIT_DEGRADED })
}

fn cmd_augment(args: &AugmentArgs) -> Result<i32> {
    let written = augment_dataset(&args.images, &args.masks, &args.out)?;
    println!("wrote {written} image/mask pairs to {}", args.out.display());
    Ok(if written == 0 { EXIT_DEGRADED } else { EXIT_OK })
}

fn cmd_synth(args: &SynthArgs) -> Result<i32> {
    let (spec, file_fps) = match &args.spec {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let file = SynthHeartSpec::parse(&text).with_context(|| path.display().to_string())?;
            (file.spec, file.fps)
        }
        None => (SynthHeartSpec::default(), None),
    };
    let fps = args.fps.or(file_fps).unwrap_or(DEFAULT_FPS);
    let n = generate_sequence(&spec, fps, &args.out)?;
    println!("wrote {n} frames to {}", args.out.display());
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_one_and_help_exits_zero() {
        assert_eq!(run(["zebraheart", "analyze"]), EXIT_FATAL);
        assert_eq!(run(["zebraheart", "bogus"]), EXIT_FATAL);
        assert_eq!(run(["zebraheart", "--help"]), EXIT_OK);
        assert_eq!(run(["zebraheart", "eval", "--pred", "a", "--truth", "b", "--ef-table", "t.csv"]), EXIT_FATAL);
    }

    #[test]
    fn precomputed_without_masks_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let frame = GrayFrame::filled(4, 4, 0, 0).unwrap();
        crate::imaging::io::write_frame(&dir.path().join("f0.png"), &frame).unwrap();
        let frames = dir.path().to_str().unwrap();
        assert_eq!(run(["zebraheart", "analyze", "--frames", frames, "--segmenter", "precomputed"]), EXIT_FATAL);
    }
}
