//! Frame and mask files: 8-bit grayscale PNG, binary PGM (P5), and raw
//! little-endian `.f32` soft-mask sidecars.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use image::codecs::png::PngEncoder;
use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageReader};

use super::{BinaryMask, GrayFrame, ImagingError, SoftMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    Png,
    Pgm,
    RawF32,
}

impl FileKind {
    pub fn of(path: &Path) -> Option<FileKind> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "png" => Some(FileKind::Png),
            "pgm" => Some(FileKind::Pgm),
            "f32" => Some(FileKind::RawF32),
            _ => None,
        }
    }

    pub fn is_image(self) -> bool {
        matches!(self, FileKind::Png | FileKind::Pgm)
    }
}

/// Sort key: the first run of ASCII digits in the file stem, then the full
/// name. Stems without digits sort after numbered ones, lexicographically.
fn numeric_key(path: &Path) -> (u8, u128, String) {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let stem = path
        .file_stem()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let digits: String = stem
        .chars()
        .skip_while(|c| !c.is_ascii_digit())
        .take_while(|c| c.is_ascii_digit())
        .collect();
    match digits.parse::<u128>() {
        Ok(n) => (0, n, name),
        Err(_) => (1, 0, name),
    }
}

pub fn sort_numeric(paths: &mut [PathBuf]) {
    paths.sort_by_cached_key(|p| numeric_key(p));
}

/// List the regular files of `dir` in numeric-aware order.
///
/// Hidden files and subdirectories are skipped. Any other file whose kind is
/// not accepted by `accept` is rejected with `UnsupportedFormat`.
pub fn list_files(
    dir: &Path,
    accept: impl Fn(FileKind) -> bool,
) -> Result<Vec<PathBuf>, ImagingError> {
    let entries = fs::read_dir(dir).map_err(|source| ImagingError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| ImagingError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        if path.is_dir() || entry.file_name().to_string_lossy().starts_with('.') {
            continue;
        }
        match FileKind::of(&path) {
            Some(kind) if accept(kind) => files.push(path),
            _ => return Err(ImagingError::UnsupportedFormat(path)),
        }
    }
    sort_numeric(&mut files);
    Ok(files)
}

pub fn list_image_files(dir: &Path) -> Result<Vec<PathBuf>, ImagingError> {
    list_files(dir, FileKind::is_image)
}

/// Decode an 8-bit single-channel image, returning `(width, height, pixels)`.
pub fn read_gray(path: &Path) -> Result<(usize, usize, Vec<u8>), ImagingError> {
    if !FileKind::of(path).is_some_and(FileKind::is_image) {
        return Err(ImagingError::UnsupportedFormat(path.to_path_buf()));
    }
    let codec = |source| ImagingError::Codec {
        path: path.to_path_buf(),
        source,
    };
    let reader = ImageReader::new(BufReader::new(File::open(path).map_err(|source| {
        ImagingError::Io {
            path: path.to_path_buf(),
            source,
        }
    })?))
    .with_guessed_format()
    .map_err(|source| ImagingError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    match reader.decode().map_err(codec)? {
        DynamicImage::ImageLuma8(img) => {
            let (w, h) = img.dimensions();
            Ok((w as usize, h as usize, img.into_raw()))
        }
        _ => Err(ImagingError::UnsupportedFormat(path.to_path_buf())),
    }
}

/// Encode an 8-bit grayscale buffer; the format follows the file extension.
pub fn write_gray(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<(), ImagingError> {
    let kind = FileKind::of(path)
        .filter(|k| k.is_image())
        .ok_or_else(|| ImagingError::UnsupportedFormat(path.to_path_buf()))?;
    let io_err = |source| ImagingError::Io {
        path: path.to_path_buf(),
        source,
    };
    let codec = |source| ImagingError::Codec {
        path: path.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    let (w, h) = (width as u32, height as u32);
    match kind {
        FileKind::Png => PngEncoder::new(&mut out)
            .write_image(pixels, w, h, ExtendedColorType::L8)
            .map_err(codec)?,
        FileKind::Pgm => PnmEncoder::new(&mut out)
            .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
            .write_image(pixels, w, h, ExtendedColorType::L8)
            .map_err(codec)?,
        FileKind::RawF32 => unreachable!(),
    }
    out.flush().map_err(io_err)
}

pub fn read_frame(path: &Path, index: usize) -> Result<GrayFrame, ImagingError> {
    let (w, h, px) = read_gray(path)?;
    GrayFrame::new(w, h, px, index)
}

pub fn write_frame(path: &Path, frame: &GrayFrame) -> Result<(), ImagingError> {
    write_gray(path, frame.width(), frame.height(), frame.intensities())
}

/// Load every frame in `dir`. Frame indices are sequence positions, not the
/// numbers found in file names.
pub fn load_frame_sequence(dir: &Path) -> Result<Vec<GrayFrame>, ImagingError> {
    let files = list_image_files(dir)?;
    if files.is_empty() {
        return Err(ImagingError::EmptyDirectory(dir.to_path_buf()));
    }
    let mut frames: Vec<GrayFrame> = Vec::with_capacity(files.len());
    for (index, path) in files.iter().enumerate() {
        let frame = read_frame(path, index)?;
        if let Some(first) = frames.first() {
            if first.dims() != frame.dims() {
                return Err(ImagingError::MixedDimensions(path.clone()));
            }
        }
        frames.push(frame);
    }
    Ok(frames)
}

/// Read a binary mask image; pixels `>= 128` are foreground.
pub fn read_binary_mask(path: &Path) -> Result<BinaryMask, ImagingError> {
    let (w, h, px) = read_gray(path)?;
    BinaryMask::new(w, h, px.into_iter().map(|v| v >= 128).collect())
}

pub fn write_binary_mask(path: &Path, mask: &BinaryMask) -> Result<(), ImagingError> {
    write_gray(path, mask.width(), mask.height(), &mask.to_u8())
}

/// Read a soft mask of known dimensions: `.f32` sidecars are raw row-major
/// little-endian floats, images are read as `value / 255`.
pub fn read_soft_mask(path: &Path, width: usize, height: usize) -> Result<SoftMask, ImagingError> {
    match FileKind::of(path) {
        Some(FileKind::RawF32) => {
            let bytes = fs::read(path).map_err(|source| ImagingError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            if bytes.len() != width * height * 4 {
                return Err(ImagingError::DimensionMismatch {
                    expected: (width, height),
                    found: (bytes.len() / 4, 1),
                });
            }
            let probs = bytes
                .chunks_exact(4)
                .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
                .collect();
            SoftMask::new(width, height, probs)
        }
        Some(_) => {
            let (w, h, px) = read_gray(path)?;
            if (w, h) != (width, height) {
                return Err(ImagingError::DimensionMismatch {
                    expected: (width, height),
                    found: (w, h),
                });
            }
            SoftMask::from_u8(w, h, &px)
        }
        None => Err(ImagingError::UnsupportedFormat(path.to_path_buf())),
    }
}

/// Write a soft mask as a raw `.f32` sidecar (precision narrows to f32).
pub fn write_soft_mask_f32(path: &Path, mask: &SoftMask) -> Result<(), ImagingError> {
    let bytes: Vec<u8> = mask
        .probabilities()
        .iter()
        .flat_map(|&p| (p as f32).to_le_bytes())
        .collect();
    fs::write(path, bytes).map_err(|source| ImagingError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, w: usize, h: usize, v: u8) {
        write_gray(&dir.join(name), w, h, &vec![v; w * h]).unwrap();
    }

    #[test]
    fn numeric_order_beats_lexicographic() {
        let mut paths: Vec<PathBuf> = ["frame_10.png", "frame_9.png", "0001.png", "b.png", "a.png", "0010.png"]
            .iter()
            .map(PathBuf::from)
            .collect();
        sort_numeric(&mut paths);
        let names: Vec<_> = paths.iter().map(|p| p.to_str().unwrap()).collect();
        assert_eq!(
            names,
            ["0001.png", "frame_9.png", "0010.png", "frame_10.png", "a.png", "b.png"]
        );
    }

    #[test]
    fn loads_sequence_in_numeric_order() {
        let dir = tempfile::tempdir().unwrap();
        for (i, name) in ["2.pgm", "0.pgm", "1.pgm"].iter().enumerate() {
            write(dir.path(), name, 4, 4, i as u8);
        }
        let frames = load_frame_sequence(dir.path()).unwrap();
        assert_eq!(frames.len(), 3);
        assert_eq!(frames.iter().map(|f| f.index()).collect::<Vec<_>>(), [0, 1, 2]);
        // 0.pgm was written second with value 1.
        assert_eq!(frames[0].get(0, 0), 1);
        assert_eq!(frames[2].get(0, 0), 0);
    }

    #[test]
    fn single_file_gets_sequence_index_zero() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "2.pgm", 4, 4, 7);
        let frames = load_frame_sequence(dir.path()).unwrap();
        assert_eq!(frames.len(), 1);
        assert_eq!(frames[0].index(), 0);
    }

    #[test]
    fn mixed_dimensions_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "0.pgm", 4, 4, 0);
        write(dir.path(), "1.pgm", 5, 5, 0);
        match load_frame_sequence(dir.path()) {
            Err(ImagingError::MixedDimensions(p)) => assert!(p.ends_with("1.pgm")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_directory_and_foreign_files_are_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_frame_sequence(dir.path()),
            Err(ImagingError::EmptyDirectory(_))
        ));
        fs::write(dir.path().join("notes.txt"), "x").unwrap();
        assert!(matches!(
            load_frame_sequence(dir.path()),
            Err(ImagingError::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn color_png_is_unsupported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("0.png");
        let file = File::create(&path).unwrap();
        PngEncoder::new(file)
            .write_image(&[0u8; 12], 2, 2, ExtendedColorType::Rgb8)
            .unwrap();
        assert!(matches!(read_gray(&path), Err(ImagingError::UnsupportedFormat(_))));
    }

    #[test]
    fn png_and_pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let px: Vec<u8> = (0..20).map(|v| v * 12).collect();
        for name in ["a.png", "a.pgm"] {
            let path = dir.path().join(name);
            write_gray(&path, 5, 4, &px).unwrap();
            assert_eq!(read_gray(&path).unwrap(), (5, 4, px.clone()));
        }
        let pgm = fs::read(dir.path().join("a.pgm")).unwrap();
        assert!(pgm.starts_with(b"P5"));
    }

    #[test]
    fn f32_sidecar_round_trip_and_size_check() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("0.f32");
        let mask = SoftMask::new(2, 2, vec![0.0, 0.25, 0.5, 1.0]).unwrap();
        write_soft_mask_f32(&path, &mask).unwrap();
        assert_eq!(read_soft_mask(&path, 2, 2).unwrap(), mask);
        assert!(matches!(
            read_soft_mask(&path, 3, 2),
            Err(ImagingError::DimensionMismatch { .. })
        ));
    }
}
