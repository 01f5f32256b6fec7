//! Raster types for heart-video frames and ventricle masks.
//!
//! Three rasters share the same row-major layout and differ only in what a
//! pixel carries:
//!
//! - [`GrayFrame`]: 8-bit intensity, plus the frame's position in its sequence.
//! - [`SoftMask`]: per-pixel foreground probability in `[0, 1]`.
//! - [`BinaryMask`]: per-pixel foreground membership.
//!
//! Pixel `(x, y)` lives at `y * width + x`; its center is the integer point
//! `(x, y)`, which is the coordinate system used by centroids and moments.

use std::path::PathBuf;

use thiserror::Error;

mod geometry;
pub mod io;
mod morphology;

pub use geometry::{measure_geometry, VentricleGeometry};
pub use io::load_frame_sequence;
pub use morphology::{fill_holes, largest_component};

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("no frame images found in {0}")]
    EmptyDirectory(PathBuf),
    #[error("{0} does not match the dimensions of the first frame")]
    MixedDimensions(PathBuf),
    #[error("{0} is not an 8-bit single-channel PNG/PGM or raw .f32 mask")]
    UnsupportedFormat(PathBuf),
    #[error("mask has no foreground pixel")]
    EmptyMask,
    #[error("raster dimensions must be positive and match the buffer (got {width}x{height} with {len} values)")]
    InvalidDimensions {
        width: usize,
        height: usize,
        len: usize,
    },
    #[error("probability {value} at pixel {pixel} is outside [0, 1]")]
    ProbabilityOutOfRange { pixel: usize, value: f64 },
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Codec {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

/// Element of the flip group used for augmentation and TTA.
///
/// The four members form the Klein four-group: every element is its own
/// inverse and composition is commutative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flip {
    Identity,
    /// Reverse columns.
    Horizontal,
    /// Reverse rows.
    Vertical,
    /// Reverse both columns and rows.
    Both,
}

impl Flip {
    pub const ALL: [Flip; 4] = [Flip::Identity, Flip::Horizontal, Flip::Vertical, Flip::Both];

    fn bits(self) -> u8 {
        match self {
            Flip::Identity => 0b00,
            Flip::Horizontal => 0b01,
            Flip::Vertical => 0b10,
            Flip::Both => 0b11,
        }
    }

    fn from_bits(bits: u8) -> Self {
        match bits & 0b11 {
            0b00 => Flip::Identity,
            0b01 => Flip::Horizontal,
            0b10 => Flip::Vertical,
            _ => Flip::Both,
        }
    }

    pub fn compose(self, other: Flip) -> Flip {
        Flip::from_bits(self.bits() ^ other.bits())
    }

    pub fn inverse(self) -> Flip {
        self
    }

    pub fn reverses_columns(self) -> bool {
        self.bits() & 0b01 != 0
    }

    pub fn reverses_rows(self) -> bool {
        self.bits() & 0b10 != 0
    }

    /// File-name suffix used by dataset augmentation.
    pub fn suffix(self) -> &'static str {
        match self {
            Flip::Identity => "_id",
            Flip::Horizontal => "_h",
            Flip::Vertical => "_v",
            Flip::Both => "_hv",
        }
    }

    /// Map a pixel coordinate through this flip.
    pub fn map_point(self, x: usize, y: usize, width: usize, height: usize) -> (usize, usize) {
        let x = if self.reverses_columns() { width - 1 - x } else { x };
        let y = if self.reverses_rows() { height - 1 - y } else { y };
        (x, y)
    }
}

fn flip_buffer<T: Copy>(width: usize, height: usize, data: &[T], flip: Flip) -> Vec<T> {
    let mut out = Vec::with_capacity(data.len());
    for y in 0..height {
        let src_y = if flip.reverses_rows() { height - 1 - y } else { y };
        let row = &data[src_y * width..(src_y + 1) * width];
        if flip.reverses_columns() {
            out.extend(row.iter().rev().copied());
        } else {
            out.extend_from_slice(row);
        }
    }
    out
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<(), ImagingError> {
    if width == 0 || height == 0 || width.checked_mul(height) != Some(len) {
        return Err(ImagingError::InvalidDimensions { width, height, len });
    }
    Ok(())
}

/// Rasters that can be mirrored along the flip group.
pub trait Flippable: Sized {
    fn flipped(&self, flip: Flip) -> Self;
}

/// Free-function form of [`Flippable::flipped`].
pub fn flip<T: Flippable>(image: &T, flip: Flip) -> T {
    image.flipped(flip)
}

/// One 8-bit grayscale video frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayFrame {
    width: usize,
    height: usize,
    intensities: Vec<u8>,
    index: usize,
}

impl GrayFrame {
    pub fn new(
        width: usize,
        height: usize,
        intensities: Vec<u8>,
        index: usize,
    ) -> Result<Self, ImagingError> {
        check_dims(width, height, intensities.len())?;
        Ok(Self {
            width,
            height,
            intensities,
            index,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8, index: usize) -> Result<Self, ImagingError> {
        Self::new(width, height, vec![value; width * height], index)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn with_index(mut self, index: usize) -> Self {
        self.index = index;
        self
    }

    pub fn intensities(&self) -> &[u8] {
        &self.intensities
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.intensities[y * self.width + x]
    }
}

impl Flippable for GrayFrame {
    fn flipped(&self, flip: Flip) -> Self {
        Self {
            width: self.width,
            height: self.height,
            intensities: flip_buffer(self.width, self.height, &self.intensities, flip),
            index: self.index,
        }
    }
}

/// Per-pixel foreground probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftMask {
    width: usize,
    height: usize,
    probabilities: Vec<f64>,
}

impl SoftMask {
    pub fn new(width: usize, height: usize, probabilities: Vec<f64>) -> Result<Self, ImagingError> {
        check_dims(width, height, probabilities.len())?;
        if let Some((pixel, &value)) = probabilities
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..=1.0).contains(*p))
        {
            return Err(ImagingError::ProbabilityOutOfRange { pixel, value });
        }
        Ok(Self {
            width,
            height,
            probabilities,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self, ImagingError> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Interpret 8-bit values as `value / 255`.
    pub fn from_u8(width: usize, height: usize, values: &[u8]) -> Result<Self, ImagingError> {
        Self::new(
            width,
            height,
            values.iter().map(|&v| f64::from(v) / 255.0).collect(),
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.probabilities[y * self.width + x]
    }
}

impl Flippable for SoftMask {
    fn flipped(&self, flip: Flip) -> Self {
        Self {
            width: self.width,
            height: self.height,
            probabilities: flip_buffer(self.width, self.height, &self.probabilities, flip),
        }
    }
}

/// Per-pixel foreground membership.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    membership: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, membership: Vec<bool>) -> Result<Self, ImagingError> {
        check_dims(width, height, membership.len())?;
        Ok(Self {
            width,
            height,
            membership,
        })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self, ImagingError> {
        Self::new(width, height, vec![false; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut inside: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self, ImagingError> {
        let mut membership = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                membership.push(inside(x, y));
            }
        }
        Self::new(width, height, membership)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn membership(&self) -> &[bool] {
        &self.membership
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.membership[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.membership[y * self.width + x] = value;
    }

    pub fn foreground_count(&self) -> usize {
        self.membership.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.membership.iter().any(|&m| m)
    }

    /// Foreground pixels as 255, background as 0.
    pub fn to_u8(&self) -> Vec<u8> {
        self.membership.iter().map(|&m| if m { 255 } else { 0 }).collect()
    }

    pub fn to_soft(&self) -> SoftMask {
        SoftMask {
            width: self.width,
            height: self.height,
            probabilities: self
                .membership
                .iter()
                .map(|&m| if m { 1.0 } else { 0.0 })
                .collect(),
        }
    }
}

impl Flippable for BinaryMask {
    fn flipped(&self, flip: Flip) -> Self {
        Self {
            width: self.width,
            height: self.height,
            membership: flip_buffer(self.width, self.height, &self.membership, flip),
        }
    }
}

/// Threshold a soft mask. With `inclusive` a pixel is foreground when its
/// probability is `>= threshold`, otherwise when it is strictly greater.
pub fn binarize(mask: &SoftMask, threshold: f64, inclusive: bool) -> BinaryMask {
    let membership = mask
        .probabilities
        .iter()
        .map(|&p| if inclusive { p >= threshold } else { p > threshold })
        .collect();
    BinaryMask {
        width: mask.width,
        height: mask.height,
        membership,
    }
}
