//! Offline flip augmentation of an image/mask training folder.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::imaging::io::{list_image_files, read_frame, write_frame};
use crate::imaging::{Flip, Flippable, ImagingError};

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("{images} images but {masks} masks")]
    PairCountMismatch { images: usize, masks: usize },
    #[error("pair {pair}: image {image:?} vs mask {mask:?}")]
    DimensionMismatch {
        pair: usize,
        image: (usize, usize),
        mask: (usize, usize),
    },
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

fn output_path(dir: &Path, source: &Path, flip: Flip) -> PathBuf {
    let stem = source.file_stem().unwrap_or_default().to_string_lossy();
    let ext = source.extension().unwrap_or_default().to_string_lossy();
    dir.join(format!("{stem}{}.{ext}", flip.suffix()))
}

/// Write the original and the three flipped versions of every image/mask
/// pair into `out_dir/images` and `out_dir/masks`, returning the number of
/// pairs written.
///
/// Images and masks are paired by numeric file order. Masks are flipped as
/// raw 8-bit rasters, so their values and foreground counts are preserved.
pub fn augment_dataset(images_dir: &Path, masks_dir: &Path, out_dir: &Path) -> Result<usize, AugmentError> {
    let images = list_image_files(images_dir)?;
    let masks = list_image_files(masks_dir)?;
    if images.len() != masks.len() {
        return Err(AugmentError::PairCountMismatch {
            images: images.len(),
            masks: masks.len(),
        });
    }
    let out_images = out_dir.join("images");
    let out_masks = out_dir.join("masks");
    for dir in [&out_images, &out_masks] {
        fs::create_dir_all(dir).map_err(|source| ImagingError::Io {
            path: dir.clone(),
            source,
        })?;
    }

    let mut written = 0;
    for (pair, (image_path, mask_path)) in images.iter().zip(&masks).enumerate() {
        let image = read_frame(image_path, pair)?;
        let mask = read_frame(mask_path, pair)?;
        if image.dims() != mask.dims() {
            return Err(AugmentError::DimensionMismatch {
                pair,
                image: image.dims(),
                mask: mask.dims(),
            });
        }
        for flip in Flip::ALL {
            write_frame(&output_path(&out_images, image_path, flip), &image.flipped(flip))?;
            write_frame(&output_path(&out_masks, mask_path, flip), &mask.flipped(flip))?;
            written += 1;
        }
    }
    Ok(written)
}
