//! Contextual pixel transforms and the augmentation pipeline around them.

mod kernel;
mod ops;
mod perspective;
mod pipeline;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use kernel::{gaussian_kernel, sigma_for_kernel};
pub use ops::{apply_masked, apply_transform, blur, grayscale, luma, resize_image, solid_fill};
pub use perspective::{perspective_warp, random_perspective, PerspectiveDraw};
pub use pipeline::{
    run_pipeline, BlurPlacement, NormalizedImage, ObjectMasks, PipelineConfig, PipelineOutput,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error("blur kernel must be odd and within {min}..={max}, got {0}", min = KernelSize::MIN, max = KernelSize::MAX)]
    InvalidKernel(u32),
    #[error("region mask is {mask:?} but image is {image:?} (height, width)")]
    SizeMismatch { mask: (u32, u32), image: (u32, u32) },
    #[error("image {image_id}: scenario needs a foreground/background region but the image has no person annotation")]
    MissingPerson { image_id: u64 },
    #[error("scenario contains a blur transform but no blur placement was configured")]
    PlacementRequired,
    #[error("invalid pipeline config: {0}")]
    InvalidConfig(String),
}

/// Odd Gaussian kernel size in `3..=31`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct KernelSize(u32);

impl KernelSize {
    pub const MIN: u32 = 3;
    pub const MAX: u32 = 31;

    pub fn new(k: u32) -> Result<Self, TransformError> {
        if k % 2 == 1 && (Self::MIN..=Self::MAX).contains(&k) {
            Ok(Self(k))
        } else {
            Err(TransformError::InvalidKernel(k))
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn radius(self) -> usize {
        (self.0 / 2) as usize
    }
}

impl TryFrom<u32> for KernelSize {
    type Error = TransformError;

    fn try_from(k: u32) -> Result<Self, Self::Error> {
        Self::new(k)
    }
}

impl From<KernelSize> for u32 {
    fn from(k: KernelSize) -> u32 {
        k.0
    }
}

impl fmt::Display for KernelSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransformKind {
    SolidColor([u8; 3]),
    GaussianBlur(KernelSize),
    Grayscale,
}

impl TransformKind {
    pub const SOLID_BLACK: TransformKind = TransformKind::SolidColor([0, 0, 0]);

    pub fn is_blur(&self) -> bool {
        matches!(self, TransformKind::GaussianBlur(_))
    }
}
