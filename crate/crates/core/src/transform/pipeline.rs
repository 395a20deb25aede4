//! Per-image augmentation pipeline.
//!
//! Stage order:
//! 1. non-blur contextual transforms at the original resolution,
//! 2. masked blur when placement is [`BlurPlacement::BeforeResize`],
//! 3. resize image (and region masks) to the target size,
//! 4. masked blur when placement is [`BlurPlacement::AfterResize`],
//! 5. training only: random perspective, then random horizontal flip,
//! 6. per-channel normalization `(v / 255 - mean) / std`.
//!
//! Blurring before the resize is the "seeded kernel" setting: the effective
//! smoothing after downscaling depends on each source image's resolution.
//! Blurring after the resize gives the same smoothing strength everywhere.

use std::fmt;
use std::str::FromStr;

use image::imageops;
use image::RgbImage;
use log::warn;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{apply_masked, random_perspective, resize_image, TransformError, TransformKind};
use crate::coco::{Dataset, KeyObject};
use crate::mask::{invert, resize_mask, union};
use crate::rle::{rle_decode, Bitmask, RleError};
use crate::rng::image_rng;
use crate::scenario::{RegionRef, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlurPlacement {
    /// Blur at native resolution, then resize ("seeded" kernel).
    BeforeResize,
    /// Resize, then blur ("fixed" kernel).
    AfterResize,
}

impl fmt::Display for BlurPlacement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BlurPlacement::BeforeResize => "before-resize",
            BlurPlacement::AfterResize => "after-resize",
        })
    }
}

impl FromStr for BlurPlacement {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "before-resize" | "seeded" => Ok(BlurPlacement::BeforeResize),
            "after-resize" | "fixed" => Ok(BlurPlacement::AfterResize),
            other => Err(format!(
                "unknown blur placement {other:?} (expected before-resize or after-resize)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Target `(height, width)`.
    pub resize: (u32, u32),
    pub distortion_scale: f64,
    pub perspective_p: f64,
    pub flip_p: f64,
    pub placement: Option<BlurPlacement>,
    pub mean: [f32; 3],
    pub std: [f32; 3],
    pub seed: u64,
    pub train: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            resize: (256, 256),
            distortion_scale: 0.4,
            perspective_p: 0.5,
            flip_p: 0.5,
            placement: None,
            mean: [0.485, 0.456, 0.406],
            std: [0.229, 0.224, 0.225],
            seed: 0,
            train: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), TransformError> {
        let bad = |m: String| Err(TransformError::InvalidConfig(m));
        if self.resize.0 == 0 || self.resize.1 == 0 {
            return bad(format!(
                "resize target must be non-empty, got {:?}",
                self.resize
            ));
        }
        if !(0.0..1.0).contains(&self.distortion_scale) {
            return bad(format!(
                "distortion scale must be in [0, 1), got {}",
                self.distortion_scale
            ));
        }
        for (name, p) in [
            ("perspective_p", self.perspective_p),
            ("flip_p", self.flip_p),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must be a probability, got {p}"));
            }
        }
        if self.std.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return bad(format!("std must be positive, got {:?}", self.std));
        }
        Ok(())
    }
}

/// Decoded masks of one image, tagged with their key object.
#[derive(Debug, Clone, Default)]
pub struct ObjectMasks {
    size: (u32, u32),
    masks: Vec<(KeyObject, Bitmask)>,
}

impl ObjectMasks {
    pub fn new(size: (u32, u32)) -> Self {
        Self {
            size,
            masks: Vec::new(),
        }
    }

    pub fn push(&mut self, object: KeyObject, mask: Bitmask) -> Result<(), TransformError> {
        if mask.size() != self.size {
            return Err(TransformError::SizeMismatch {
                mask: mask.size(),
                image: self.size,
            });
        }
        self.masks.push((object, mask));
        Ok(())
    }

    /// Decodes every annotation of `image_id`. Annotations whose category is
    /// missing from the table are ignored.
    pub fn from_dataset(d: &Dataset, image_id: u64) -> Result<Self, RleError> {
        let size = d
            .image(image_id)
            .map(|im| (im.height, im.width))
            .unwrap_or_default();
        let mut out = Self::new(size);
        for a in d.annotations.iter().filter(|a| a.image_id == image_id) {
            if let Some(cat) = d.category(a.category_id) {
                out.masks.push((cat.name, rle_decode(&a.mask)?));
            }
        }
        Ok(out)
    }

    pub fn size(&self) -> (u32, u32) {
        self.size
    }

    /// Union of all masks of one key object.
    pub fn object(&self, object: KeyObject) -> Option<Bitmask> {
        union(
            self.masks
                .iter()
                .filter(|(k, _)| *k == object)
                .map(|(_, m)| m),
        )
        .ok()
    }

    /// Resolves a scenario region. `Ok(None)` means the region references a
    /// key object the image does not contain.
    pub fn region(
        &self,
        region: RegionRef,
        image_id: u64,
    ) -> Result<Option<Bitmask>, TransformError> {
        let person = || {
            self.object(KeyObject::Person)
                .ok_or(TransformError::MissingPerson { image_id })
        };
        Ok(match region {
            RegionRef::Foreground => Some(person()?),
            RegionRef::Background => Some(invert(&person()?)),
            RegionRef::KeyObject(k) => self.object(k),
            RegionRef::InverseKeyObject(k) => self.object(k).map(|m| invert(&m)),
        })
    }
}

/// Channel-planar (CHW) float image.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f32>,
}

impl NormalizedImage {
    pub fn from_rgb(img: &RgbImage, mean: [f32; 3], std: [f32; 3]) -> Self {
        let (w, h) = img.dimensions();
        let plane = w as usize * h as usize;
        let mut data = vec![0f32; 3 * plane];
        for (i, px) in img.pixels().enumerate() {
            for c in 0..3 {
                data[c * plane + i] = (f32::from(px.0[c]) / 255.0 - mean[c]) / std[c];
            }
        }
        Self {
            width: w,
            height: h,
            data,
        }
    }

    /// Inverse of [`NormalizedImage::from_rgb`], rounding to the nearest byte.
    pub fn denormalize(&self, mean: [f32; 3], std: [f32; 3]) -> RgbImage {
        let plane = self.width as usize * self.height as usize;
        let mut out = RgbImage::new(self.width, self.height);
        for (i, px) in out.pixels_mut().enumerate() {
            for c in 0..3 {
                let v = (self.data[c * plane + i] * std[c] + mean[c]) * 255.0;
                px.0[c] = v.round().clamp(0.0, 255.0) as u8;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    /// Augmented 8-bit image, before normalization.
    pub image: RgbImage,
    pub tensor: NormalizedImage,
    pub flipped: bool,
    pub perspective: bool,
}

fn resolved_regions<'s>(
    masks: &ObjectMasks,
    scenario: &'s Scenario,
    image_id: u64,
    blur: bool,
) -> Result<Vec<(Bitmask, TransformKind, &'s RegionRef)>, TransformError> {
    let mut out = Vec::new();
    for clause in scenario.clauses() {
        let Some(t) = clause.transform else { continue };
        if t.is_blur() != blur {
            continue;
        }
        match masks.region(clause.region, image_id)? {
            Some(region) => out.push((region, t, &clause.region)),
            None => warn!(
                "image {image_id}: no {} annotation, skipping clause for region {}",
                match clause.region {
                    RegionRef::KeyObject(k) | RegionRef::InverseKeyObject(k) => k.name(),
                    _ => "person",
                },
                clause.region
            ),
        }
    }
    Ok(out)
}

/// Runs the full pipeline on one image. Output is a pure function of the
/// inputs, `cfg.seed` and `image_id`.
pub fn run_pipeline(
    img: &RgbImage,
    masks: &ObjectMasks,
    scenario: &Scenario,
    cfg: &PipelineConfig,
    image_id: u64,
) -> Result<PipelineOutput, TransformError> {
    cfg.validate()?;
    let native = (img.height(), img.width());
    if masks.size() != native {
        return Err(TransformError::SizeMismatch {
            mask: masks.size(),
            image: native,
        });
    }
    let placement = if scenario.has_blur() {
        Some(cfg.placement.ok_or(TransformError::PlacementRequired)?)
    } else {
        None
    };

    let mut current = img.clone();
    for (region, t, _) in resolved_regions(masks, scenario, image_id, false)? {
        current = apply_masked(&current, &region, t)?;
    }

    let blur_regions = resolved_regions(masks, scenario, image_id, true)?;
    if placement == Some(BlurPlacement::BeforeResize) {
        for (region, t, _) in &blur_regions {
            current = apply_masked(&current, region, *t)?;
        }
    }

    current = resize_image(&current, cfg.resize);

    if placement == Some(BlurPlacement::AfterResize) {
        for (region, t, _) in &blur_regions {
            current = apply_masked(&current, &resize_mask(region, cfg.resize), *t)?;
        }
    }

    let (mut perspective, mut flipped) = (false, false);
    if cfg.train {
        let mut rng = image_rng(cfg.seed, image_id);
        if rng.gen_bool(cfg.perspective_p) {
            current = random_perspective(&current, cfg.distortion_scale, &mut rng);
            perspective = true;
        }
        if rng.gen_bool(cfg.flip_p) {
            imageops::flip_horizontal_in_place(&mut current);
            flipped = true;
        }
    }

    let tensor = NormalizedImage::from_rgb(&current, cfg.mean, cfg.std);
    Ok(PipelineOutput {
        image: current,
        tensor,
        flipped,
        perspective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario;
    use image::Rgb;

    fn fixture(w: u32, h: u32) -> (RgbImage, ObjectMasks) {
        let img = RgbImage::from_fn(w, h, |x, y| {
            Rgb([
                ((x * 13 + y * 7) % 256) as u8,
                ((x * x + y) % 256) as u8,
                ((x ^ y) % 256) as u8,
            ])
        });
        let mut masks = ObjectMasks::new((h, w));
        masks
            .push(
                KeyObject::Person,
                Bitmask::from_fn(h, w, |r, c| {
                    r >= h / 4 && r < 3 * h / 4 && c >= w / 3 && c < 2 * w / 3
                }),
            )
            .unwrap();
        (img, masks)
    }

    fn eval_cfg() -> PipelineConfig {
        PipelineConfig {
            resize: (32, 32),
            placement: Some(BlurPlacement::BeforeResize),
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn raw_scenario_is_resize_and_normalize() {
        let (img, masks) = fixture(48, 40);
        let cfg = eval_cfg();
        let out = run_pipeline(&img, &masks, &Scenario::raw(), &cfg, 1).unwrap();
        let resized = resize_image(&img, cfg.resize);
        assert_eq!(out.image, resized);
        assert_eq!(out.tensor.denormalize(cfg.mean, cfg.std), resized);
    }

    #[test]
    fn blur_requires_placement() {
        let (img, masks) = fixture(16, 16);
        let cfg = PipelineConfig {
            placement: None,
            ..eval_cfg()
        };
        let sc = parse_scenario("F+B:Blur3").unwrap();
        assert_eq!(
            run_pipeline(&img, &masks, &sc, &cfg, 0).unwrap_err(),
            TransformError::PlacementRequired
        );
    }

    #[test]
    fn missing_person_is_an_error() {
        let (img, _) = fixture(16, 16);
        let empty = ObjectMasks::new((16, 16));
        let sc = parse_scenario("F:Grayscale+B").unwrap();
        assert_eq!(
            run_pipeline(&img, &empty, &sc, &eval_cfg(), 9).unwrap_err(),
            TransformError::MissingPerson { image_id: 9 }
        );
        // untransformed F/B clauses do not need a person
        assert!(run_pipeline(&img, &empty, &Scenario::raw(), &eval_cfg(), 9).is_ok());
    }

    #[test]
    fn absent_key_object_clause_is_skipped() {
        let (img, masks) = fixture(32, 32);
        let cfg = PipelineConfig {
            resize: (32, 32),
            ..eval_cfg()
        };
        let sc = parse_scenario("F+B+bed:SolidBlack+!wheelchair:Grayscale").unwrap();
        let out = run_pipeline(&img, &masks, &sc, &cfg, 0).unwrap();
        assert_eq!(out.image, img);
    }

    #[test]
    fn grayscale_background_keeps_person_pixels() {
        let (img, masks) = fixture(32, 32);
        let cfg = PipelineConfig {
            resize: (32, 32),
            ..eval_cfg()
        };
        let sc = parse_scenario("F+B:Grayscale").unwrap();
        let out = run_pipeline(&img, &masks, &sc, &cfg, 0).unwrap();
        let person = masks.object(KeyObject::Person).unwrap();
        for (x, y, px) in out.image.enumerate_pixels() {
            let orig = img.get_pixel(x, y).0;
            if person.get(y, x) {
                assert_eq!(px.0, orig);
            } else {
                assert_eq!(px.0, [super::super::luma(orig); 3]);
            }
        }
    }

    #[test]
    fn training_mode_is_deterministic_per_seed_and_id() {
        let (img, masks) = fixture(40, 30);
        let cfg = PipelineConfig {
            train: true,
            seed: 42,
            ..eval_cfg()
        };
        let sc = parse_scenario("F+B:Blur5").unwrap();
        let a = run_pipeline(&img, &masks, &sc, &cfg, 3).unwrap();
        let b = run_pipeline(&img, &masks, &sc, &cfg, 3).unwrap();
        assert_eq!(a, b);

        // over many ids, both the flip and the perspective draws vary
        let draws: Vec<(bool, bool)> = (0..32)
            .map(|id| {
                let o = run_pipeline(&img, &masks, &sc, &cfg, id).unwrap();
                (o.flipped, o.perspective)
            })
            .collect();
        assert!(draws.iter().any(|d| d.0) && draws.iter().any(|d| !d.0));
        assert!(draws.iter().any(|d| d.1) && draws.iter().any(|d| !d.1));

        let other_seed: Vec<(bool, bool)> = (0..32)
            .map(|id| {
                let cfg = PipelineConfig {
                    seed: 43,
                    ..cfg.clone()
                };
                let o = run_pipeline(&img, &masks, &sc, &cfg, id).unwrap();
                (o.flipped, o.perspective)
            })
            .collect();
        assert_ne!(draws, other_seed);
    }

    #[test]
    fn config_validation() {
        let mut cfg = PipelineConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.distortion_scale = 1.0;
        assert!(cfg.validate().is_err());
        let cfg = PipelineConfig {
            std: [0.0, 1.0, 1.0],
            ..PipelineConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = PipelineConfig {
            resize: (0, 3),
            ..PipelineConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn placement_parsing() {
        assert_eq!("before-resize".parse(), Ok(BlurPlacement::BeforeResize));
        assert_eq!("AFTER_RESIZE".parse(), Ok(BlurPlacement::AfterResize));
        assert!("sideways".parse::<BlurPlacement>().is_err());
        assert_eq!(
            serde_json::to_string(&BlurPlacement::BeforeResize).unwrap(),
            "\"before-resize\""
        );
    }
}
