//! Dataset construction: person-box doubling and cropping, temporal
//! downsampling, source/camera train-test split, grouped validation split
//! and composition statistics.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use image::RgbImage;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coco::{Annotation, Dataset, DatasetError, FallLabel, ImageRecord, Source};
use crate::mask::{crop, MaskError, Rect};
use crate::rle::{rle_decode, rle_encode, RleError};
use crate::rng::seeded;

#[derive(Debug, Error)]
pub enum BuildError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Rle(#[from] RleError),
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error("image {0}: KULeuven images need a camera id to be split")]
    MissingCamera(u64),
    #[error("split rules overlap for {0}")]
    OverlappingRules(Source),
    #[error("timestamps must be strictly increasing (frame at position {0})")]
    NonMonotoneTimestamps(usize),
    #[error("invalid frame rates: target {target} fps, source {source_fps} fps")]
    InvalidFps { target: f64, source_fps: f64 },
    #[error("invalid split parameters: {0}")]
    InvalidParameters(String),
}

/// Doubles width and height about the rect center, then clamps each side
/// to the image independently. `image` is `(height, width)`.
///
/// Odd sizes cannot stay centered on the integer grid; the extra half
/// pixel goes to the right/bottom.
pub fn double_bbox(r: Rect, image: (u32, u32)) -> Rect {
    let (h, w) = (i64::from(image.0), i64::from(image.1));
    let (x, y, rw, rh) = (
        i64::from(r.x),
        i64::from(r.y),
        i64::from(r.w),
        i64::from(r.h),
    );
    let x0 = (x - rw / 2).clamp(0, w);
    let y0 = (y - rh / 2).clamp(0, h);
    let x1 = (x - rw / 2 + 2 * rw).clamp(0, w);
    let y1 = (y - rh / 2 + 2 * rh).clamp(0, h);
    Rect::new(x0 as u32, y0 as u32, (x1 - x0) as u32, (y1 - y0) as u32)
}

/// Crops an image record and its annotations to `r`. Masks are cropped,
/// boxes translated and clipped, and annotations left with an empty mask
/// are dropped.
pub fn crop_record(
    rec: &ImageRecord,
    annotations: &[Annotation],
    r: Rect,
) -> Result<(ImageRecord, Vec<Annotation>), BuildError> {
    if !r.fits_within(rec.height, rec.width) {
        return Err(MaskError::OutOfBounds {
            rect: r,
            height: rec.height,
            width: rec.width,
        }
        .into());
    }
    let mut out_rec = rec.clone();
    out_rec.width = r.w;
    out_rec.height = r.h;
    let mut out = Vec::with_capacity(annotations.len());
    for a in annotations.iter().filter(|a| a.image_id == rec.id) {
        let mask = crop(&rle_decode(&a.mask)?, r)?;
        if mask.is_empty() {
            continue;
        }
        let clipped = a.bbox.intersect(&r);
        let bbox = if clipped.area() == 0 {
            Rect::new(0, 0, 0, 0)
        } else {
            Rect::new(clipped.x - r.x, clipped.y - r.y, clipped.w, clipped.h)
        };
        out.push(Annotation {
            id: a.id,
            image_id: a.image_id,
            category_id: a.category_id,
            bbox,
            mask: rle_encode(&mask),
        });
    }
    Ok((out_rec, out))
}

/// Pixel counterpart of [`crop_record`].
pub fn crop_image(img: &RgbImage, r: Rect) -> Result<RgbImage, MaskError> {
    if !r.fits_within(img.height(), img.width()) {
        return Err(MaskError::OutOfBounds {
            rect: r,
            height: img.height(),
            width: img.width(),
        });
    }
    Ok(image::imageops::crop_imm(img, r.x, r.y, r.w, r.h).to_image())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub index: u64,
    /// Seconds from the start of the video.
    pub timestamp: f64,
}

/// Picks, for every multiple of `1 / target_fps` inside the covered time
/// span, the frame with the nearest timestamp (ties go to the earlier frame).
pub fn temporal_downsample(
    frames: &[Frame],
    target_fps: f64,
    source_fps: f64,
) -> Result<Vec<Frame>, BuildError> {
    if !(target_fps > 0.0 && source_fps > 0.0 && target_fps <= source_fps)
        || !target_fps.is_finite()
        || !source_fps.is_finite()
    {
        return Err(BuildError::InvalidFps {
            target: target_fps,
            source_fps,
        });
    }
    for (i, pair) in frames.windows(2).enumerate() {
        if pair[1].timestamp.partial_cmp(&pair[0].timestamp) != Some(std::cmp::Ordering::Greater) {
            return Err(BuildError::NonMonotoneTimestamps(i + 1));
        }
    }
    let (Some(first), Some(last)) = (frames.first(), frames.last()) else {
        return Ok(Vec::new());
    };
    const EPS: f64 = 1e-9;
    let period = 1.0 / target_fps;
    let k_first = (first.timestamp / period - EPS).ceil() as i64;
    let k_last = (last.timestamp / period + EPS).floor() as i64;

    let mut out: Vec<Frame> = Vec::new();
    let mut cursor = 0usize;
    for k in k_first..=k_last {
        let t = k as f64 * period;
        while cursor + 1 < frames.len() && frames[cursor + 1].timestamp <= t {
            cursor += 1;
        }
        let mut pick = cursor;
        if cursor + 1 < frames.len() {
            let before = (t - frames[cursor].timestamp).abs();
            let after = (frames[cursor + 1].timestamp - t).abs();
            if after < before {
                pick = cursor + 1;
            }
        }
        if out.last().map(|f| f.index) != Some(frames[pick].index) {
            out.push(frames[pick]);
        }
    }
    Ok(out)
}

/// Images of `source` go to the test side; `cameras: None` means every camera.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRule {
    pub source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cameras: Option<BTreeSet<u32>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRules {
    pub test: Vec<SplitRule>,
}

impl SplitRules {
    /// URFall entirely, plus KULeuven cameras 1 and 2.
    pub fn standard() -> Self {
        Self {
            test: vec![
                SplitRule {
                    source: Source::KuLeuven,
                    cameras: Some([1, 2].into_iter().collect()),
                },
                SplitRule {
                    source: Source::UrFall,
                    cameras: None,
                },
            ],
        }
    }

    pub fn validate(&self) -> Result<(), BuildError> {
        for (i, a) in self.test.iter().enumerate() {
            for b in &self.test[..i] {
                if a.source != b.source {
                    continue;
                }
                let overlap = match (&a.cameras, &b.cameras) {
                    (Some(x), Some(y)) => !x.is_disjoint(y),
                    _ => true,
                };
                if overlap {
                    return Err(BuildError::OverlappingRules(a.source));
                }
            }
        }
        Ok(())
    }

    fn is_test(&self, im: &ImageRecord) -> Result<bool, BuildError> {
        let ctx = im.provenance()?;
        if ctx.source.has_cameras() && ctx.camera.is_none() {
            return Err(BuildError::MissingCamera(im.id));
        }
        Ok(self.test.iter().any(|rule| {
            rule.source == ctx.source
                && match (&rule.cameras, ctx.camera) {
                    (None, _) => true,
                    (Some(set), Some(cam)) => set.contains(&cam),
                    (Some(_), None) => false,
                }
        }))
    }
}

/// Splits by source (and camera) into `(train, test)`.
pub fn split_train_test(d: &Dataset, rules: &SplitRules) -> Result<(Dataset, Dataset), BuildError> {
    rules.validate()?;
    let mut test = HashSet::new();
    let mut train = HashSet::new();
    for im in &d.images {
        if rules.is_test(im)? {
            test.insert(im.id);
        } else {
            train.insert(im.id);
        }
    }
    Ok((d.subset(&train), d.subset(&test)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub train: Vec<u64>,
    pub val: Vec<u64>,
    pub test: Vec<u64>,
    pub seed: u64,
    pub rules: SplitRules,
}

impl SplitManifest {
    /// Checks that the three sides are disjoint and together cover every image.
    pub fn check_partition(&self, d: &Dataset) -> Result<(), String> {
        let mut seen = HashSet::new();
        for id in self.train.iter().chain(&self.val).chain(&self.test) {
            if !seen.insert(*id) {
                return Err(format!("image {id} appears on more than one side"));
            }
        }
        let all: HashSet<u64> = d.images.iter().map(|im| im.id).collect();
        if seen != all {
            return Err(format!(
                "manifest covers {} ids but dataset has {}",
                seen.len(),
                all.len()
            ));
        }
        Ok(())
    }
}

/// Consecutive-frame groups of at most `group_size` images per
/// `(source, sequence)`, in a deterministic order.
pub fn frame_groups(d: &Dataset, group_size: usize) -> Result<Vec<Vec<u64>>, BuildError> {
    if group_size == 0 {
        return Err(BuildError::InvalidParameters(
            "group size must be positive".into(),
        ));
    }
    let mut sequences: BTreeMap<(Source, &str), Vec<(u32, u64)>> = BTreeMap::new();
    for im in &d.images {
        let ctx = im.provenance()?;
        sequences
            .entry((ctx.source, ctx.sequence.as_str()))
            .or_default()
            .push((ctx.frame, im.id));
    }
    let mut groups = Vec::new();
    for frames in sequences.values_mut() {
        frames.sort_unstable();
        groups.extend(
            frames
                .chunks(group_size)
                .map(|c| c.iter().map(|&(_, id)| id).collect::<Vec<_>>()),
        );
    }
    Ok(groups)
}

/// Shuffles frame groups with `seed` and moves whole groups into the
/// validation side until it holds at least `round(val_fraction * n)` images.
pub fn group_split_validation(
    train: &Dataset,
    group_size: usize,
    val_fraction: f64,
    seed: u64,
) -> Result<SplitManifest, BuildError> {
    if !(0.0..=1.0).contains(&val_fraction) {
        return Err(BuildError::InvalidParameters(format!(
            "validation fraction must be in [0, 1], got {val_fraction}"
        )));
    }
    let mut groups = frame_groups(train, group_size)?;
    groups.shuffle(&mut seeded(seed));
    let target = (val_fraction * train.images.len() as f64).round() as usize;

    let (mut train_ids, mut val_ids) = (Vec::new(), Vec::new());
    for g in groups {
        if val_ids.len() < target {
            val_ids.extend(g);
        } else {
            train_ids.extend(g);
        }
    }
    train_ids.sort_unstable();
    val_ids.sort_unstable();
    Ok(SplitManifest {
        train: train_ids,
        val: val_ids,
        test: Vec::new(),
        seed,
        rules: SplitRules::default(),
    })
}

pub const GROUP_SIZE: usize = 5;
pub const VAL_FRACTION: f64 = 0.10;

/// Train/test by rules, then grouped validation (5-frame groups, 10%) on the train side.
pub fn build_split(
    d: &Dataset,
    rules: &SplitRules,
    seed: u64,
) -> Result<SplitManifest, BuildError> {
    let (train, test) = split_train_test(d, rules)?;
    let mut manifest = group_split_validation(&train, GROUP_SIZE, VAL_FRACTION, seed)?;
    manifest.test = test.images.iter().map(|im| im.id).collect();
    manifest.test.sort_unstable();
    manifest.rules = rules.clone();
    Ok(manifest)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub fall: u64,
    pub non_fall: u64,
    pub total: u64,
}

impl LabelCounts {
    fn add(&mut self, label: FallLabel) {
        match label {
            FallLabel::Fall => self.fall += 1,
            FallLabel::NonFall => self.non_fall += 1,
        }
        self.total += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceCounts {
    pub source: Source,
    #[serde(flatten)]
    pub counts: LabelCounts,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCount {
    pub category: String,
    pub annotations: u64,
    pub images: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositionReport {
    pub sources: Vec<SourceCounts>,
    pub total: LabelCounts,
    /// Images without a provenance block.
    pub unlabeled: u64,
    pub categories: Vec<CategoryCount>,
}

/// Fall/non-fall counts per source and overall, plus per-category annotation counts.
pub fn stats(d: &Dataset) -> CompositionReport {
    let mut per_source: BTreeMap<Source, LabelCounts> = Source::ALL
        .into_iter()
        .map(|s| (s, LabelCounts::default()))
        .collect();
    let mut total = LabelCounts::default();
    let mut unlabeled = 0;
    for im in &d.images {
        match &im.ctx {
            Some(ctx) => {
                per_source.entry(ctx.source).or_default().add(ctx.label);
                total.add(ctx.label);
            }
            None => unlabeled += 1,
        }
    }
    let categories = d
        .categories
        .iter()
        .map(|c| {
            let anns: Vec<&Annotation> = d
                .annotations
                .iter()
                .filter(|a| a.category_id == c.id)
                .collect();
            let images: HashSet<u64> = anns.iter().map(|a| a.image_id).collect();
            CategoryCount {
                category: c.name.name().to_string(),
                annotations: anns.len() as u64,
                images: images.len() as u64,
            }
        })
        .collect();
    CompositionReport {
        sources: per_source
            .into_iter()
            .map(|(source, counts)| SourceCounts { source, counts })
            .collect(),
        total,
        unlabeled,
        categories,
    }
}
