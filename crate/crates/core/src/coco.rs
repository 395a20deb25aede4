//! COCO-JSON datasets with uncompressed RLE masks and fall-detection provenance.
//!
//! On-disk layout (a subset of COCO plus one namespaced `ctx` block per image):
//!
//! ```json
//! {
//!   "images": [{"id": 1, "file_name": "a.png", "width": 64, "height": 48,
//!               "ctx": {"label": "fall", "source": "KULeuven", "camera": 2,
//!                       "sequence": "s01", "frame": 17}}],
//!   "annotations": [{"id": 1, "image_id": 1, "category_id": 1,
//!                    "bbox": [x, y, w, h],
//!                    "segmentation": {"size": [48, 64], "counts": [..]}}],
//!   "categories": [{"id": 1, "name": "person"}]
//! }
//! ```
//!
//! Saved files also carry `area` and `iscrowd: 0` on every annotation so
//! generic COCO readers accept them. On load `area` is ignored and any
//! non-zero `iscrowd` is rejected.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mask::Rect;
use crate::rle::{RleError, RleMask};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed dataset JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("category {id}: unknown category name {name:?}")]
    UnknownCategory { id: u32, name: String },
    #[error("duplicate category id {0}")]
    DuplicateCategoryId(u32),
    #[error("duplicate category name {0}")]
    DuplicateCategoryName(KeyObject),
    #[error("duplicate image id {0}")]
    DuplicateImageId(u64),
    #[error("duplicate annotation id {0}")]
    DuplicateAnnotationId(u64),
    #[error("image {image_id}: {reason}")]
    InvalidImage { image_id: u64, reason: String },
    #[error("image {image_id}: frame {frame} of sequence {sequence:?} already used by image {other} in {source_name}")]
    DuplicateFrame {
        image_id: u64,
        other: u64,
        source_name: Source,
        sequence: String,
        frame: u32,
    },
    #[error("annotation {annotation_id}: image {image_id} does not exist")]
    MissingImage { annotation_id: u64, image_id: u64 },
    #[error("annotation {annotation_id}: category {category_id} does not exist")]
    MissingCategory {
        annotation_id: u64,
        category_id: u32,
    },
    #[error("annotation {annotation_id}: unsupported segmentation ({reason})")]
    UnsupportedSegmentation { annotation_id: u64, reason: String },
    #[error("annotation {annotation_id}: {source}")]
    BadRle {
        annotation_id: u64,
        #[source]
        source: RleError,
    },
    #[error("annotation {annotation_id}: mask size {mask:?} does not match image {image_id} size {image:?} (height, width)")]
    MaskSizeMismatch {
        annotation_id: u64,
        image_id: u64,
        mask: (u32, u32),
        image: (u32, u32),
    },
    #[error("annotation {annotation_id}: bbox {bbox:?} outside image {image_id}")]
    BBoxOutOfBounds {
        annotation_id: u64,
        image_id: u64,
        bbox: [f64; 4],
    },
    #[error("image {image_id}: no provenance (`ctx`) block")]
    MissingProvenance { image_id: u64 },
}

/// The closed key-object vocabulary, in fixed id order (person = 1 ... walker = 7).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyObject {
    Person,
    Chair,
    Table,
    Bed,
    Wheelchair,
    Floor,
    Walker,
}

impl KeyObject {
    pub const ALL: [KeyObject; 7] = [
        KeyObject::Person,
        KeyObject::Chair,
        KeyObject::Table,
        KeyObject::Bed,
        KeyObject::Wheelchair,
        KeyObject::Floor,
        KeyObject::Walker,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KeyObject::Person => "person",
            KeyObject::Chair => "chair",
            KeyObject::Table => "table",
            KeyObject::Bed => "bed",
            KeyObject::Wheelchair => "wheelchair",
            KeyObject::Floor => "floor",
            KeyObject::Walker => "walker",
        }
    }

    /// Fixed category id, 1-based in vocabulary order.
    pub fn standard_id(self) -> u32 {
        Self::ALL.iter().position(|&k| k == self).unwrap() as u32 + 1
    }
}

impl fmt::Display for KeyObject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KeyObject {
    type Err = String;

    /// Case-insensitive.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        KeyObject::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Category {
    pub id: u32,
    pub name: KeyObject,
}

impl Category {
    /// All seven categories with their fixed ids.
    pub fn standard_table() -> Vec<Category> {
        KeyObject::ALL
            .into_iter()
            .map(|name| Category {
                id: name.standard_id(),
                name,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FallLabel {
    #[serde(rename = "fall")]
    Fall,
    #[serde(rename = "non-fall")]
    NonFall,
}

impl FallLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            FallLabel::Fall => "fall",
            FallLabel::NonFall => "non-fall",
        }
    }
}

impl fmt::Display for FallLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FallLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fall" => Ok(FallLabel::Fall),
            "non-fall" | "nonfall" | "non_fall" => Ok(FallLabel::NonFall),
            other => Err(other.to_string()),
        }
    }
}

/// Public dataset an image was extracted from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "CAUCAFall")]
    CaucaFall,
    #[serde(rename = "KULeuven")]
    KuLeuven,
    #[serde(rename = "URFall")]
    UrFall,
}

impl Source {
    pub const ALL: [Source; 3] = [Source::CaucaFall, Source::KuLeuven, Source::UrFall];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::CaucaFall => "CAUCAFall",
            Source::KuLeuven => "KULeuven",
            Source::UrFall => "URFall",
        }
    }

    /// Only multi-camera sources carry a camera id.
    pub fn has_cameras(self) -> bool {
        self == Source::KuLeuven
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The `ctx` extension block of an image.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub label: FallLabel,
    pub source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera: Option<u32>,
    #[serde(deserialize_with = "de_sequence")]
    pub sequence: String,
    pub frame: u32,
}

fn de_sequence<'de, D: serde::Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    match serde_json::Value::deserialize(d)? {
        serde_json::Value::String(s) => Ok(s),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        other => Err(serde::de::Error::custom(format!(
            "sequence must be a string or integer, got {other}"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub id: u64,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ctx: Option<Provenance>,
}

impl ImageRecord {
    pub fn provenance(&self) -> Result<&Provenance, DatasetError> {
        self.ctx
            .as_ref()
            .ok_or(DatasetError::MissingProvenance { image_id: self.id })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub id: u64,
    pub image_id: u64,
    pub category_id: u32,
    pub bbox: Rect,
    pub mask: RleMask,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    pub images: Vec<ImageRecord>,
    pub annotations: Vec<Annotation>,
    pub categories: Vec<Category>,
}

// ---------------------------------------------------------------------------
// on-disk representation

#[derive(Serialize, Deserialize)]
struct RawDataset {
    #[serde(default)]
    images: Vec<ImageRecord>,
    #[serde(default)]
    annotations: Vec<RawAnnotation>,
    #[serde(default)]
    categories: Vec<RawCategory>,
}

#[derive(Serialize, Deserialize)]
struct RawCategory {
    id: u32,
    name: String,
}

#[derive(Serialize, Deserialize)]
struct RawAnnotation {
    id: u64,
    image_id: u64,
    category_id: u32,
    bbox: [f64; 4],
    segmentation: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    area: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    iscrowd: Option<u8>,
}

#[derive(Serialize, Deserialize)]
struct RawRle {
    size: [u32; 2],
    counts: serde_json::Value,
}

fn parse_segmentation(annotation_id: u64, seg: serde_json::Value) -> Result<RleMask, DatasetError> {
    let unsupported = |reason: &str| DatasetError::UnsupportedSegmentation {
        annotation_id,
        reason: reason.to_string(),
    };
    if seg.is_array() {
        return Err(unsupported("polygon segmentations are not supported"));
    }
    let raw: RawRle = serde_json::from_value(seg)
        .map_err(|e| unsupported(&format!("expected {{size, counts}} RLE object: {e}")))?;
    let counts = match raw.counts {
        serde_json::Value::Array(items) => items
            .into_iter()
            .map(|v| {
                v.as_u64()
                    .and_then(|c| u32::try_from(c).ok())
                    .ok_or_else(|| unsupported("RLE counts must be non-negative integers"))
            })
            .collect::<Result<Vec<_>, _>>()?,
        serde_json::Value::String(_) => {
            return Err(unsupported(
                "compressed RLE (string counts) is not supported, use an integer counts array",
            ))
        }
        _ => return Err(unsupported("RLE counts must be an integer array")),
    };
    Ok(RleMask {
        size: (raw.size[0], raw.size[1]),
        counts,
    })
}

fn bbox_to_rect(
    annotation_id: u64,
    image: &ImageRecord,
    bbox: [f64; 4],
) -> Result<Rect, DatasetError> {
    let out_of_bounds = || DatasetError::BBoxOutOfBounds {
        annotation_id,
        image_id: image.id,
        bbox,
    };
    if bbox.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(out_of_bounds());
    }
    let r = bbox.map(|v| v.round() as u64);
    if r[0] + r[2] > u64::from(image.width) || r[1] + r[3] > u64::from(image.height) {
        return Err(out_of_bounds());
    }
    Ok(Rect::new(
        r[0] as u32,
        r[1] as u32,
        r[2] as u32,
        r[3] as u32,
    ))
}

impl Dataset {
    /// Parses and validates a dataset from a JSON string.
    pub fn from_json_str(s: &str) -> Result<Self, DatasetError> {
        let raw: RawDataset = serde_json::from_str(s)?;

        let mut categories = Vec::with_capacity(raw.categories.len());
        for c in raw.categories {
            let name = c
                .name
                .parse::<KeyObject>()
                .map_err(|name| DatasetError::UnknownCategory { id: c.id, name })?;
            categories.push(Category { id: c.id, name });
        }

        let image_sizes: HashMap<u64, &ImageRecord> =
            raw.images.iter().map(|im| (im.id, im)).collect();
        let mut annotations = Vec::with_capacity(raw.annotations.len());
        for a in raw.annotations {
            if a.iscrowd.unwrap_or(0) != 0 {
                return Err(DatasetError::UnsupportedSegmentation {
                    annotation_id: a.id,
                    reason: "crowd annotations are not supported".into(),
                });
            }
            let mask = parse_segmentation(a.id, a.segmentation)?;
            let image = image_sizes
                .get(&a.image_id)
                .ok_or(DatasetError::MissingImage {
                    annotation_id: a.id,
                    image_id: a.image_id,
                })?;
            let bbox = bbox_to_rect(a.id, image, a.bbox)?;
            annotations.push(Annotation {
                id: a.id,
                image_id: a.image_id,
                category_id: a.category_id,
                bbox,
                mask,
            });
        }

        let d = Dataset {
            images: raw.images,
            annotations,
            categories,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn to_json_string(&self) -> String {
        let raw = RawDataset {
            images: self.images.clone(),
            annotations: self
                .annotations
                .iter()
                .map(|a| RawAnnotation {
                    id: a.id,
                    image_id: a.image_id,
                    category_id: a.category_id,
                    bbox: [a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h].map(f64::from),
                    segmentation: serde_json::to_value(RawRle {
                        size: [a.mask.size.0, a.mask.size.1],
                        counts: a.mask.counts.clone().into(),
                    })
                    .expect("rle serializes"),
                    area: Some(a.mask.area() as f64),
                    iscrowd: Some(0),
                })
                .collect(),
            categories: self
                .categories
                .iter()
                .map(|c| RawCategory {
                    id: c.id,
                    name: c.name.name().to_string(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("dataset serializes")
    }

    /// Checks every structural invariant, reporting the first violation.
    pub fn validate(&self) -> Result<(), DatasetError> {
        let mut cat_ids = HashSet::new();
        let mut cat_names = HashSet::new();
        for c in &self.categories {
            if !cat_ids.insert(c.id) {
                return Err(DatasetError::DuplicateCategoryId(c.id));
            }
            if !cat_names.insert(c.name) {
                return Err(DatasetError::DuplicateCategoryName(c.name));
            }
        }

        let mut images: HashMap<u64, &ImageRecord> = HashMap::with_capacity(self.images.len());
        let mut frames: HashMap<(Source, &str, u32), u64> = HashMap::new();
        for im in &self.images {
            if images.insert(im.id, im).is_some() {
                return Err(DatasetError::DuplicateImageId(im.id));
            }
            if im.width == 0 || im.height == 0 {
                return Err(DatasetError::InvalidImage {
                    image_id: im.id,
                    reason: format!(
                        "dimensions must be positive, got {}x{}",
                        im.width, im.height
                    ),
                });
            }
            let Some(ctx) = &im.ctx else { continue };
            match (ctx.source.has_cameras(), ctx.camera) {
                (true, None) => {
                    return Err(DatasetError::InvalidImage {
                        image_id: im.id,
                        reason: format!("{} images require a camera id", ctx.source),
                    })
                }
                (false, Some(cam)) => {
                    return Err(DatasetError::InvalidImage {
                        image_id: im.id,
                        reason: format!(
                            "{} images must not carry a camera id (got {cam})",
                            ctx.source
                        ),
                    })
                }
                _ => {}
            }
            if let Some(&other) = frames.get(&(ctx.source, ctx.sequence.as_str(), ctx.frame)) {
                return Err(DatasetError::DuplicateFrame {
                    image_id: im.id,
                    other,
                    source_name: ctx.source,
                    sequence: ctx.sequence.clone(),
                    frame: ctx.frame,
                });
            }
            frames.insert((ctx.source, ctx.sequence.as_str(), ctx.frame), im.id);
        }

        let mut ann_ids = HashSet::with_capacity(self.annotations.len());
        for a in &self.annotations {
            if !ann_ids.insert(a.id) {
                return Err(DatasetError::DuplicateAnnotationId(a.id));
            }
            let im = images.get(&a.image_id).ok_or(DatasetError::MissingImage {
                annotation_id: a.id,
                image_id: a.image_id,
            })?;
            if !cat_ids.contains(&a.category_id) {
                return Err(DatasetError::MissingCategory {
                    annotation_id: a.id,
                    category_id: a.category_id,
                });
            }
            a.mask.validate().map_err(|source| DatasetError::BadRle {
                annotation_id: a.id,
                source,
            })?;
            if a.mask.size != (im.height, im.width) {
                return Err(DatasetError::MaskSizeMismatch {
                    annotation_id: a.id,
                    image_id: im.id,
                    mask: a.mask.size,
                    image: (im.height, im.width),
                });
            }
            if !a.bbox.fits_within(im.height, im.width) {
                return Err(DatasetError::BBoxOutOfBounds {
                    annotation_id: a.id,
                    image_id: im.id,
                    bbox: [a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h].map(f64::from),
                });
            }
        }
        Ok(())
    }

    pub fn image(&self, id: u64) -> Option<&ImageRecord> {
        self.images.iter().find(|im| im.id == id)
    }

    pub fn category(&self, id: u32) -> Option<&Category> {
        self.categories.iter().find(|c| c.id == id)
    }

    pub fn category_id(&self, name: KeyObject) -> Option<u32> {
        self.categories
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.id)
    }

    /// Annotations grouped by image id, each group in file order.
    pub fn annotations_by_image(&self) -> HashMap<u64, Vec<&Annotation>> {
        let mut out: HashMap<u64, Vec<&Annotation>> = HashMap::new();
        for a in &self.annotations {
            out.entry(a.image_id).or_default().push(a);
        }
        out
    }

    /// Ids of images holding at least one annotation of `name`.
    pub fn images_with(&self, name: KeyObject) -> HashSet<u64> {
        match self.category_id(name) {
            Some(cid) => self
                .annotations
                .iter()
                .filter(|a| a.category_id == cid)
                .map(|a| a.image_id)
                .collect(),
            None => HashSet::new(),
        }
    }

    /// Sub-dataset of the given images, their annotations, and the full category table.
    pub fn subset(&self, keep: &HashSet<u64>) -> Dataset {
        Dataset {
            images: self
                .images
                .iter()
                .filter(|im| keep.contains(&im.id))
                .cloned()
                .collect(),
            annotations: self
                .annotations
                .iter()
                .filter(|a| keep.contains(&a.image_id))
                .cloned()
                .collect(),
            categories: self.categories.clone(),
        }
    }
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset, DatasetError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Dataset::from_json_str(&text)
}

pub fn save_dataset(d: &Dataset, path: impl AsRef<Path>) -> Result<(), DatasetError> {
    let path = path.as_ref();
    let mut text = d.to_json_string();
    text.push('\n');
    std::fs::write(path, text).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}
