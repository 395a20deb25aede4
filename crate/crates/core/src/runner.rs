//! Batch application of a scenario to every image of a dataset.
//!
//! Each image is processed independently with its own RNG stream, so the
//! output tree does not depend on the worker count.

use std::path::{Path, PathBuf};

use image::{ImageFormat, RgbImage};
use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coco::{Dataset, ImageRecord};
use crate::rle::RleError;
use crate::scenario::{parse_scenario, Scenario, ScenarioError};
use crate::transform::{
    run_pipeline, BlurPlacement, KernelSize, ObjectMasks, PipelineConfig, TransformError,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error(
        "image {image_id}: file is {found:?} but the dataset says {expected:?} (width, height)"
    )]
    DimensionMismatch {
        image_id: u64,
        expected: (u32, u32),
        found: (u32, u32),
    },
    #[error("image {image_id}: {source}")]
    Transform {
        image_id: u64,
        #[source]
        source: TransformError,
    },
    #[error("image {image_id}: {source}")]
    Rle {
        image_id: u64,
        #[source]
        source: RleError,
    },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("scenario template {0:?} must contain `{{k}}`")]
    BadTemplate(String),
    #[error("worker pool: {0}")]
    Pool(String),
}

impl RunError {
    /// True for failures of the filesystem or image codec rather than of the
    /// inputs' content.
    pub fn is_io(&self) -> bool {
        matches!(self, RunError::Io { .. } | RunError::Image { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image_id: u64,
    pub source_file: String,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformManifest {
    pub scenario: Scenario,
    pub placement: Option<BlurPlacement>,
    pub seed: u64,
    pub train: bool,
    pub resize: (u32, u32),
    pub entries: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn output_name(image_id: u64) -> String {
    format!("{image_id:08}.png")
}

fn process_one(
    d: &Dataset,
    rec: &ImageRecord,
    image_root: &Path,
    scenario: &Scenario,
    cfg: &PipelineConfig,
    out_dir: &Path,
) -> Result<ManifestEntry, RunError> {
    let src = image_root.join(&rec.file_name);
    let img: RgbImage = image::open(&src)
        .map_err(|source| RunError::Image {
            path: src.clone(),
            source,
        })?
        .to_rgb8();
    if img.dimensions() != (rec.width, rec.height) {
        return Err(RunError::DimensionMismatch {
            image_id: rec.id,
            expected: (rec.width, rec.height),
            found: img.dimensions(),
        });
    }
    let masks = ObjectMasks::from_dataset(d, rec.id).map_err(|source| RunError::Rle {
        image_id: rec.id,
        source,
    })?;
    let out = run_pipeline(&img, &masks, scenario, cfg, rec.id).map_err(|source| {
        RunError::Transform {
            image_id: rec.id,
            source,
        }
    })?;
    let name = output_name(rec.id);
    let dst = out_dir.join(&name);
    out.image
        .save_with_format(&dst, ImageFormat::Png)
        .map_err(|source| RunError::Image { path: dst, source })?;
    debug!("image {} -> {}", rec.id, name);
    Ok(ManifestEntry {
        image_id: rec.id,
        source_file: rec.file_name.clone(),
        output: name,
    })
}

/// Runs the pipeline over every image of `d` (paths relative to
/// `image_root`), writing `<id>.png` files and `manifest.json` to `out_dir`.
pub fn transform_dataset(
    d: &Dataset,
    image_root: &Path,
    scenario: &Scenario,
    cfg: &PipelineConfig,
    out_dir: &Path,
    workers: usize,
) -> Result<TransformManifest, RunError> {
    cfg.validate().map_err(|source| RunError::Transform {
        image_id: 0,
        source,
    })?;
    if scenario.has_blur() && cfg.placement.is_none() {
        return Err(RunError::Transform {
            image_id: 0,
            source: TransformError::PlacementRequired,
        });
    }
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| RunError::Pool(e.to_string()))?;
    info!(
        "transforming {} images with {} (workers: {})",
        d.images.len(),
        scenario,
        workers.max(1)
    );
    let entries = pool.install(|| {
        d.images
            .par_iter()
            .map(|rec| process_one(d, rec, image_root, scenario, cfg, out_dir))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let manifest = TransformManifest {
        scenario: scenario.clone(),
        placement: cfg.placement,
        seed: cfg.seed,
        train: cfg.train,
        resize: cfg.resize,
        entries,
    };
    let path = out_dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(io_err(&path))?;
    Ok(manifest)
}

/// Substitutes `{k}` in `template` and parses the result.
pub fn instantiate_template(template: &str, k: KernelSize) -> Result<Scenario, RunError> {
    if !template.contains("{k}") {
        return Err(RunError::BadTemplate(template.to_string()));
    }
    Ok(parse_scenario(&template.replace("{k}", &k.to_string()))?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub kernel: u32,
    pub scenario: Scenario,
    pub dir: String,
}

pub fn sweep_dir_name(k: KernelSize) -> String {
    format!("k{:02}", k.get())
}

/// One [`transform_dataset`] run per kernel size, each into `out_dir/kNN`,
/// plus a `sweep.json` index.
pub fn sweep_dataset(
    d: &Dataset,
    image_root: &Path,
    template: &str,
    kernels: &[KernelSize],
    cfg: &PipelineConfig,
    out_dir: &Path,
    workers: usize,
) -> Result<Vec<SweepEntry>, RunError> {
    let scenarios = kernels
        .iter()
        .map(|&k| instantiate_template(template, k).map(|s| (k, s)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut entries = Vec::with_capacity(scenarios.len());
    for (k, scenario) in scenarios {
        let dir = sweep_dir_name(k);
        info!("sweep: kernel {k} -> {dir}");
        transform_dataset(d, image_root, &scenario, cfg, &out_dir.join(&dir), workers)?;
        entries.push(SweepEntry {
            kernel: k.get(),
            scenario,
            dir,
        });
    }
    let path = out_dir.join("sweep.json");
    let mut text = serde_json::to_string_pretty(&entries).expect("sweep index serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(io_err(&path))?;
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_substitution() {
        let k = KernelSize::new(7).unwrap();
        assert_eq!(
            instantiate_template("F+B:Blur{k}", k).unwrap().to_string(),
            "F+B:Blur7"
        );
        assert!(matches!(
            instantiate_template("F+B:Blur11", k),
            Err(RunError::BadTemplate(_))
        ));
        assert_eq!(sweep_dir_name(k), "k07");
    }
}
