//! Dataset tooling and context-aware augmentation for fall-detection images.
//!
//! The crate covers the whole offline data path:
//!
//! - [`coco`]: COCO-JSON datasets with uncompressed RLE masks and per-image
//!   provenance (source dataset, camera, sequence, frame, fall label).
//! - [`rle`] and [`mask`]: mask codec and the region algebra built on it.
//! - [`transform`]: solid color, Gaussian blur and grayscale applied to masked
//!   regions, and the resize / perspective / flip / normalize pipeline.
//! - [`scenario`]: the `F:[t]+B:[t]` notation naming which region gets which
//!   transform.
//! - [`builder`]: box doubling and cropping, temporal downsampling, splits
//!   and composition statistics.
//! - [`eval`]: confusion counts, F1 and per-object subset scores.
//! - [`runner`]: batch application of a scenario to a dataset on disk.
//! - [`synth`]: synthetic datasets and scenes for tests and benchmarks.

pub mod builder;
pub mod coco;
pub mod eval;
pub mod mask;
pub mod rle;
pub mod rng;
pub mod runner;
pub mod scenario;
pub mod synth;
pub mod transform;

pub use builder::{
    build_split, double_bbox, split_train_test, stats, BuildError, CompositionReport,
    SplitManifest, SplitRule, SplitRules,
};
pub use coco::{
    load_dataset, save_dataset, Annotation, Category, Dataset, DatasetError, FallLabel,
    ImageRecord, KeyObject, Provenance, Source,
};
pub use eval::{
    confusion, evaluate, f1, read_predictions, subset_eval, ConfusionCounts, EvalError, EvalReport,
    PredictionRecord, SubsetResult, SweepReport, SweepRow,
};
pub use image::RgbImage;
pub use mask::{MaskError, Rect};
pub use rle::{rle_decode, rle_encode, Bitmask, RleError, RleMask};
pub use runner::{transform_dataset, RunError, TransformManifest};
pub use scenario::{
    format_scenario, kernel_sweep, parse_scenario, RegionRef, Scenario, ScenarioError,
};
pub use transform::{
    run_pipeline, BlurPlacement, KernelSize, ObjectMasks, PipelineConfig, PipelineOutput,
    TransformError, TransformKind,
};
