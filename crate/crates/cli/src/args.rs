use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ctxaug_core::{BlurPlacement, KeyObject};

/// Dataset tooling and context-aware augmentation for fall-detection images.
///
/// Data goes to stdout or the given output paths; progress and warnings go
/// to stderr. Exit status is 0 on success, 1 for invalid input or
/// configuration and 2 for I/O failures.
#[derive(Debug, Parser)]
#[command(name = "ctxaug", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON file whose keys mirror the long flags (`train_mode`, `out_dir`, ...).
    /// Flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Verbosity of stderr logging [default: info].
    #[arg(long, global = true, value_enum)]
    pub log_level: Option<LogLevel>,

    /// Report errors on stderr as one JSON object per line.
    #[arg(long, global = true)]
    pub json_errors: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogLevel {
    Off,
    Error,
    Warn,
    Info,
    Debug,
    Trace,
}

impl From<LogLevel> for log::LevelFilter {
    fn from(l: LogLevel) -> Self {
        match l {
            LogLevel::Off => log::LevelFilter::Off,
            LogLevel::Error => log::LevelFilter::Error,
            LogLevel::Warn => log::LevelFilter::Warn,
            LogLevel::Info => log::LevelFilter::Info,
            LogLevel::Debug => log::LevelFilter::Debug,
            LogLevel::Trace => log::LevelFilter::Trace,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and check a COCO dataset; prints a one-line summary.
    Validate(DatasetArg),
    /// Fall/non-fall counts per source and annotation counts per category, as JSON.
    Stats(StatsArgs),
    /// Apply a scenario to every image and write PNGs plus manifest.json.
    Transform(TransformArgs),
    /// Train/validation/test split manifest.
    Split(SplitArgs),
    /// Score predictions (CSV `image_id,pred_label[,score]`) against the labels.
    Eval(EvalArgs),
    /// One transform run per odd kernel size in [lo, hi], into out-dir/kNN.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct DatasetArg {
    /// COCO JSON dataset.
    #[arg(long, value_name = "FILE")]
    pub dataset: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub dataset: DatasetArg,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

/// Flags shared by `transform` and `sweep`.
#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub dataset: DatasetArg,
    /// Directory image file names are relative to; defaults to the dataset file's directory.
    #[arg(long, value_name = "DIR")]
    pub image_root: Option<PathBuf>,
    /// Blur before or after resizing (aliases: seeded, fixed). Required when the scenario blurs.
    #[arg(long, value_parser = parse_placement)]
    pub placement: Option<BlurPlacement>,
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also apply random perspective and horizontal flip.
    #[arg(long)]
    pub train_mode: bool,
    /// Worker threads; output does not depend on this.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output size as HEIGHTxWIDTH [default: 256x256].
    #[arg(long, value_parser = parse_size)]
    pub resize: Option<(u32, u32)>,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Scenario such as "F+B:Blur11" or "F+B+bed:Grayscale".
    #[arg(long)]
    pub scenario: Option<String>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub dataset: DatasetArg,
    /// JSON `{"test": [{"source": ..., "cameras": [...]}]}`; defaults to
    /// URFall plus KULeuven cameras 1 and 2.
    #[arg(long, value_name = "FILE")]
    pub rules: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the manifest here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub dataset: DatasetArg,
    #[arg(long, value_name = "FILE")]
    pub preds: Option<PathBuf>,
    /// Also score the images containing this key object (repeatable).
    #[arg(long, value_parser = parse_key_object)]
    pub subset: Vec<KeyObject>,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Smallest kernel size [default: 3].
    #[arg(long)]
    pub lo: Option<u32>,
    /// Largest kernel size [default: 31].
    #[arg(long)]
    pub hi: Option<u32>,
    /// Scenario with `{k}` standing for the kernel size, e.g. "F+B:Blur{k}".
    #[arg(long)]
    pub scenario_template: Option<String>,
}

fn parse_placement(s: &str) -> Result<BlurPlacement, String> {
    s.parse()
}

fn parse_key_object(s: &str) -> Result<KeyObject, String> {
    s.parse().map_err(|_| {
        let names: Vec<&str> = KeyObject::ALL.iter().map(|k| k.name()).collect();
        format!(
            "unknown key object {s:?}; expected one of {}",
            names.join(", ")
        )
    })
}

pub fn parse_size(s: &str) -> Result<(u32, u32), String> {
    let bad = || format!("expected HEIGHTxWIDTH such as 256x256, got {s:?}");
    let (h, w) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let h: u32 = h.trim().parse().map_err(|_| bad())?;
    let w: u32 = w.trim().parse().map_err(|_| bad())?;
    if h == 0 || w == 0 {
        return Err(bad());
    }
    Ok((h, w))
}
