use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use ctxaug_core::runner::{instantiate_template, sweep_dataset};
use ctxaug_core::{
    build_split, evaluate, kernel_sweep, load_dataset, parse_scenario, read_predictions, stats,
    transform_dataset, BlurPlacement, Dataset, KeyObject, PipelineConfig, Scenario, SplitRules,
    TransformError,
};
use log::info;
use serde::Deserialize;

use crate::args::{parse_size, Command, DatasetArg, LogLevel, RunArgs};
use crate::error::CliError;

/// Contents of `--config`; every key is optional and mirrors a long flag.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub dataset: Option<PathBuf>,
    pub image_root: Option<PathBuf>,
    pub scenario: Option<String>,
    pub scenario_template: Option<String>,
    pub placement: Option<String>,
    pub out_dir: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub train_mode: Option<bool>,
    pub workers: Option<usize>,
    pub resize: Option<String>,
    pub rules: Option<PathBuf>,
    pub preds: Option<PathBuf>,
    pub subset: Option<Vec<KeyObject>>,
    pub lo: Option<u32>,
    pub hi: Option<u32>,
    pub log_level: Option<LogLevel>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::invalid(format!("config {}: {e}", path.display())))
    }
}

fn required<T>(flag: Option<T>, file: Option<T>, name: &str) -> Result<T, CliError> {
    flag.or(file).ok_or_else(|| {
        CliError::invalid(format!(
            "missing --{} (or `{}` in the config file)",
            name.replace('_', "-"),
            name
        ))
    })
}

fn dataset_path(a: &DatasetArg, cfg: &FileConfig) -> Result<PathBuf, CliError> {
    required(a.dataset.clone(), cfg.dataset.clone(), "dataset")
}

/// Writes `text` to `out`, or to stdout when no path is given.
fn emit(out: Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
            info!("wrote {}", path.display());
            Ok(())
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

/// Pipeline settings and paths shared by `transform` and `sweep`, resolved
/// from flags and config before any image is touched.
struct RunPlan {
    dataset: PathBuf,
    image_root: PathBuf,
    out_dir: PathBuf,
    workers: usize,
    pipeline: PipelineConfig,
}

fn plan(a: &RunArgs, cfg: &FileConfig) -> Result<RunPlan, CliError> {
    let dataset = dataset_path(&a.dataset, cfg)?;
    let out_dir = required(a.out_dir.clone(), cfg.out_dir.clone(), "out_dir")?;
    let image_root = match a.image_root.clone().or(cfg.image_root.clone()) {
        Some(root) => root,
        None => dataset
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    let placement = match (a.placement, &cfg.placement) {
        (Some(p), _) => Some(p),
        (None, Some(s)) => Some(s.parse::<BlurPlacement>().map_err(CliError::invalid)?),
        (None, None) => None,
    };
    let resize = match (a.resize, &cfg.resize) {
        (Some(r), _) => r,
        (None, Some(s)) => parse_size(s).map_err(CliError::invalid)?,
        (None, None) => PipelineConfig::default().resize,
    };
    let workers = a
        .workers
        .or(cfg.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(CliError::invalid("--workers must be at least 1"));
    }
    let pipeline = PipelineConfig {
        resize,
        placement,
        seed: a.seed.or(cfg.seed).unwrap_or(0),
        train: a.train_mode || cfg.train_mode.unwrap_or(false),
        ..PipelineConfig::default()
    };
    pipeline.validate()?;
    Ok(RunPlan {
        dataset,
        image_root,
        out_dir,
        workers,
        pipeline,
    })
}

fn check_placement(scenario: &Scenario, cfg: &PipelineConfig) -> Result<(), CliError> {
    if scenario.has_blur() && cfg.placement.is_none() {
        return Err(CliError::invalid(format!(
            "{} (scenario {scenario} blurs; pass --placement before-resize or after-resize)",
            TransformError::PlacementRequired
        )));
    }
    Ok(())
}

fn load(path: &Path) -> Result<Dataset, CliError> {
    let d = load_dataset(path)?;
    info!(
        "loaded {}: {} images, {} annotations",
        path.display(),
        d.images.len(),
        d.annotations.len()
    );
    Ok(d)
}

pub fn run(command: Command, cfg: &FileConfig) -> Result<(), CliError> {
    match command {
        Command::Validate(a) => {
            let path = dataset_path(&a, cfg)?;
            let d = load_dataset(&path)?;
            let labeled = d.images.iter().filter(|im| im.ctx.is_some()).count();
            emit(
                None,
                &format!(
                    "ok: {} images ({} with provenance), {} annotations, {} categories\n",
                    d.images.len(),
                    labeled,
                    d.annotations.len(),
                    d.categories.len()
                ),
            )
        }
        Command::Stats(a) => {
            let d = load(&dataset_path(&a.dataset, cfg)?)?;
            emit(a.out.or(cfg.out.clone()), &pretty(&stats(&d)))
        }
        Command::Transform(a) => {
            let text = required(a.scenario, cfg.scenario.clone(), "scenario")?;
            let scenario = parse_scenario(&text)?;
            let p = plan(&a.run, cfg)?;
            check_placement(&scenario, &p.pipeline)?;
            let d = load(&p.dataset)?;
            let m = transform_dataset(
                &d,
                &p.image_root,
                &scenario,
                &p.pipeline,
                &p.out_dir,
                p.workers,
            )?;
            info!(
                "wrote {} images to {}",
                m.entries.len(),
                p.out_dir.display()
            );
            Ok(())
        }
        Command::Split(a) => {
            let path = dataset_path(&a.dataset, cfg)?;
            let rules = match a.rules.or(cfg.rules.clone()) {
                Some(r) => {
                    let text = std::fs::read_to_string(&r).map_err(|e| CliError::io(&r, e))?;
                    serde_json::from_str::<SplitRules>(&text)
                        .map_err(|e| CliError::invalid(format!("rules {}: {e}", r.display())))?
                }
                None => SplitRules::standard(),
            };
            rules.validate()?;
            let seed = a.seed.or(cfg.seed).unwrap_or(0);
            let d = load(&path)?;
            let m = build_split(&d, &rules, seed)?;
            info!(
                "split: {} train, {} val, {} test",
                m.train.len(),
                m.val.len(),
                m.test.len()
            );
            emit(a.out.or(cfg.out.clone()), &pretty(&m))
        }
        Command::Eval(a) => {
            let path = dataset_path(&a.dataset, cfg)?;
            let preds_path = required(a.preds, cfg.preds.clone(), "preds")?;
            let subsets = if a.subset.is_empty() {
                cfg.subset.clone().unwrap_or_default()
            } else {
                a.subset
            };
            let d = load(&path)?;
            let file = File::open(&preds_path).map_err(|e| CliError::io(&preds_path, e))?;
            let preds = read_predictions(BufReader::new(file))?;
            let report = evaluate(&preds, &d, &subsets)?;
            emit(a.out.or(cfg.out.clone()), &pretty(&report))
        }
        Command::Sweep(a) => {
            let template = required(
                a.scenario_template,
                cfg.scenario_template.clone(),
                "scenario_template",
            )?;
            let lo = a.lo.or(cfg.lo).unwrap_or(3);
            let hi = a.hi.or(cfg.hi).unwrap_or(31);
            let kernels = kernel_sweep(lo, hi)?;
            let p = plan(&a.run, cfg)?;
            for &k in &kernels {
                check_placement(&instantiate_template(&template, k)?, &p.pipeline)?;
            }
            let d = load(&p.dataset)?;
            let entries = sweep_dataset(
                &d,
                &p.image_root,
                &template,
                &kernels,
                &p.pipeline,
                &p.out_dir,
                p.workers,
            )?;
            info!(
                "sweep wrote {} runs to {}",
                entries.len(),
                p.out_dir.display()
            );
            Ok(())
        }
    }
}
