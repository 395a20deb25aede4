//! Scoring classifier predictions against dataset labels.
//!
//! "fall" is the positive class throughout. F1 is `2tp / (2tp + fp + fn)`;
//! when that denominator is zero the score is reported as 0.0 and flagged
//! as degenerate.

use std::collections::HashMap;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coco::{Dataset, DatasetError, FallLabel, KeyObject};
use crate::scenario::{parse_scenario, Scenario, ScenarioError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("prediction file: {0}")]
    Csv(#[from] csv::Error),
    #[error("prediction file header must be `image_id,pred_label[,score]`, got `{0}`")]
    BadHeader(String),
    #[error("prediction row {row}: {message}")]
    BadRow { row: usize, message: String },
    #[error("no prediction for image {0}")]
    MissingPrediction(u64),
    #[error("more than one prediction for image {0}")]
    DuplicatePrediction(u64),
    #[error("prediction for image {0}, which is not in the dataset")]
    UnknownImage(u64),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("report JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub image_id: u64,
    pub label: FallLabel,
    pub score: Option<f64>,
}

/// Reads `image_id,pred_label[,score]` CSV with a mandatory header row.
pub fn read_predictions<R: Read>(reader: R) -> Result<Vec<PredictionRecord>, EvalError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let names: Vec<&str> = header.iter().collect();
    let ok = matches!(
        names.as_slice(),
        ["image_id", "pred_label"] | ["image_id", "pred_label", "score"]
    );
    if !ok {
        return Err(EvalError::BadHeader(names.join(",")));
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let bad = |message: String| EvalError::BadRow { row: line, message };
        if row.len() < 2 || row.len() > names.len() {
            return Err(bad(format!(
                "expected {} fields, got {}",
                names.len(),
                row.len()
            )));
        }
        let image_id = row[0]
            .parse()
            .map_err(|_| bad(format!("invalid image id {:?}", &row[0])))?;
        let label = row[1]
            .parse()
            .map_err(|l| bad(format!("invalid label {l:?} (expected fall or non-fall)")))?;
        let score = match row.get(2).filter(|s| !s.is_empty()) {
            None => None,
            Some(s) => {
                let v: f64 = s.parse().map_err(|_| bad(format!("invalid score {s:?}")))?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(bad(format!("score {v} outside [0, 1]")));
                }
                Some(v)
            }
        };
        out.push(PredictionRecord {
            image_id,
            label,
            score,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn record(&mut self, truth: FallLabel, predicted: FallLabel) {
        match (truth, predicted) {
            (FallLabel::Fall, FallLabel::Fall) => self.tp += 1,
            (FallLabel::NonFall, FallLabel::Fall) => self.fp += 1,
            (FallLabel::NonFall, FallLabel::NonFall) => self.tn += 1,
            (FallLabel::Fall, FallLabel::NonFall) => self.fn_ += 1,
        }
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = ConfusionCounts;

    fn add(self, o: Self) -> Self {
        ConfusionCounts {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            tn: self.tn + o.tn,
            fn_: self.fn_ + o.fn_,
        }
    }
}

/// F1 with fall as positive; 0.0 when there are no positives at all.
pub fn f1(c: &ConfusionCounts) -> f64 {
    let den = 2 * c.tp + c.fp + c.fn_;
    if den == 0 {
        0.0
    } else {
        (2 * c.tp) as f64 / den as f64
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Indexes predictions by image id, rejecting duplicates and unknown images.
fn index_predictions<'p>(
    preds: &'p [PredictionRecord],
    d: &Dataset,
) -> Result<HashMap<u64, &'p PredictionRecord>, EvalError> {
    let known: std::collections::HashSet<u64> = d.images.iter().map(|im| im.id).collect();
    let mut by_id = HashMap::with_capacity(preds.len());
    for p in preds {
        if !known.contains(&p.image_id) {
            return Err(EvalError::UnknownImage(p.image_id));
        }
        if by_id.insert(p.image_id, p).is_some() {
            return Err(EvalError::DuplicatePrediction(p.image_id));
        }
    }
    Ok(by_id)
}

fn tally(
    by_id: &HashMap<u64, &PredictionRecord>,
    d: &Dataset,
    keep: impl Fn(u64) -> bool,
) -> Result<ConfusionCounts, EvalError> {
    let mut c = ConfusionCounts::default();
    for im in d.images.iter().filter(|im| keep(im.id)) {
        let truth = im.provenance()?.label;
        let p = by_id
            .get(&im.id)
            .ok_or(EvalError::MissingPrediction(im.id))?;
        c.record(truth, p.label);
    }
    Ok(c)
}

/// Confusion counts over every image in `d`; each needs exactly one prediction.
pub fn confusion(preds: &[PredictionRecord], d: &Dataset) -> Result<ConfusionCounts, EvalError> {
    let by_id = index_predictions(preds, d)?;
    tally(&by_id, d, |_| true)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub counts: ConfusionCounts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// No positives in either labels or predictions; `f1` is 0 by convention.
    pub degenerate: bool,
}

impl Scores {
    pub fn from_counts(counts: ConfusionCounts) -> Self {
        Self {
            counts,
            precision: ratio(counts.tp, counts.tp + counts.fp),
            recall: ratio(counts.tp, counts.tp + counts.fn_),
            f1: f1(&counts),
            degenerate: 2 * counts.tp + counts.fp + counts.fn_ == 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubsetResult {
    /// No image contains the category.
    Empty,
    Scored {
        counts: ConfusionCounts,
        f1: f64,
    },
}

/// Evaluation restricted to images with at least one annotation of `category`.
pub fn subset_eval(
    preds: &[PredictionRecord],
    d: &Dataset,
    category: KeyObject,
) -> Result<SubsetResult, EvalError> {
    let by_id = index_predictions(preds, d)?;
    let members = d.images_with(category);
    if members.is_empty() {
        return Ok(SubsetResult::Empty);
    }
    let counts = tally(&by_id, d, |id| members.contains(&id))?;
    Ok(SubsetResult::Scored {
        counts,
        f1: f1(&counts),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetReport {
    pub category: KeyObject,
    pub images: u64,
    pub empty: bool,
    pub scores: Option<Scores>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub images: u64,
    pub positive_class: FallLabel,
    pub overall: Scores,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub subsets: Vec<SubsetReport>,
}

/// Overall scores plus one entry per requested key-object subset.
pub fn evaluate(
    preds: &[PredictionRecord],
    d: &Dataset,
    subsets: &[KeyObject],
) -> Result<EvalReport, EvalError> {
    let overall = Scores::from_counts(confusion(preds, d)?);
    let mut out = Vec::with_capacity(subsets.len());
    for &category in subsets {
        let images = d.images_with(category).len() as u64;
        let scores = match subset_eval(preds, d, category)? {
            SubsetResult::Empty => None,
            SubsetResult::Scored { counts, .. } => Some(Scores::from_counts(counts)),
        };
        out.push(SubsetReport {
            category,
            images,
            empty: scores.is_none(),
            scores,
        });
    }
    Ok(EvalReport {
        images: d.images.len() as u64,
        positive_class: FallLabel::Fall,
        overall,
        subsets: out,
    })
}

/// One row of a scenario grid: the F1 on raw test images and, optionally,
/// the F1 on test images transformed the same way as in training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scenario: Scenario,
    pub f1: f64,
    pub matched_f1: Option<f64>,
}

impl SweepRow {
    /// `0.87 (0.919)` style cell.
    pub fn cell(&self) -> String {
        match self.matched_f1 {
            Some(m) => format!("{} ({})", self.f1, m),
            None => self.f1.to_string(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn from_rows<'a, I>(rows: I) -> Result<Self, EvalError>
    where
        I: IntoIterator<Item = (&'a str, f64, Option<f64>)>,
    {
        let rows = rows
            .into_iter()
            .map(|(s, f1, matched_f1)| {
                Ok(SweepRow {
                    scenario: parse_scenario(s)?,
                    f1,
                    matched_f1,
                })
            })
            .collect::<Result<Vec<_>, EvalError>>()?;
        Ok(Self { rows })
    }

    /// Long format: `scenario,f1,matched_f1`, one row per scenario.
    pub fn to_csv(&self) -> Result<String, EvalError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)?;
        }
        if self.rows.is_empty() {
            w.write_record(["scenario", "f1", "matched_f1"])?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| csv::Error::from(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self, EvalError> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let rows = rdr.deserialize().collect::<Result<Vec<SweepRow>, _>>()?;
        Ok(Self { rows })
    }

    /// Wide format: a header of scenario names and one row of `f1 (matched)`
    /// cells led by `label`.
    pub fn to_wide_csv(&self, label: &str) -> Result<String, EvalError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["model".to_string()];
        header.extend(self.rows.iter().map(|r| r.scenario.to_string()));
        w.write_record(&header)?;
        let mut cells = vec![label.to_string()];
        cells.extend(self.rows.iter().map(SweepRow::cell));
        w.write_record(&cells)?;
        let bytes = w
            .into_inner()
            .map_err(|e| csv::Error::from(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Result<String, EvalError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, EvalError> {
        Ok(serde_json::from_str(text)?)
    }
}
