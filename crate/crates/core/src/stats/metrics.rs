//! Confusion counts, accuracy/sensitivity/specificity and cross-expert summaries.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::domain::{
    Category, ExpertId, Generator, ImageId, Origin, Procedure, Question, Response, Source, TaskId, Truth,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Self { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn correct(&self) -> u64 {
        self.tp + self.tn
    }

    pub fn record(&mut self, truth: Truth, predicted: Truth) {
        match (truth, predicted) {
            (Truth::Positive, Truth::Positive) => self.tp += 1,
            (Truth::Positive, Truth::Negative) => self.fn_ += 1,
            (Truth::Negative, Truth::Negative) => self.tn += 1,
            (Truth::Negative, Truth::Positive) => self.fp += 1,
        }
    }

    pub fn merge(&mut self, other: &ConfusionCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }
}

/// One binary call an expert made about one image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Judgment {
    pub expert_id: ExpertId,
    pub task_id: TaskId,
    pub procedure: Procedure,
    pub item_index: usize,
    pub image_id: ImageId,
    pub question: Question,
    pub truth: Truth,
    pub predicted: Truth,
    pub source: Source,
    pub generator: Option<Generator>,
    pub category: Category,
    pub origin: Origin,
}

impl Judgment {
    pub fn is_correct(&self) -> bool {
        self.truth == self.predicted
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolution {
    Judged(Vec<Judgment>),
    /// The task has no binary ground truth (Likert, reasons, A5).
    NoBinaryTruth,
}

/// Maps a response to the binary judgments it contains.
pub trait TruthResolver {
    fn resolve(&self, response: &Response) -> Result<Resolution, StatsError>;
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionTally {
    pub per_expert: BTreeMap<ExpertId, ConfusionCounts>,
    /// Responses without a binary truth, or for a different question.
    pub excluded: usize,
}

impl ConfusionTally {
    pub fn pooled(&self) -> ConfusionCounts {
        let mut all = ConfusionCounts::default();
        for c in self.per_expert.values() {
            all.merge(c);
        }
        all
    }
}

/// Tallies judgments on `question` per expert. `keep` narrows the
/// judgments counted (e.g. to one procedure or one origin).
pub fn confusion_from_log<'a, R, F>(
    responses: impl IntoIterator<Item = &'a Response>,
    resolver: &R,
    question: Question,
    keep: F,
) -> Result<ConfusionTally, StatsError>
where
    R: TruthResolver + ?Sized,
    F: Fn(&Judgment) -> bool,
{
    let mut tally = ConfusionTally::default();
    for response in responses {
        match resolver.resolve(response)? {
            Resolution::NoBinaryTruth => tally.excluded += 1,
            Resolution::Judged(judgments) => {
                let mut counted = false;
                for j in judgments.iter().filter(|j| j.question == question && keep(j)) {
                    tally.per_expert.entry(j.expert_id.clone()).or_default().record(j.truth, j.predicted);
                    counted = true;
                }
                if !counted && !judgments.iter().any(|j| j.question == question) {
                    tally.excluded += 1;
                }
            }
        }
    }
    Ok(tally)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub accuracy: f64,
    /// `None` when there are no positive cases.
    pub sensitivity: Option<f64>,
    /// `None` when there are no negative cases.
    pub specificity: Option<f64>,
}

pub fn metrics(cc: &ConfusionCounts) -> Result<Metrics, StatsError> {
    let total = cc.total();
    if total == 0 {
        return Err(StatsError::Empty("no predictions to score".into()));
    }
    let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
    Ok(Metrics {
        accuracy: cc.correct() as f64 / total as f64,
        sensitivity: ratio(cc.tp, cc.tp + cc.fn_),
        specificity: ratio(cc.tn, cc.tn + cc.fp),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSummary {
    pub per_expert: BTreeMap<ExpertId, f64>,
    pub mean: f64,
    /// Sample standard deviation; `None` below two experts.
    pub std: Option<f64>,
}

pub fn summarize_across_experts(values: BTreeMap<ExpertId, f64>) -> Result<MetricSummary, StatsError> {
    let (mean, std) = mean_std(values.values().copied()).ok_or_else(|| StatsError::Empty("no expert values".into()))?;
    Ok(MetricSummary { per_expert: values, mean, std })
}

/// Mean and sample standard deviation (divisor n − 1).
pub fn mean_std(values: impl IntoIterator<Item = f64>) -> Option<(f64, Option<f64>)> {
    let v: Vec<f64> = values.into_iter().collect();
    if v.is_empty() {
        return None;
    }
    let n = v.len() as f64;
    if v.iter().all(|x| *x == v[0]) {
        return Some((v[0], (v.len() >= 2).then_some(0.0)));
    }
    let mean = v.iter().sum::<f64>() / n;
    let std = (v.len() >= 2).then(|| (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt());
    Some((mean, std))
}
