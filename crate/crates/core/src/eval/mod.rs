//! Attitude evaluation: prompt every bias with demographic probes, label the
//! completions, and aggregate label proportions per (bias, subgroup).
//!
//! Gender and race subgroups are scored with a *regard* classifier, which
//! judges the attitude towards the mentioned group; ideologies, religions and
//! professions are scored with plain sentiment.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{GenerationParams, Generator};
use crate::prompt::RenderedPrompt;
use crate::registry::Bias;

pub mod bold;
pub mod classifier;
pub mod report;

pub use classifier::{lexicon_classify, Classifier, ClassifierError, Lexicon, LexiconClassifier, Polarity, RemoteClassifier};
pub use report::{render_report, ReportFormat};

/// Share of skipped samples above which a run is flagged as degraded.
pub const DEGRADED_SKIP_RATIO: f64 = 0.10;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty prompt set")]
    EmptyPrompts,
    #[error("no biases selected")]
    NoBiases,
    #[error("incomplete grid, missing cells: {}", .0.join(", "))]
    IncompleteGrid(Vec<String>),
    #[error("subgroup {0:?} appears under both metrics")]
    MixedMetrics(String),
    #[error("cannot import prompts: {0}")]
    Import(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Gender,
    Race,
    ReligiousIdeologies,
    PoliticalIdeologies,
    Professions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Regard,
    Sentiment,
}

impl Metric {
    /// Labels a classifier for this metric may emit, in report order.
    pub fn labels(self) -> &'static [Label] {
        match self {
            Metric::Regard => &[Label::Positive, Label::Neutral, Label::Negative, Label::Other],
            Metric::Sentiment => &[Label::Positive, Label::Neutral, Label::Negative],
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Regard => "regard",
            Metric::Sentiment => "sentiment",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Positive,
    Neutral,
    Negative,
    Other,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Positive => "positive",
            Label::Neutral => "neutral",
            Label::Negative => "negative",
            Label::Other => "other",
        })
    }
}

pub fn decide_metric(domain: Domain) -> Metric {
    match domain {
        Domain::Gender | Domain::Race => Metric::Regard,
        Domain::ReligiousIdeologies | Domain::PoliticalIdeologies | Domain::Professions => Metric::Sentiment,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalPrompt {
    pub domain: Domain,
    pub subgroup: String,
    pub prompt_text: String,
}

/// Share of a (bias, subgroup) group's completions carrying one label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCell {
    pub bias: Bias,
    pub subgroup: String,
    pub metric: Metric,
    pub label: Label,
    pub proportion: f64,
    pub n: u64,
}

/// One audited sample: what was asked, what came back, how it was labelled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub bias: Bias,
    pub domain: Domain,
    pub subgroup: String,
    pub prompt_text: String,
    pub completion: Option<String>,
    pub label: Option<Label>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRun {
    pub cells: Vec<EvalCell>,
    pub total: u64,
    pub skipped: u64,
    pub degraded: bool,
    #[serde(skip)]
    pub log: Vec<SampleRecord>,
}

#[derive(Clone)]
pub struct Classifiers {
    pub regard: Arc<dyn Classifier>,
    pub sentiment: Arc<dyn Classifier>,
}

impl Classifiers {
    /// The same classifier for both metrics.
    pub fn shared(classifier: Arc<dyn Classifier>) -> Self {
        Classifiers {
            regard: classifier.clone(),
            sentiment: classifier,
        }
    }

    fn for_metric(&self, metric: Metric) -> &dyn Classifier {
        match metric {
            Metric::Regard => self.regard.as_ref(),
            Metric::Sentiment => self.sentiment.as_ref(),
        }
    }
}

async fn run_sample(
    bias: Bias,
    prompt: &EvalPrompt,
    backend: &dyn Generator,
    classifiers: &Classifiers,
    params: &GenerationParams,
) -> SampleRecord {
    let mut record = SampleRecord {
        bias,
        domain: prompt.domain,
        subgroup: prompt.subgroup.clone(),
        prompt_text: prompt.prompt_text.clone(),
        completion: None,
        label: None,
        error: None,
    };
    let rendered = match RenderedPrompt::for_bias(bias, prompt.prompt_text.trim()) {
        Ok(r) => r,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    let completion = match backend.generate(&rendered, params).await {
        Ok(c) => c.text,
        Err(e) => {
            record.error = Some(format!("generation: {e}"));
            return record;
        }
    };
    let metric = decide_metric(prompt.domain);
    match classifiers.for_metric(metric).classify(&completion).await {
        Ok(label) if metric.labels().contains(&label) => record.label = Some(label),
        Ok(label) => record.error = Some(format!("{metric} classifier emitted {label}")),
        Err(e) => record.error = Some(format!("classification: {e}")),
    }
    record.completion = Some(completion);
    record
}

/// Runs every prompt through every bias, then folds the labelled samples
/// into cells. Samples that fail are kept in the log with their error and
/// counted as skipped.
pub async fn run_eval(
    biases: &[Bias],
    prompts: &[EvalPrompt],
    backend: &dyn Generator,
    classifiers: &Classifiers,
    params: &GenerationParams,
    parallelism: usize,
) -> Result<EvalRun, EvalError> {
    if prompts.is_empty() {
        return Err(EvalError::EmptyPrompts);
    }
    if biases.is_empty() {
        return Err(EvalError::NoBiases);
    }
    let jobs = biases.iter().flat_map(|&b| prompts.iter().map(move |p| (b, p)));
    let log: Vec<SampleRecord> = stream::iter(jobs)
        .map(|(bias, prompt)| run_sample(bias, prompt, backend, classifiers, params))
        .buffered(parallelism.max(1))
        .collect()
        .await;

    let total = log.len() as u64;
    let skipped = log.iter().filter(|r| r.label.is_none()).count() as u64;
    Ok(EvalRun {
        cells: aggregate(&log),
        total,
        skipped,
        degraded: skipped as f64 > DEGRADED_SKIP_RATIO * total as f64,
        log,
    })
}

/// Folds labelled samples into cells, one per label the group's metric
/// allows. Groups appear in first-seen order; unlabelled samples are ignored.
pub fn aggregate(log: &[SampleRecord]) -> Vec<EvalCell> {
    let mut order: Vec<(Bias, String, Metric)> = Vec::new();
    let mut counts: HashMap<(Bias, String, Metric), HashMap<Label, u64>> = HashMap::new();
    for record in log {
        let Some(label) = record.label else { continue };
        let key = (record.bias, record.subgroup.clone(), decide_metric(record.domain));
        let group = counts.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            HashMap::new()
        });
        *group.entry(label).or_default() += 1;
    }

    let mut cells = Vec::new();
    for key in order {
        let group = &counts[&key];
        let n: u64 = group.values().sum();
        let (bias, subgroup, metric) = key;
        for &label in metric.labels() {
            let count = group.get(&label).copied().unwrap_or(0);
            cells.push(EvalCell {
                bias,
                subgroup: subgroup.clone(),
                metric,
                label,
                proportion: count as f64 / n as f64,
                n,
            });
        }
    }
    cells
}
