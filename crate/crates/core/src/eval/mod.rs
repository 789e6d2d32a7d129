//! Zero-shot evaluation: ask the model the QA question for every instance,
//! parse Yes/No, score, and split the dataset into correct and wrong.

mod metrics;
mod parse;

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{read_jsonl, render_qa, write_jsonl, DataError, Dataset, Label};
use crate::inference::{complete_many, ChatModel, Request, RequestContext};

pub use metrics::{compute_metrics, ConfusionMatrix, Metrics};
pub use parse::{parse_answer, ParsedAnswer};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("cannot evaluate an empty dataset")]
    EmptyDataset,
    #[error("confusion matrix is empty")]
    EmptyConfusion,
    #[error("endpoint unavailable: all {requests} requests failed (first error: {first_error})")]
    EndpointUnavailable { requests: usize, first_error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub instance_id: String,
    pub gold: Label,
    pub raw_text: String,
    pub parsed: ParsedAnswer,
    pub predicted_label: Option<Label>,
    pub correct: bool,
    /// Request failure after retries, if any. Such records count as wrong.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub records: Vec<PredictionRecord>,
    pub confusion: ConfusionMatrix,
    #[serde(flatten)]
    pub metrics: Metrics,
}

impl EvalReport {
    /// Instance id → predicted correctly.
    pub fn correctness(&self) -> HashMap<String, bool> {
        self.records
            .iter()
            .map(|r| (r.instance_id.clone(), r.correct))
            .collect()
    }

    pub fn failed_requests(&self) -> usize {
        self.records.iter().filter(|r| r.error.is_some()).count()
    }
}

#[derive(Serialize)]
struct ReportSummary<'a> {
    summary: bool,
    confusion: &'a ConfusionMatrix,
    #[serde(flatten)]
    metrics: &'a Metrics,
}

impl EvalReport {
    /// Writes one prediction record per line followed by a summary line
    /// carrying the confusion matrix and metrics.
    pub fn write_jsonl(&self, path: &Path) -> Result<(), DataError> {
        let mut lines = self
            .records
            .iter()
            .map(serde_json::to_value)
            .collect::<Result<Vec<_>, _>>()?;
        lines.push(serde_json::to_value(ReportSummary {
            summary: true,
            confusion: &self.confusion,
            metrics: &self.metrics,
        })?);
        write_jsonl(path, &lines)?;
        Ok(())
    }
}

/// Reads the instance id → correct map back from a report file, skipping the
/// summary line.
pub fn read_correctness(path: &Path) -> Result<HashMap<String, bool>, DataError> {
    let lines: Vec<serde_json::Value> = read_jsonl(path)?;
    Ok(lines
        .into_iter()
        .filter_map(|v| {
            let id = v.get("instance_id")?.as_str()?.to_string();
            let correct = v.get("correct")?.as_bool()?;
            Some((id, correct))
        })
        .collect())
}

/// Partition of an evaluated dataset by prediction correctness.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub correct: Dataset,
    pub wrong: Dataset,
}

/// Builds a report from gold labels and raw model outputs (or request errors).
pub fn score(
    dataset: &Dataset,
    outputs: Vec<Result<String, String>>,
) -> Result<(EvalReport, Split), EvalError> {
    let mut confusion = ConfusionMatrix::default();
    let mut records = Vec::with_capacity(dataset.len());
    let mut correct = Dataset::new(format!("{}.correct", dataset.name));
    let mut wrong = Dataset::new(format!("{}.wrong", dataset.name));
    for (inst, output) in dataset.iter().zip(outputs) {
        let (raw_text, error) = match output {
            Ok(text) => (text, None),
            Err(e) => (String::new(), Some(e)),
        };
        let parsed = if error.is_some() {
            ParsedAnswer::Unparseable { raw: String::new() }
        } else {
            parse_answer(&raw_text)
        };
        let predicted_label = parsed.label();
        confusion.record(inst.label, predicted_label);
        let is_correct = predicted_label == Some(inst.label);
        if is_correct {
            correct.push(inst.clone());
        } else {
            wrong.push(inst.clone());
        }
        records.push(PredictionRecord {
            instance_id: inst.id.clone(),
            gold: inst.label,
            raw_text,
            parsed,
            predicted_label,
            correct: is_correct,
            error,
        });
    }
    let metrics = compute_metrics(&confusion)?;
    Ok((
        EvalReport {
            records,
            confusion,
            metrics,
        },
        Split { correct, wrong },
    ))
}

/// Evaluates `model` on every instance of `dataset`.
///
/// Unparseable answers and per-item request failures count as wrong. Fails
/// only when no request succeeds at all.
pub fn evaluate_split(model: &dyn ChatModel, dataset: &Dataset) -> Result<(EvalReport, Split), EvalError> {
    if dataset.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let requests: Vec<Request> = dataset
        .iter()
        .map(|inst| {
            Request::with_context(
                render_qa(inst).instruction,
                RequestContext::Evaluate { instance: inst.clone() },
            )
        })
        .collect();
    let results = complete_many(model, &requests);
    let failures = results.iter().filter(|r| r.is_err()).count();
    if failures == results.len() {
        let first_error = results
            .iter()
            .find_map(|r| r.as_ref().err())
            .map(ToString::to_string)
            .unwrap_or_default();
        return Err(EvalError::EndpointUnavailable {
            requests: results.len(),
            first_error,
        });
    }
    if failures > 0 {
        tracing::warn!(failures, total = results.len(), model = %model.describe(), "requests failed; counted as wrong");
    }
    let outputs = results
        .into_iter()
        .map(|r| r.map(|c| c.text).map_err(|e| e.to_string()))
        .collect();
    score(dataset, outputs)
}
