use std::fmt;

use serde::{Deserialize, Serialize};

use super::RunConfig;
use crate::augment::AugSummary;
use crate::data::DatasetStats;
use crate::trainer::CheckpointRef;

/// One resumable unit of work.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "stage", content = "iteration", rename_all = "snake_case")]
pub enum Stage {
    Filter,
    Sample,
    Evaluate(u32),
    Train(u32),
    Augment(u32),
    Merge(u32),
}

impl Stage {
    /// The stage after this one, or `None` after the final merge.
    pub fn next(self, iterations: u32) -> Option<Stage> {
        match self {
            Stage::Filter => Some(Stage::Sample),
            Stage::Sample => Some(Stage::Evaluate(1)),
            Stage::Evaluate(n) => Some(Stage::Train(n)),
            Stage::Train(n) => Some(Stage::Augment(n)),
            Stage::Augment(n) => Some(Stage::Merge(n)),
            Stage::Merge(n) if n < iterations => Some(Stage::Evaluate(n + 1)),
            Stage::Merge(_) => None,
        }
    }

    pub fn iteration(self) -> Option<u32> {
        match self {
            Stage::Filter | Stage::Sample => None,
            Stage::Evaluate(n) | Stage::Train(n) | Stage::Augment(n) | Stage::Merge(n) => Some(n),
        }
    }

    /// Every stage of a run with `iterations` iterations, in order.
    pub fn sequence(iterations: u32) -> Vec<Stage> {
        std::iter::successors(Some(Stage::Filter), |s| s.next(iterations)).collect()
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::Filter => write!(f, "filter"),
            Stage::Sample => write!(f, "sample"),
            Stage::Evaluate(n) => write!(f, "evaluate[{n}]"),
            Stage::Train(n) => write!(f, "train[{n}]"),
            Stage::Augment(n) => write!(f, "augment[{n}]"),
            Stage::Merge(n) => write!(f, "merge[{n}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    InProgress,
    Completed,
    Failed { stage: Stage, error: String },
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunStatus::InProgress => write!(f, "in progress"),
            RunStatus::Completed => write!(f, "completed"),
            RunStatus::Failed { stage, error } => write!(f, "failed at {stage}: {error}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterSummary {
    pub before: DatasetStats,
    pub after: DatasetStats,
    pub failed_requests: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestCounters {
    pub evaluate: usize,
    pub evaluate_failures: usize,
    pub generate: usize,
    pub generate_failures: usize,
}

/// What happened in one iteration. Paths are relative to the run directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub index: u32,
    pub dataset_file: String,
    pub dataset_size: usize,
    /// Checkpoint that was evaluated (student of the previous iteration).
    pub evaluated_checkpoint: String,
    pub stats: Option<DatasetStats>,
    pub correct: Option<usize>,
    pub wrong: Option<usize>,
    pub train_size: Option<usize>,
    pub training_skipped: bool,
    pub checkpoint: Option<String>,
    pub seeds: Option<usize>,
    pub augmented_size: Option<usize>,
    pub augmentation: Option<AugSummary>,
    pub next_dataset_file: Option<String>,
    pub next_dataset_size: Option<usize>,
    pub requests: RequestCounters,
}

/// Everything needed to continue a run, rewritten after each stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunState {
    pub config: RunConfig,
    pub status: RunStatus,
    /// Stage to execute next; `None` once the run is over.
    pub next_stage: Option<Stage>,
    pub filter: Option<FilterSummary>,
    pub initial_size: usize,
    pub d0_size: Option<usize>,
    pub records: Vec<IterationRecord>,
    /// Lineage from the base student; the last entry is the current student.
    pub checkpoints: Vec<CheckpointRef>,
    pub final_checkpoint: Option<String>,
    pub stopped_early: bool,
}

impl RunState {
    pub fn new(config: RunConfig, initial_size: usize) -> Self {
        let base = CheckpointRef::base(&config.student_base);
        RunState {
            config,
            status: RunStatus::InProgress,
            next_stage: Some(Stage::Filter),
            filter: None,
            initial_size,
            d0_size: None,
            records: Vec::new(),
            checkpoints: vec![base],
            final_checkpoint: None,
            stopped_early: false,
        }
    }

    pub fn current_checkpoint(&self) -> &CheckpointRef {
        self.checkpoints.last().expect("lineage always holds the base")
    }

    pub fn base_checkpoint(&self) -> &CheckpointRef {
        &self.checkpoints[0]
    }

    pub fn checkpoint(&self, id: &str) -> Option<&CheckpointRef> {
        self.checkpoints.iter().find(|c| c.id == id)
    }

    pub fn record_mut(&mut self, n: u32) -> &mut IterationRecord {
        let idx = (n - 1) as usize;
        if self.records.len() <= idx {
            self.records.resize_with(idx + 1, IterationRecord::default);
        }
        &mut self.records[idx]
    }

    pub fn is_complete(&self) -> bool {
        self.status == RunStatus::Completed
    }
}
