//! The curriculum loop: filter, sample, then per iteration evaluate, train,
//! augment and merge, persisting every stage to a run directory so an
//! interrupted run can pick up where it stopped.

mod config;
mod filter;
mod report;
mod run;
mod state;
mod store;

use std::path::PathBuf;
use std::sync::Arc;

pub use config::{apply_override, Ablation, AugmentSeed, FinetuneMode, NextData, RunConfig, SampleSizes, Seeds, TrainOn};
pub use filter::{teacher_filter, FilterOutcome};
pub use report::{report_run, Aggregate, RunReport, StatsRow, TestSetResult, TrialResult};
pub use run::{resume, run_cda, run_cda_with, RunOptions};
pub use state::{FilterSummary, IterationRecord, RequestCounters, RunState, RunStatus, Stage};
pub use store::RunDir;

use crate::data::DataError;
use crate::inference::ModelFactory;
use crate::trainer::TrainerHook;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("run directory {0} already holds a different run")]
    RunDirInUse(PathBuf),
    #[error("{0} is not a run directory (no state.json)")]
    NotARunDir(PathBuf),
    #[error("stage {stage} failed: {message}")]
    Stage { stage: Stage, message: String },
    #[error("run is not complete (status: {0})")]
    IncompleteRun(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    pub fn is_stage_failure(&self) -> bool {
        matches!(self, PipelineError::Stage { .. })
    }
}

/// The external services a run talks to: models (teacher, students) and the
/// trainer.
#[derive(Clone)]
pub struct Backends {
    pub models: Arc<dyn ModelFactory>,
    pub trainer: Arc<dyn TrainerHook>,
}

impl Backends {
    pub fn new(models: Arc<dyn ModelFactory>, trainer: Arc<dyn TrainerHook>) -> Self {
        Backends { models, trainer }
    }
}
