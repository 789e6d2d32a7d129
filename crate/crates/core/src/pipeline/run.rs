use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::{
    teacher_filter, AugmentSeed, Backends, FinetuneMode, NextData, PipelineError, RunConfig, RunDir, RunState,
    RunStatus, Stage, TrainOn,
};
use crate::augment::augment_round;
use crate::data::{compute_stats, merge_dedup, sample_balanced, Dataset, DedupKey};
use crate::eval::{evaluate_split, EvalReport};
use crate::trainer::{export_training_file, train, CheckpointRef, MANIFEST_FILE};

type StageResult<T> = Result<T, Box<dyn std::error::Error + Send + Sync>>;

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Return (with the run still in progress) after this many stages have
    /// been executed by this call.
    pub halt_after_stages: Option<usize>,
}

/// Starts a run in `run_dir`, or continues it if the directory already holds
/// a run with the same configuration.
pub fn run_cda(
    config: &RunConfig,
    initial: &Dataset,
    run_dir: &Path,
    backends: &Backends,
) -> Result<RunState, PipelineError> {
    run_cda_with(config, initial, run_dir, backends, RunOptions::default())
}

pub fn run_cda_with(
    config: &RunConfig,
    initial: &Dataset,
    run_dir: &Path,
    backends: &Backends,
    options: RunOptions,
) -> Result<RunState, PipelineError> {
    config.validate()?;
    let dir = RunDir::new(run_dir);
    if dir.has_state() {
        let state = dir.load_state()?;
        if &state.config != config {
            return Err(PipelineError::RunDirInUse(run_dir.to_path_buf()));
        }
        return continue_run(&dir, state, backends, options);
    }
    if !dir.is_fresh()? {
        return Err(PipelineError::RunDirInUse(run_dir.to_path_buf()));
    }
    std::fs::create_dir_all(run_dir)?;
    dir.write_dataset("initial.jsonl", initial)?;
    dir.write_json("run.json", config)?;
    let state = RunState::new(config.clone(), initial.len());
    dir.save_state(&state)?;
    drive(&dir, state, backends, options)
}

/// Continues an interrupted or failed run from its first unfinished stage.
pub fn resume(run_dir: &Path, backends: &Backends, options: RunOptions) -> Result<RunState, PipelineError> {
    let dir = RunDir::new(run_dir);
    let state = dir.load_state()?;
    continue_run(&dir, state, backends, options)
}

fn continue_run(
    dir: &RunDir,
    mut state: RunState,
    backends: &Backends,
    options: RunOptions,
) -> Result<RunState, PipelineError> {
    if let RunStatus::Failed { stage, .. } = &state.status {
        tracing::info!(%stage, "retrying failed stage");
        state.next_stage = Some(*stage);
        state.status = RunStatus::InProgress;
    }
    drive(dir, state, backends, options)
}

fn drive(
    dir: &RunDir,
    mut state: RunState,
    backends: &Backends,
    options: RunOptions,
) -> Result<RunState, PipelineError> {
    let mut executed = 0;
    while let Some(stage) = state.next_stage {
        if options.halt_after_stages.is_some_and(|limit| executed >= limit) {
            return Ok(state);
        }
        let started = Instant::now();
        let mut working = state.clone();
        let span = tracing::info_span!("stage", %stage);
        let outcome = span.in_scope(|| execute(dir, &mut working, stage, backends));
        match outcome {
            Ok(next) => {
                state = working;
                state.next_stage = next;
                if next.is_none() {
                    state.status = RunStatus::Completed;
                    state.final_checkpoint = Some(state.current_checkpoint().id.clone());
                }
                dir.save_state(&state)?;
                dir.record_timing(&stage.to_string(), started.elapsed().as_millis());
            }
            Err(e) => {
                let message = e.to_string();
                tracing::error!(%stage, error = %message, "stage failed");
                state.status = RunStatus::Failed {
                    stage,
                    error: message.clone(),
                };
                dir.save_state(&state)?;
                return Err(PipelineError::Stage { stage, message });
            }
        }
        executed += 1;
    }
    Ok(state)
}

fn execute(dir: &RunDir, state: &mut RunState, stage: Stage, backends: &Backends) -> StageResult<Option<Stage>> {
    let iterations = state.config.iterations;
    match stage {
        Stage::Filter => filter_stage(dir, state, backends)?,
        Stage::Sample => sample_stage(dir, state)?,
        Stage::Evaluate(n) => {
            if !evaluate_stage(dir, state, n, backends)? {
                state.stopped_early = true;
                tracing::info!(iteration = n, "no wrong predictions left; stopping");
                return Ok(None);
            }
        }
        Stage::Train(n) => train_stage(dir, state, n, backends)?,
        Stage::Augment(n) => augment_stage(dir, state, n, backends)?,
        Stage::Merge(n) => merge_stage(dir, state, n)?,
    }
    Ok(stage.next(iterations))
}

fn filter_stage(dir: &RunDir, state: &mut RunState, backends: &Backends) -> StageResult<()> {
    let initial = dir.read_dataset("initial.jsonl", "initial")?;
    let filtered = if state.config.filter_initial {
        let teacher = backends.models.connect(&state.config.teacher)?;
        let outcome = teacher_filter(&*teacher, &initial)?;
        write_report(dir, "filter_report.jsonl", &outcome.report)?;
        state.filter = Some(outcome.summary);
        outcome.dataset
    } else {
        initial
    };
    dir.write_dataset("filtered.jsonl", &filtered)?;
    Ok(())
}

fn sample_stage(dir: &RunDir, state: &mut RunState) -> StageResult<()> {
    let filtered = dir.read_dataset("filtered.jsonl", "filtered")?;
    let d0 = sample_balanced(&filtered, state.config.sample.train_per_class, state.config.seeds.sampling)?;
    dir.write_dataset("d0.jsonl", &d0)?;
    state.d0_size = Some(d0.len());
    Ok(())
}

fn input_rel(n: u32) -> String {
    if n == 1 {
        "d0.jsonl".into()
    } else {
        RunDir::iter_rel(n - 1, "next.jsonl")
    }
}

fn write_report(dir: &RunDir, rel: &str, report: &EvalReport) -> StageResult<()> {
    report.write_jsonl(&dir.path(rel))?;
    Ok(())
}

/// Returns false when the stop guard fires.
fn evaluate_stage(dir: &RunDir, state: &mut RunState, n: u32, backends: &Backends) -> StageResult<bool> {
    let data = dir.read_dataset(&input_rel(n), &format!("d{}", n - 1))?;
    let dataset_rel = RunDir::iter_rel(n, "dataset.jsonl");
    dir.write_dataset(&dataset_rel, &data)?;
    let student_ref = state.current_checkpoint().clone();
    let student = backends.models.connect(&student_ref.serving)?;
    let (report, split) = evaluate_split(&*student, &data)?;
    write_report(dir, &RunDir::iter_rel(n, "report.jsonl"), &report)?;
    dir.write_dataset(&RunDir::iter_rel(n, "correct.jsonl"), &split.correct)?;
    dir.write_dataset(&RunDir::iter_rel(n, "wrong.jsonl"), &split.wrong)?;
    let stats = compute_stats(&data, Some(&report.correctness()))?;
    dir.write_json(&RunDir::iter_rel(n, "stats.json"), &stats)?;
    tracing::info!(
        iteration = n,
        instances = data.len(),
        correct = split.correct.len(),
        wrong = split.wrong.len(),
        "evaluated student {}",
        student_ref.id
    );

    let stop = state.config.stop_when_no_wrong && split.wrong.is_empty();
    let record = state.record_mut(n);
    *record = super::IterationRecord {
        index: n,
        dataset_file: dataset_rel,
        dataset_size: data.len(),
        evaluated_checkpoint: student_ref.id,
        stats: Some(stats),
        correct: Some(split.correct.len()),
        wrong: Some(split.wrong.len()),
        ..Default::default()
    };
    record.requests.evaluate = data.len();
    record.requests.evaluate_failures = report.failed_requests();
    Ok(!stop)
}

fn train_stage(dir: &RunDir, state: &mut RunState, n: u32, backends: &Backends) -> StageResult<()> {
    let source = match state.config.train_on {
        TrainOn::Correct => "correct.jsonl",
        TrainOn::All => "dataset.jsonl",
    };
    let train_set = dir.read_dataset(&RunDir::iter_rel(n, source), &format!("train_{n}"))?;
    if train_set.is_empty() {
        tracing::warn!(iteration = n, "training set is empty; keeping the current checkpoint");
        let current = state.current_checkpoint().id.clone();
        let record = state.record_mut(n);
        record.train_size = Some(0);
        record.training_skipped = true;
        record.checkpoint = Some(current);
        return Ok(());
    }
    let train_file = dir.path(&RunDir::iter_rel(n, "train.jsonl"));
    export_training_file(&train_set, &train_file)?;

    let base = match state.config.finetune_mode {
        FinetuneMode::Continuous => state.current_checkpoint().clone(),
        FinetuneMode::FromScratch => state.base_checkpoint().clone(),
    };
    let base = resolve_location(dir, base);
    let (out_dir, in_run_dir) = match &state.config.trainer.work_dir {
        Some(work) => (work.join(format!("iter_{n}")), false),
        None => (dir.path(&RunDir::checkpoint_rel(n)), true),
    };
    // a manifest left by an interrupted attempt must not be mistaken for this one's
    let stale = out_dir.join(MANIFEST_FILE);
    if stale.exists() {
        std::fs::remove_file(&stale)?;
    }
    let mut ckpt = train(&*backends.trainer, &state.config.trainer, &base, &train_file, &out_dir, n)?;
    if state.checkpoint(&ckpt.id).is_some() {
        return Err(format!("trainer returned checkpoint id {:?} which is already in the lineage", ckpt.id).into());
    }
    if in_run_dir {
        ckpt.location = RunDir::checkpoint_rel(n);
    }
    tracing::info!(iteration = n, checkpoint = %ckpt.id, parent = ?ckpt.parent, "training finished");
    let record = state.record_mut(n);
    record.train_size = Some(train_set.len());
    record.checkpoint = Some(ckpt.id.clone());
    state.checkpoints.push(ckpt);
    Ok(())
}

/// Trained checkpoints inside the run directory store relative locations;
/// hooks need a path they can open.
fn resolve_location(dir: &RunDir, mut ckpt: CheckpointRef) -> CheckpointRef {
    if !ckpt.is_base() && PathBuf::from(&ckpt.location).is_relative() {
        ckpt.location = dir.path(&ckpt.location).display().to_string();
    }
    ckpt
}

fn augment_stage(dir: &RunDir, state: &mut RunState, n: u32, backends: &Backends) -> StageResult<()> {
    let source = match state.config.augment_seed {
        AugmentSeed::Wrong => "wrong.jsonl",
        AugmentSeed::All => "dataset.jsonl",
    };
    let seeds = dir.read_dataset(&RunDir::iter_rel(n, source), &format!("seeds_{n}"))?;
    let history = history_keys(dir, n)?;
    let teacher = backends.models.connect(&state.config.teacher)?;
    let (aug, log) = augment_round(
        &*teacher,
        &seeds,
        &state.config.methods,
        n,
        &history,
        state.config.retries_per_generation,
    )?;
    dir.write_dataset(&RunDir::iter_rel(n, "augmented.jsonl"), &aug)?;
    dir.write_jsonl(&RunDir::iter_rel(n, "aug_log.jsonl"), &log.entries)?;
    tracing::info!(
        iteration = n,
        seeds = seeds.len(),
        accepted = log.summary.accepted,
        requests = log.summary.requests,
        "augmentation round finished"
    );
    let record = state.record_mut(n);
    record.seeds = Some(seeds.len());
    record.augmented_size = Some(aug.len());
    record.requests.generate = log.summary.requests;
    record.requests.generate_failures = log
        .entries
        .iter()
        .filter(|e| matches!(e.outcome, crate::augment::EntryOutcome::RequestFailed { .. }))
        .count();
    record.augmentation = Some(log.summary);
    Ok(())
}

/// Keys of everything the run has seen so far: the initial sample, every
/// earlier augmentation, and the current iteration's data.
fn history_keys(dir: &RunDir, n: u32) -> StageResult<HashSet<DedupKey>> {
    let mut keys = HashSet::new();
    let mut add = |rel: String| -> StageResult<()> {
        let data = dir.read_dataset(&rel, "history")?;
        keys.extend(data.iter().map(|i| i.dedup_key()));
        Ok(())
    };
    add("d0.jsonl".into())?;
    for k in 1..n {
        add(RunDir::iter_rel(k, "augmented.jsonl"))?;
    }
    add(RunDir::iter_rel(n, "dataset.jsonl"))?;
    Ok(keys)
}

fn merge_stage(dir: &RunDir, state: &mut RunState, n: u32) -> StageResult<()> {
    let data = dir.read_dataset(&RunDir::iter_rel(n, "dataset.jsonl"), &format!("d{}", n - 1))?;
    let aug = dir.read_dataset(&RunDir::iter_rel(n, "augmented.jsonl"), &format!("aug_{n}"))?;
    let next = match state.config.next_data {
        NextData::Merged => merge_dedup(&data, &aug),
        NextData::AugmentedOnly => aug,
    }
    .renamed(format!("d{n}"));
    let rel = RunDir::iter_rel(n, "next.jsonl");
    dir.write_dataset(&rel, &next)?;
    let record = state.record_mut(n);
    record.next_dataset_file = Some(rel);
    record.next_dataset_size = Some(next.len());
    Ok(())
}
