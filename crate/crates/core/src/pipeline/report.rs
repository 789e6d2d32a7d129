use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FilterSummary, PipelineError, RequestCounters, RunDir};
use crate::data::{compute_stats, sample_balanced, Dataset, Percent};
use crate::eval::evaluate_split;
use crate::inference::ModelFactory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: u32,
    pub seed: u64,
    pub n_instances: usize,
    pub accuracy: f64,
    pub f1: f64,
    pub failed_requests: usize,
}

/// Mean and sample standard deviation (n - 1 denominator; 0 for one trial).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Aggregate {
        let n = values.len();
        if n == 0 {
            return Aggregate { mean: 0.0, std: 0.0 };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Aggregate { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSetResult {
    pub name: String,
    pub trials: Vec<TrialResult>,
    pub accuracy: Aggregate,
    pub f1: Aggregate,
}

/// One row of the per-iteration dataset table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsRow {
    pub iteration: u32,
    pub n_instances: usize,
    pub pct_metaphor: Percent,
    pub pct_correct: Option<Percent>,
    pub pct_correct_metaphor: Option<Percent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub final_checkpoint: String,
    pub iterations_completed: usize,
    pub stopped_early: bool,
    pub filter: Option<FilterSummary>,
    pub stats: Vec<StatsRow>,
    /// Metaphor share of D^0, D^1, ..., in order.
    pub metaphor_drift: Vec<Percent>,
    pub requests: RequestCounters,
    pub test_sets: Vec<TestSetResult>,
}

/// Evaluates the final student of a completed run on each test set, `trials`
/// times with a fresh balanced sample per trial, and writes `report.json` and
/// `report.md` into the run directory.
pub fn report_run(
    run_dir: &Path,
    test_sets: &[Dataset],
    trials: u32,
    models: &dyn ModelFactory,
) -> Result<RunReport, PipelineError> {
    let dir = RunDir::new(run_dir);
    let state = dir.load_state()?;
    if !state.is_complete() {
        return Err(PipelineError::IncompleteRun(state.status.to_string()));
    }
    let config = &state.config;
    let final_ref = state.current_checkpoint().clone();

    let mut stats = Vec::new();
    let mut drift = Vec::new();
    let mut requests = RequestCounters::default();
    for record in &state.records {
        if let Some(s) = record.stats {
            stats.push(StatsRow {
                iteration: record.index,
                n_instances: s.n_instances,
                pct_metaphor: s.pct_metaphor,
                pct_correct: s.pct_correct,
                pct_correct_metaphor: s.pct_correct_metaphor,
            });
            drift.push(s.pct_metaphor);
        }
        requests.evaluate += record.requests.evaluate;
        requests.evaluate_failures += record.requests.evaluate_failures;
        requests.generate += record.requests.generate;
        requests.generate_failures += record.requests.generate_failures;
    }
    if let Some(last) = state.records.last().and_then(|r| r.next_dataset_file.as_ref()) {
        let data = dir.read_dataset(last, "final")?;
        drift.push(compute_stats(&data, None)?.pct_metaphor);
    }

    let mut results = Vec::new();
    if !test_sets.is_empty() {
        let student = models
            .connect(&final_ref.serving)
            .map_err(|e| PipelineError::Config(format!("cannot reach final student: {e}")))?;
        for test in test_sets {
            let mut per_trial = Vec::new();
            for t in 0..trials {
                let seed = config.seeds.test + t as u64;
                let sample = if config.sample.test_per_class == 0 {
                    test.clone()
                } else {
                    sample_balanced(test, config.sample.test_per_class, seed)?
                };
                let (report, _) = evaluate_split(&*student, &sample)
                    .map_err(|e| PipelineError::Config(format!("evaluating {}: {e}", test.name)))?;
                per_trial.push(TrialResult {
                    trial: t,
                    seed,
                    n_instances: sample.len(),
                    accuracy: report.metrics.accuracy,
                    f1: report.metrics.f1,
                    failed_requests: report.failed_requests(),
                });
            }
            let acc: Vec<f64> = per_trial.iter().map(|r| r.accuracy).collect();
            let f1: Vec<f64> = per_trial.iter().map(|r| r.f1).collect();
            results.push(TestSetResult {
                name: test.name.clone(),
                accuracy: Aggregate::of(&acc),
                f1: Aggregate::of(&f1),
                trials: per_trial,
            });
        }
    }

    let report = RunReport {
        final_checkpoint: final_ref.id,
        iterations_completed: state.records.iter().filter(|r| r.next_dataset_file.is_some()).count(),
        stopped_early: state.stopped_early,
        filter: state.filter,
        stats,
        metaphor_drift: drift,
        requests,
        test_sets: results,
    };
    dir.write_json("report.json", &report)?;
    crate::fsutil::write_atomic(&dir.path("report.md"), report.render_markdown().as_bytes())?;
    Ok(report)
}

fn opt(p: Option<Percent>) -> String {
    p.map(|p| p.to_string()).unwrap_or_else(|| "-".into())
}

fn pct(x: f64) -> String {
    format!("{:.2}", x * 100.0)
}

impl RunReport {
    pub fn render_stats_table(&self) -> String {
        let mut out = String::from("| Iteration | #Instance | %M | %Correct | %Correct.M |\n|---|---|---|---|---|\n");
        for row in &self.stats {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} |",
                row.iteration,
                row.n_instances,
                row.pct_metaphor,
                opt(row.pct_correct),
                opt(row.pct_correct_metaphor)
            );
        }
        out
    }

    pub fn render_markdown(&self) -> String {
        let mut out = String::from("# Run report\n\n");
        let _ = writeln!(out, "Final checkpoint: `{}`\n", self.final_checkpoint);
        let _ = writeln!(
            out,
            "Iterations completed: {}{}\n",
            self.iterations_completed,
            if self.stopped_early { " (stopped early: no wrong predictions)" } else { "" }
        );
        if let Some(f) = &self.filter {
            let _ = writeln!(
                out,
                "Teacher filter: {} -> {} instances (teacher accuracy {}%)\n",
                f.before.n_instances,
                f.after.n_instances,
                opt(f.before.pct_correct)
            );
        }
        out.push_str("## Training data per iteration\n\n");
        out.push_str(&self.render_stats_table());
        let drift: Vec<String> = self.metaphor_drift.iter().map(|p| p.to_string()).collect();
        let _ = writeln!(out, "\n%M drift: {}\n", drift.join(" -> "));
        let _ = writeln!(
            out,
            "Requests: {} evaluation ({} failed), {} generation ({} failed)\n",
            self.requests.evaluate,
            self.requests.evaluate_failures,
            self.requests.generate,
            self.requests.generate_failures
        );
        if !self.test_sets.is_empty() {
            out.push_str("## Test results\n\n");
            let trials = self.test_sets[0].trials.len();
            let _ = writeln!(
                out,
                "Each test set is sampled {trials} times with seeds derived from the master seed; the same final student answers every trial.\n"
            );
            out.push_str("| Test set | Acc | F1 |\n|---|---|---|\n");
            for t in &self.test_sets {
                let _ = writeln!(
                    out,
                    "| {} | {} ± {} | {} ± {} |",
                    t.name,
                    pct(t.accuracy.mean),
                    pct(t.accuracy.std),
                    pct(t.f1.mean),
                    pct(t.f1.std)
                );
            }
        }
        out
    }
}
