use super::FilterSummary;
use crate::data::{compute_stats, Dataset};
use crate::eval::{evaluate_split, EvalError, EvalReport};
use crate::inference::ChatModel;

#[derive(Debug, Clone)]
pub struct FilterOutcome {
    /// Instances the teacher labels correctly, in input order.
    pub dataset: Dataset,
    pub report: EvalReport,
    pub summary: FilterSummary,
}

/// Keeps only the instances whose gold label the teacher reproduces.
pub fn teacher_filter(teacher: &dyn ChatModel, raw: &Dataset) -> Result<FilterOutcome, EvalError> {
    let (report, split) = evaluate_split(teacher, raw)?;
    let correctness = report.correctness();
    let before = compute_stats(raw, Some(&correctness)).expect("report covers every instance");
    let after = compute_stats(&split.correct, None).expect("no correctness map given");
    tracing::info!(
        before = before.n_instances,
        after = after.n_instances,
        "teacher filter kept {} of {} instances",
        after.n_instances,
        before.n_instances
    );
    Ok(FilterOutcome {
        dataset: split.correct.renamed(format!("{}.filtered", raw.name)),
        summary: FilterSummary {
            before,
            after,
            failed_requests: report.failed_requests(),
        },
        report,
    })
}
