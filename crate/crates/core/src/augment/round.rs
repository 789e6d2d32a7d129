use std::collections::{BTreeMap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{parse_generation, render_aug_prompt, AugError, AugMethod, GenerationOutcome, RejectReason};
use crate::data::{Dataset, DedupKey, Instance};
use crate::inference::{ChatModel, Request, RequestContext};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum EntryOutcome {
    Accepted { instance_id: String },
    Rejected { reason: RejectReason, raw: String },
    RequestFailed { error: String },
}

/// One teacher call for one (seed, method) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugLogEntry {
    pub seed_id: String,
    pub method: AugMethod,
    pub attempt: u32,
    #[serde(flatten)]
    pub outcome: EntryOutcome,
}

/// Final outcome counts over (seed, method) pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugSummary {
    pub generations: usize,
    pub requests: usize,
    pub accepted: usize,
    pub rejected: BTreeMap<RejectReason, usize>,
    pub request_failures: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentationLog {
    pub entries: Vec<AugLogEntry>,
    pub summary: AugSummary,
}

enum Final {
    Accepted(Instance),
    Dropped(RejectReason),
    Failed,
}

struct JobResult {
    entries: Vec<AugLogEntry>,
    last: Final,
}

/// Runs one generation per (seed, applicable method), retrying rejected
/// outputs up to `retries_per_generation` times with the same prompt.
///
/// Accepted instances that collide with `history` or with an earlier
/// acceptance in this round are dropped as duplicates. Assembly follows
/// (seed order, method order) regardless of completion order.
pub fn augment_round(
    teacher: &dyn ChatModel,
    seeds: &Dataset,
    methods: &[AugMethod],
    iteration: u32,
    history: &HashSet<DedupKey>,
    retries_per_generation: u32,
) -> Result<(Dataset, AugmentationLog), AugError> {
    if methods.is_empty() {
        return Err(AugError::NoMethods);
    }
    let jobs: Vec<(&Instance, AugMethod)> = seeds
        .iter()
        .flat_map(|seed| {
            AugMethod::ALL
                .into_iter()
                .filter(|m| methods.contains(m) && m.polarity() == seed.label)
                .map(move |m| (seed, m))
        })
        .collect();

    let results = run_jobs(teacher, &jobs, iteration, history, retries_per_generation)?;

    let mut aug = Dataset::new(format!("aug_{iteration}"));
    let mut round_keys: HashSet<DedupKey> = HashSet::new();
    let mut log = AugmentationLog::default();
    log.summary.generations = jobs.len();
    for mut result in results {
        log.summary.requests += result.entries.len();
        match result.last {
            Final::Accepted(inst) => {
                if round_keys.insert(inst.dedup_key()) && aug.push(inst.clone()) {
                    log.summary.accepted += 1;
                } else if let Some(last) = result.entries.last_mut() {
                    last.outcome = EntryOutcome::Rejected {
                        reason: RejectReason::Duplicate,
                        raw: inst.sentence.clone(),
                    };
                    *log.summary.rejected.entry(RejectReason::Duplicate).or_default() += 1;
                }
            }
            Final::Dropped(reason) => *log.summary.rejected.entry(reason).or_default() += 1,
            Final::Failed => log.summary.request_failures += 1,
        }
        log.entries.extend(result.entries);
    }
    Ok((aug, log))
}

fn run_jobs(
    teacher: &dyn ChatModel,
    jobs: &[(&Instance, AugMethod)],
    iteration: u32,
    history: &HashSet<DedupKey>,
    retries: u32,
) -> Result<Vec<JobResult>, AugError> {
    let prompts = jobs
        .iter()
        .map(|(seed, m)| render_aug_prompt(*m, seed))
        .collect::<Result<Vec<_>, _>>()?;
    let slots: Vec<Mutex<Option<JobResult>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let work = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        if i >= jobs.len() {
            break;
        }
        let (seed, method) = jobs[i];
        let result = generate(teacher, seed, method, &prompts[i], iteration, history, retries);
        *slots[i].lock().unwrap() = Some(result);
    };
    let workers = teacher.max_in_flight().max(1).min(jobs.len());
    if workers <= 1 {
        work();
    } else {
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(&work);
            }
        });
    }
    let results: Vec<JobResult> = slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().expect("job completed"))
        .collect();

    let requests: usize = results.iter().map(|r| r.entries.len()).sum();
    let all_failed = results.iter().all(|r| {
        r.entries
            .iter()
            .all(|e| matches!(e.outcome, EntryOutcome::RequestFailed { .. }))
    });
    if requests > 0 && all_failed {
        let first_error = results
            .iter()
            .flat_map(|r| &r.entries)
            .find_map(|e| match &e.outcome {
                EntryOutcome::RequestFailed { error } => Some(error.clone()),
                _ => None,
            })
            .unwrap_or_default();
        return Err(AugError::EndpointUnavailable { requests, first_error });
    }
    Ok(results)
}

fn generate(
    teacher: &dyn ChatModel,
    seed: &Instance,
    method: AugMethod,
    prompt: &str,
    iteration: u32,
    history: &HashSet<DedupKey>,
    retries: u32,
) -> JobResult {
    let mut entries = Vec::new();
    let mut last = Final::Failed;
    for attempt in 0..=retries {
        let request = Request::with_context(
            prompt,
            RequestContext::Generate {
                seed: seed.clone(),
                method,
                attempt,
            },
        );
        let entry = |outcome| AugLogEntry {
            seed_id: seed.id.clone(),
            method,
            attempt,
            outcome,
        };
        let completion = match teacher.complete(&request) {
            Ok(c) => c,
            Err(e) => {
                entries.push(entry(EntryOutcome::RequestFailed { error: e.to_string() }));
                last = Final::Failed;
                break;
            }
        };
        match parse_generation(method, &completion.text, seed, iteration) {
            GenerationOutcome::Accepted { instance } if history.contains(&instance.dedup_key()) => {
                entries.push(entry(EntryOutcome::Rejected {
                    reason: RejectReason::Duplicate,
                    raw: completion.text,
                }));
                last = Final::Dropped(RejectReason::Duplicate);
                break;
            }
            GenerationOutcome::Accepted { instance } => {
                entries.push(entry(EntryOutcome::Accepted {
                    instance_id: instance.id.clone(),
                }));
                last = Final::Accepted(instance);
                break;
            }
            GenerationOutcome::Rejected { reason, raw } => {
                entries.push(entry(EntryOutcome::Rejected { reason, raw }));
                last = Final::Dropped(reason);
            }
        }
    }
    JobResult { entries, last }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Label, Provenance};
    use crate::inference::{MockModel, MockReply};

    fn seed(sentence: &str, target: &str, label: Label) -> Instance {
        Instance::new(
            sentence,
            target,
            label,
            Provenance::Original {
                dataset_name: "t".into(),
                source_index: 0,
            },
        )
        .unwrap()
    }

    /// Teacher that writes a fresh valid answer for every method.
    fn valid_teacher() -> MockModel {
        MockModel::from_fn(|req, _| match &req.context {
            RequestContext::Generate { seed, method, .. } => {
                let tag = method.as_str().replace('_', " ");
                match method.family() {
                    super::super::MethodFamily::ReplaceTarget => MockReply::Text(format!(
                        "New sentence: They zorbled the {tag} idea.\nNew word: zorble"
                    )),
                    _ => MockReply::Text(format!("A {tag} line where it {}.", seed.target_word)),
                }
            }
            _ => MockReply::Status(400),
        })
        .build()
    }

    #[test]
    fn one_generation_per_method() {
        let s = Dataset::from_instances("s", vec![seed("Prices soar today.", "soar", Label::Metaphor)]).unwrap();
        let (aug, log) = augment_round(&valid_teacher(), &s, &AugMethod::ALL, 1, &HashSet::new(), 2).unwrap();
        assert_eq!(aug.len(), 3);
        assert_eq!(log.summary.generations, 3);
        assert_eq!(log.summary.accepted, 3);
        for inst in &aug {
            assert_eq!(inst.label, Label::Metaphor);
            assert_eq!(inst.provenance.parent_id(), Some(s.instances()[0].id.as_str()));
        }
    }

    #[test]
    fn echoing_seed_is_duplicate_of_history() {
        let s0 = seed("Prices soar today.", "soar", Label::Metaphor);
        let s = Dataset::from_instances("s", vec![s0.clone()]).unwrap();
        let teacher = MockModel::builder().on_default("Prices soar today.").build();
        let history: HashSet<_> = [s0.dedup_key()].into_iter().collect();
        let methods = [AugMethod::DirectMet, AugMethod::ReplaceContextMet];
        let (aug, log) = augment_round(&teacher, &s, &methods, 1, &history, 2).unwrap();
        assert!(aug.is_empty());
        assert_eq!(log.summary.rejected[&RejectReason::Duplicate], 2);
        // duplicates are not retried
        assert_eq!(teacher.invocation_count(), 2);
    }

    #[test]
    fn rejected_outputs_are_retried_then_dropped() {
        let s = Dataset::from_instances("s", vec![seed("Prices soar today.", "soar", Label::Metaphor)]).unwrap();
        let teacher = MockModel::builder().on_default("The sky wept.").build();
        let (aug, log) = augment_round(&teacher, &s, &[AugMethod::DirectMet], 1, &HashSet::new(), 2).unwrap();
        assert!(aug.is_empty());
        assert_eq!(teacher.invocation_count(), 3);
        assert_eq!(log.summary.rejected[&RejectReason::MissingTargetWord], 1);
        assert_eq!(log.entries.len(), 3);
    }

    #[test]
    fn within_round_duplicates() {
        let a = seed("Prices soar today.", "soar", Label::Metaphor);
        let b = seed("Hopes soar high.", "soar", Label::Metaphor);
        let s = Dataset::from_instances("s", vec![a, b]).unwrap();
        let teacher = MockModel::builder().on_default("Spirits soar.").build();
        let (aug, log) = augment_round(&teacher, &s, &[AugMethod::DirectMet], 1, &HashSet::new(), 0).unwrap();
        assert_eq!(aug.len(), 1);
        assert_eq!(log.summary.rejected[&RejectReason::Duplicate], 1);
    }

    #[test]
    fn polarity_filter_and_empty_methods() {
        let s = Dataset::from_instances("s", vec![seed("He ran home.", "ran", Label::Literal)]).unwrap();
        let teacher = valid_teacher();
        let (aug, _) = augment_round(&teacher, &s, &[AugMethod::DirectMet], 1, &HashSet::new(), 2).unwrap();
        assert!(aug.is_empty());
        assert_eq!(teacher.invocation_count(), 0);
        assert!(matches!(
            augment_round(&teacher, &s, &[], 1, &HashSet::new(), 2),
            Err(AugError::NoMethods)
        ));
    }

    #[test]
    fn total_teacher_failure() {
        let s = Dataset::from_instances("s", vec![seed("He ran home.", "ran", Label::Literal)]).unwrap();
        let teacher = MockModel::builder().on_default(MockReply::Status(401)).build();
        assert!(matches!(
            augment_round(&teacher, &s, &AugMethod::ALL, 1, &HashSet::new(), 2),
            Err(AugError::EndpointUnavailable { requests: 3, .. })
        ));
    }
}
