//! Acceptance criteria for the curriculum pipeline, one check per criterion.
//!
//! Runs with a custom harness so the output is a single PASS/FAIL line per
//! criterion; any failure makes the binary exit non-zero.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use cda_forge::augment::{parse_generation, render_aug_prompt, AugLogEntry, AugMethod, GenerationOutcome, MethodFamily};
use cda_forge::data::{compute_stats, read_dataset, read_jsonl, render_qa, Dataset, Instance, Label, Provenance, QaRecord};
use cda_forge::eval::{compute_metrics, parse_answer, ConfusionMatrix, ParsedAnswer};
use cda_forge::inference::{EndpointConfig, ModelRouter};
use cda_forge::pipeline::{
    report_run, resume, run_cda, run_cda_with, Ablation, Backends, RunConfig, RunDir, RunOptions, RunState, Stage,
};
use cda_forge::synthetic::{synthetic_pool, unit_hash, SyntheticTeacher};
use cda_forge::trainer::{CorrectnessRule, HookSpec, MockTrainer};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = fn() -> Result<String, String>;

fn main() {
    let criteria: [(&str, Check); 8] = [
        ("curriculum loop conformance (200 instances, 3 iterations)", loop_conformance),
        ("dataset statistics arithmetic and report table", stats_arithmetic),
        ("first-round growth with fitted rejection rate", growth_consistency),
        ("metric oracle on 1000 random confusion matrices", metric_oracle),
        ("prompt fidelity against golden fixtures", prompt_fidelity),
        ("ablation switch coverage", ablation_coverage),
        ("resume equivalence after every stage boundary", resume_equivalence),
        ("parser totality on 10000 adversarial strings", parser_totality),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name} [{secs:.2}s] {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name} [{secs:.2}s] {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

// ---------------------------------------------------------------------------
// shared fixtures

struct Harness {
    config: RunConfig,
    backends: Backends,
    trainer: MockTrainer,
    models: Arc<ModelRouter>,
}

/// Mock teacher plus a mock trainer whose students follow `schedule`.
fn harness(schedule: Vec<CorrectnessRule>, teacher: SyntheticTeacher, per_class: usize) -> Harness {
    let trainer = MockTrainer::new(schedule);
    let models = Arc::new(
        ModelRouter::new()
            .register("mock://teacher", Arc::new(teacher.build()))
            .route_prefix("mock://student/", Arc::new(trainer.clone())),
    );
    let mut config = RunConfig::default();
    config.teacher = EndpointConfig::teacher("mock://teacher", "mock-teacher");
    config.student_base = trainer.base_endpoint();
    config.trainer.hook = HookSpec::Mock;
    config.sample.train_per_class = per_class;
    let backends = Backends::new(models.clone(), Arc::new(trainer.clone()));
    Harness {
        config,
        backends,
        trainer,
        models,
    }
}

/// Student k gets an instance right when its hash falls below `start + step * k`.
fn hashed_schedule(start: f64, step: f64) -> Vec<CorrectnessRule> {
    (0..4)
        .map(|k| {
            Arc::new(move |i: &Instance| unit_hash(&[&i.id, "student"]) < start + step * k as f64) as CorrectnessRule
        })
        .collect()
}

fn ids(d: &Dataset) -> BTreeSet<String> {
    d.ids().map(String::from).collect()
}

fn iter_data(run: &Path, n: u32, file: &str) -> Dataset {
    read_dataset(&run.join(format!("iter_{n}/{file}")), file).unwrap()
}

// ---------------------------------------------------------------------------
// 1. loop conformance

fn loop_conformance() -> Result<String, String> {
    let h = harness(hashed_schedule(0.5, 0.15), SyntheticTeacher::new().reject_rate(0.2), 100);
    let pool = synthetic_pool("balanced", 100, 100);
    let tmp = tempfile::tempdir().unwrap();
    let started = Instant::now();
    let state = run_cda(&h.config, &pool, tmp.path(), &h.backends).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "run took {elapsed:?}");
    ensure!(state.is_complete() && state.records.len() == 3, "run did not complete 3 iterations");
    ensure!(state.d0_size == Some(200), "D^0 has {:?} instances", state.d0_size);

    let run = tmp.path();
    let calls = h.trainer.calls();
    let mut previous = read_dataset(&run.join("d0.jsonl"), "d0").unwrap();
    for n in 1..=3u32 {
        let data = iter_data(run, n, "dataset.jsonl");
        ensure!(ids(&data) == ids(&previous), "iteration {n} did not start from D^{}", n - 1);
        let correct = iter_data(run, n, "correct.jsonl");
        let wrong = iter_data(run, n, "wrong.jsonl");
        let (c, w) = (ids(&correct), ids(&wrong));
        ensure!(c.is_disjoint(&w), "iteration {n}: correct and wrong overlap");
        let union: BTreeSet<String> = c.union(&w).cloned().collect();
        ensure!(union == ids(&data), "iteration {n}: split does not cover D^{}", n - 1);

        let exported: Vec<QaRecord> = read_jsonl(&run.join(format!("iter_{n}/train.jsonl"))).unwrap();
        let expected: Vec<QaRecord> = correct.iter().map(render_qa).collect();
        ensure!(exported == expected, "iteration {n}: training file is not the correct split");

        let log: Vec<AugLogEntry> = read_jsonl(&run.join(format!("iter_{n}/aug_log.jsonl"))).unwrap();
        let seeds: BTreeSet<String> = log.iter().map(|e| e.seed_id.clone()).collect();
        ensure!(seeds == w, "iteration {n}: augmentation seeds differ from the wrong split");
        let aug = iter_data(run, n, "augmented.jsonl");
        for inst in aug.iter() {
            let parent = inst.provenance.parent_id().unwrap_or_default();
            ensure!(w.contains(parent), "iteration {n}: {} descends from a non-wrong seed", inst.id);
        }

        let next = iter_data(run, n, "next.jsonl");
        let a = ids(&aug);
        ensure!(ids(&data).is_disjoint(&a), "iteration {n}: augmentation re-added existing ids");
        let expected_next: BTreeSet<String> = ids(&data).union(&a).cloned().collect();
        ensure!(ids(&next) == expected_next, "iteration {n}: D^n != D^(n-1) + Aug^n");
        ensure!(next.len() >= data.len(), "iteration {n}: dataset shrank");

        let call = &calls[(n - 1) as usize];
        ensure!(call.base_id == state.checkpoints[(n - 1) as usize].id, "iteration {n}: wrong base checkpoint");
        previous = next;
    }
    let sizes: Vec<usize> = state.records.iter().map(|r| r.dataset_size).collect();
    Ok(format!("|D| per iteration {sizes:?}, {:.2}s", elapsed.as_secs_f64()))
}

// ---------------------------------------------------------------------------
// 2 + 3. full-scale run: 6000 instances, 4117 correct of which 2306 metaphors

const WRONG_METAPHORS: usize = 3000 - 2306;
const CORRECT_LITERALS: usize = 4117 - 2306;

/// 3000 metaphors and 3000 literals. The untrained student gets the first
/// 2306 metaphors and the first 1811 literals right.
fn scaled_pool() -> Dataset {
    let pool = synthetic_pool("scaled", 3000, 3000);
    let items = pool
        .into_instances()
        .into_iter()
        .enumerate()
        .map(|(i, mut inst)| {
            let easy = if i < 3000 { i < 2306 } else { i - 3000 < CORRECT_LITERALS };
            inst.extra.insert("easy".into(), easy.into());
            inst
        })
        .collect();
    Dataset::from_instances("scaled", items).unwrap()
}

fn scaled_schedule() -> Vec<CorrectnessRule> {
    let base: CorrectnessRule =
        Arc::new(|i: &Instance| i.extra.get("easy").and_then(|v| v.as_bool()).unwrap_or(false));
    let later = hashed_schedule(0.7, 0.1);
    std::iter::once(base).chain(later.into_iter().skip(1)).collect()
}

/// Per-attempt rejection rate p such that (1 - p^3) * slots = 5416, where
/// slots = 3 methods per wrong seed and each generation gets 3 attempts.
fn fitted_reject_rate() -> f64 {
    let slots = 3.0 * (WRONG_METAPHORS + (3000 - CORRECT_LITERALS)) as f64;
    (1.0 - 5416.0 / slots).cbrt()
}

struct ScaledRun {
    _dir: tempfile::TempDir,
    run: std::path::PathBuf,
    state: RunState,
    report: cda_forge::pipeline::RunReport,
}

fn scaled_run() -> &'static Result<ScaledRun, String> {
    static RUN: std::sync::OnceLock<Result<ScaledRun, String>> = std::sync::OnceLock::new();
    RUN.get_or_init(|| {
        let mut h = harness(
            scaled_schedule(),
            SyntheticTeacher::new().reject_rate(fitted_reject_rate()).max_in_flight(16),
            3000,
        );
        h.config.iterations = 2;
        let dir = tempfile::tempdir().unwrap();
        let run = dir.path().join("run");
        let state = run_cda(&h.config, &scaled_pool(), &run, &h.backends).map_err(|e| e.to_string())?;
        let report = report_run(&run, &[], 3, &*h.models).map_err(|e| e.to_string())?;
        Ok(ScaledRun {
            _dir: dir,
            run,
            state,
            report,
        })
    })
}

fn stats_arithmetic() -> Result<String, String> {
    // constructed counts alone
    let pool = scaled_pool();
    let correctness: HashMap<String, bool> = pool
        .iter()
        .map(|i| (i.id.clone(), i.extra["easy"].as_bool().unwrap()))
        .collect();
    let stats = compute_stats(&pool, Some(&correctness)).map_err(|e| e.to_string())?;
    let got = (
        stats.n_instances,
        stats.pct_metaphor.to_string(),
        stats.pct_correct.unwrap().to_string(),
        stats.pct_correct_metaphor.unwrap().to_string(),
    );
    let want = (6000, "50.00".to_string(), "68.62".to_string(), "56.01".to_string());
    ensure!(got == want, "computed {got:?}, expected {want:?}");

    // the same numbers, measured by a real run and printed by the report
    let scaled = scaled_run().as_ref().map_err(Clone::clone)?;
    let row = scaled.report.stats.first().ok_or("report has no rows")?;
    let persisted: cda_forge::data::DatasetStats =
        cda_forge::fsutil::read_json(&scaled.run.join("iter_1/stats.json")).map_err(|e| e.to_string())?;
    ensure!(row.n_instances == persisted.n_instances, "row #Instance differs from stats.json");
    ensure!(row.pct_metaphor == persisted.pct_metaphor, "row %M differs from stats.json");
    ensure!(row.pct_correct == persisted.pct_correct, "row %Correct differs from stats.json");
    ensure!(
        row.pct_correct_metaphor == persisted.pct_correct_metaphor,
        "row %Correct.M differs from stats.json"
    );
    let table = scaled.report.render_stats_table();
    ensure!(table.contains("| 1 | 6000 | 50.00 | 68.62 | 56.01 |"), "printed table:\n{table}");
    let second = &scaled.report.stats[1];
    let md = std::fs::read_to_string(scaled.run.join("report.md")).map_err(|e| e.to_string())?;
    ensure!(md.contains(&table), "report.md lacks the stats table");
    Ok(format!("row 1 = 6000 / 50.00 / 68.62 / 56.01; row 2 #Instance = {}", second.n_instances))
}

fn growth_consistency() -> Result<String, String> {
    let scaled = scaled_run().as_ref().map_err(Clone::clone)?;
    let r1 = &scaled.state.records[0];
    ensure!(r1.wrong == Some(1883), "wrong split has {:?} instances", r1.wrong);
    let summary = r1.augmentation.as_ref().ok_or("no augmentation summary")?;
    ensure!(summary.generations == 5649, "{} generations, expected 5649", summary.generations);
    let growth = r1.next_dataset_size.unwrap() - r1.dataset_size;
    ensure!((5200..=5700).contains(&growth), "round-1 growth {growth} outside [5200, 5700]");
    Ok(format!(
        "p = {:.4}, growth {growth} (reference 5416), {} teacher requests",
        fitted_reject_rate(),
        summary.requests
    ))
}

// ---------------------------------------------------------------------------
// 4. metric oracle

struct Oracle {
    accuracy: f64,
    precision: f64,
    recall: f64,
    f1: f64,
}

/// Counts item by item over an explicit list of (gold, prediction) pairs.
fn brute_force(pairs: &[(bool, Option<bool>)]) -> Oracle {
    let (mut right, mut pred_pos, mut true_pos, mut gold_pos_answered) = (0u64, 0u64, 0u64, 0u64);
    for &(gold, pred) in pairs {
        if pred == Some(gold) {
            right += 1;
        }
        if pred == Some(true) {
            pred_pos += 1;
            if gold {
                true_pos += 1;
            }
        }
        if gold && pred.is_some() {
            gold_pos_answered += 1;
        }
    }
    let div = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = div(true_pos, pred_pos);
    let recall = div(true_pos, gold_pos_answered);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Oracle {
        accuracy: div(right, pairs.len() as u64),
        precision,
        recall,
        f1,
    }
}

fn metric_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut cases: Vec<[usize; 5]> = vec![[0, 0, 5, 5, 0], [0, 3, 0, 4, 0], [0, 0, 0, 0, 7], [4, 0, 0, 0, 0]];
    while cases.len() < 1000 {
        let max = [3usize, 20, 500][rng.gen_range(0..3)];
        cases.push(std::array::from_fn(|_| rng.gen_range(0..=max)));
    }
    let mut worst: f64 = 0.0;
    for [tp, fp, fn_, tn, u] in cases {
        if tp + fp + fn_ + tn + u == 0 {
            continue;
        }
        let mut pairs = Vec::new();
        pairs.extend(std::iter::repeat((true, Some(true))).take(tp));
        pairs.extend(std::iter::repeat((false, Some(true))).take(fp));
        pairs.extend(std::iter::repeat((true, Some(false))).take(fn_));
        pairs.extend(std::iter::repeat((false, Some(false))).take(tn));
        pairs.extend((0..u).map(|k| (k % 2 == 0, None)));
        let mut cm = ConfusionMatrix::default();
        for &(gold, pred) in &pairs {
            let label = |b: bool| if b { Label::Metaphor } else { Label::Literal };
            cm.record(label(gold), pred.map(label));
        }
        let got = compute_metrics(&cm).map_err(|e| e.to_string())?;
        let want = brute_force(&pairs);
        for (name, a, b) in [
            ("accuracy", got.accuracy, want.accuracy),
            ("precision", got.precision, want.precision),
            ("recall", got.recall, want.recall),
            ("f1", got.f1, want.f1),
        ] {
            let diff = (a - b).abs();
            worst = worst.max(diff);
            ensure!(diff <= 1e-12, "{name} differs by {diff} on {:?}", (tp, fp, fn_, tn, u));
        }
    }
    let zero = compute_metrics(&ConfusionMatrix {
        tp: 0,
        fp: 0,
        fn_: 5,
        tn: 5,
        unparseable: 0,
    })
    .unwrap();
    ensure!(zero.precision == 0.0 && zero.recall == 0.0 && zero.f1 == 0.0, "zero-denominator case: {zero:?}");
    ensure!(zero.accuracy == 0.5, "zero-denominator accuracy {}", zero.accuracy);
    Ok(format!("max deviation {worst:e}"))
}

// ---------------------------------------------------------------------------
// 5. prompt fidelity

fn fixture(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/prompts").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn exemplar(sentence: &str, target: &str, label: Label) -> Instance {
    Instance::new(
        sentence,
        target,
        label,
        Provenance::Original {
            dataset_name: "fixture".into(),
            source_index: 0,
        },
    )
    .unwrap()
}

fn prompt_fidelity() -> Result<String, String> {
    let met = exemplar("The news hit him hard.", "hit", Label::Metaphor);
    let lit = exemplar("She hit the ball over the fence.", "hit", Label::Literal);
    let qa = render_qa(&met);
    ensure!(qa.instruction == fixture("qa_instruction.txt"), "QA instruction differs:\n{}", qa.instruction);
    ensure!(qa.output == "Yes" && render_qa(&lit).output == "No", "QA outputs are not Yes/No");
    for method in AugMethod::ALL {
        let seed = if method.polarity() == Label::Metaphor { &met } else { &lit };
        let rendered = render_aug_prompt(method, seed).map_err(|e| e.to_string())?;
        let golden = fixture(&format!("{method}.txt"));
        ensure!(rendered == golden, "{method} differs from fixture:\n{rendered:?}\n---\n{golden:?}");
    }

    let grasp = exemplar("He grasped the concept quickly.", "grasp", Label::Metaphor);
    let raw = "New sentence: He digested the concept swiftly.\nNew word: digest";
    match parse_generation(AugMethod::ReplaceTargetMet, raw, &grasp, 1) {
        GenerationOutcome::Accepted { instance } => {
            ensure!(instance.sentence == "He digested the concept swiftly.", "sentence {:?}", instance.sentence);
            ensure!(instance.target_word == "digested", "target {:?}", instance.target_word);
            ensure!(instance.label == Label::Metaphor, "label flipped");
        }
        other => return Err(format!("few-shot exemplar rejected: {other:?}")),
    }
    Ok("QA prompt + 6 augmentation prompts byte-identical; exemplar binds 'digested'".into())
}

// ---------------------------------------------------------------------------
// 6. ablations

fn ablation_run(ablation: Option<Ablation>) -> Result<(tempfile::TempDir, RunState), String> {
    let h = harness(hashed_schedule(0.45, 0.15), SyntheticTeacher::new().reject_rate(0.25), 50);
    let config = match ablation {
        Some(a) => h.config.clone().ablate(a),
        None => h.config.clone(),
    };
    let dir = tempfile::tempdir().unwrap();
    let state = run_cda(&config, &synthetic_pool("abl", 60, 60), dir.path(), &h.backends)
        .map_err(|e| format!("{ablation:?}: {e}"))?;
    Ok((dir, state))
}

fn methods_used(run: &Path, iterations: u32) -> HashSet<AugMethod> {
    (1..=iterations)
        .flat_map(|n| read_jsonl::<AugLogEntry>(&run.join(format!("iter_{n}/aug_log.jsonl"))).unwrap())
        .map(|e| e.method)
        .collect()
}

fn ablation_coverage() -> Result<String, String> {
    let (main_dir, main) = ablation_run(None)?;
    for r in &main.records {
        ensure!(r.train_size == r.correct, "default: iteration {} trained on {:?} of {:?} correct", r.index, r.train_size, r.correct);
        ensure!(r.seeds == r.wrong, "default: iteration {} seeded {:?} of {:?} wrong", r.index, r.seeds, r.wrong);
        ensure!(
            r.next_dataset_size == Some(r.dataset_size + r.augmented_size.unwrap()),
            "default: iteration {} did not merge",
            r.index
        );
    }
    for pair in main.checkpoints.windows(2) {
        ensure!(pair[1].parent.as_deref() == Some(pair[0].id.as_str()), "default lineage is not a chain");
    }
    ensure!(methods_used(main_dir.path(), 3).len() == 6, "default run did not use all six methods");

    let (_d, all_train) = ablation_run(Some(Ablation::TrainOnAll))?;
    for r in &all_train.records {
        ensure!(r.train_size == Some(r.dataset_size), "train_on=all: iteration {} trained on {:?}", r.index, r.train_size);
    }

    let (_d, all_seed) = ablation_run(Some(Ablation::AugmentAll))?;
    for r in &all_seed.records {
        ensure!(r.seeds == Some(r.dataset_size), "augment_seed=all: iteration {} seeded {:?}", r.index, r.seeds);
    }

    let (aug_dir, aug_only) = ablation_run(Some(Ablation::AugmentedOnly))?;
    for r in &aug_only.records {
        let next = iter_data(aug_dir.path(), r.index, "next.jsonl");
        let aug = iter_data(aug_dir.path(), r.index, "augmented.jsonl");
        ensure!(ids(&next) == ids(&aug), "augmented_only: D^{} != Aug^{}", r.index, r.index);
        ensure!(
            next.iter().all(|i| matches!(i.provenance, Provenance::Augmented { .. })),
            "augmented_only: D^{} holds original instances",
            r.index
        );
    }

    let (_d, scratch) = ablation_run(Some(Ablation::FromScratch))?;
    ensure!(scratch.checkpoints.len() == 4, "from_scratch: {} checkpoints", scratch.checkpoints.len());
    for c in &scratch.checkpoints[1..] {
        ensure!(c.parent.as_deref() == Some("base"), "from_scratch: {} has parent {:?}", c.id, c.parent);
    }

    for family in [MethodFamily::Direct, MethodFamily::ReplaceTarget, MethodFamily::ReplaceContext] {
        let (dir, _) = ablation_run(Some(Ablation::WithoutFamily(family)))?;
        let used = methods_used(dir.path(), 3);
        let dropped = AugMethod::of_family(family);
        ensure!(used.len() == 4 && dropped.iter().all(|m| !used.contains(m)), "without {family:?}: used {used:?}");
    }
    Ok("train_on, augment_seed, next_data, finetune_mode and method families all observable".into())
}

// ---------------------------------------------------------------------------
// 7. resume equivalence

fn resume_harness() -> Harness {
    harness(hashed_schedule(0.5, 0.15), SyntheticTeacher::new().reject_rate(0.3).error_rate(0.1), 40)
}

fn snapshot(run: &Path) -> Vec<(String, Vec<u8>)> {
    RunDir::new(run)
        .artifact_files()
        .unwrap()
        .into_iter()
        .map(|f| {
            let bytes = std::fs::read(run.join(&f)).unwrap();
            (f, bytes)
        })
        .collect()
}

fn compare(reference: &[(String, Vec<u8>)], candidate: &[(String, Vec<u8>)], label: &str) -> Result<(), String> {
    let names = |s: &[(String, Vec<u8>)]| s.iter().map(|(f, _)| f.clone()).collect::<Vec<_>>();
    ensure!(names(reference) == names(candidate), "{label}: file sets differ");
    for ((f, a), (_, b)) in reference.iter().zip(candidate) {
        ensure!(a == b, "{label}: {f} differs");
    }
    Ok(())
}

fn resume_equivalence() -> Result<String, String> {
    let pool = synthetic_pool("resume", 50, 50);
    let h = resume_harness();
    let reference_dir = tempfile::tempdir().unwrap();
    run_cda(&h.config, &pool, reference_dir.path(), &h.backends).map_err(|e| e.to_string())?;
    let reference = snapshot(reference_dir.path());
    let stages = Stage::sequence(h.config.iterations).len();

    for k in 1..stages {
        let dir = tempfile::tempdir().unwrap();
        let first = resume_harness();
        let paused = run_cda_with(&first.config, &pool, dir.path(), &first.backends, RunOptions { halt_after_stages: Some(k) })
            .map_err(|e| e.to_string())?;
        ensure!(!paused.is_complete(), "run finished before stage {k}");
        // a new process: fresh backends, state read from disk
        let second = resume_harness();
        resume(dir.path(), &second.backends, RunOptions::default()).map_err(|e| e.to_string())?;
        compare(&reference, &snapshot(dir.path()), &format!("halt after {k} stages"))?;
    }

    // a trainer crash mid-run, recovered by resume
    let dir = tempfile::tempdir().unwrap();
    let crashing = resume_harness();
    let failing = Backends::new(crashing.models.clone(), Arc::new(crashing.trainer.clone().failing_on(vec![2])));
    let err = run_cda(&crashing.config, &pool, dir.path(), &failing).err().ok_or("injected failure did not surface")?;
    ensure!(err.is_stage_failure(), "unexpected error {err}");
    let fresh = resume_harness();
    resume(dir.path(), &fresh.backends, RunOptions::default()).map_err(|e| e.to_string())?;
    compare(&reference, &snapshot(dir.path()), "after trainer crash")?;

    Ok(format!("{} files identical after each of {} interruptions and one crash", reference.len(), stages - 1))
}

// ---------------------------------------------------------------------------
// 8. parser totality

const FRAGMENTS: &[&str] = &[
    "Yes", "No", "yes.", "NO!", "\"Yes\"", "**Yes**", "Maybe", "", " ", "\n", "\t", "New sentence:", "New word:",
    "Target word:", "Your sentence:", "Original sentence:", "**New sentence:**", "'", "\"", "`", "```", "...", ".",
    "?", "!", "The", "hit", "Hit", "HIT", "hitting", "hi", "h", "grasp", "digested", "\u{0}", "\u{202e}", "\u{feff}",
    "é", "日本語", "🙂", "\r\n", "New sentence: He hit it.", "New word: hit", "New word:", "Sentence 1. Sentence 2.",
    "- ", "1. ", "> ", "# ", "Here is your sentence:", "Sure!", ":", "::::", "\\", "{target_word}", "{sentence}",
];

fn adversarial(rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..4) {
        0 => (0..rng.gen_range(0..40)).map(|_| rng.gen::<char>()).collect(),
        1 => (0..rng.gen_range(0..400)).map(|_| char::from(rng.gen_range(0u8..128))).collect(),
        2 => {
            let n = rng.gen_range(1..12);
            let mut s = String::new();
            for _ in 0..n {
                s.push_str(FRAGMENTS[rng.gen_range(0..FRAGMENTS.len())]);
                if rng.gen_bool(0.4) {
                    s.push('\n');
                } else if rng.gen_bool(0.5) {
                    s.push(' ');
                }
            }
            s
        }
        _ => {
            let long = "word ".repeat(rng.gen_range(0..5000));
            format!("New sentence: {long}hit.\nNew word: {}", FRAGMENTS[rng.gen_range(0..FRAGMENTS.len())])
        }
    }
}

fn parser_totality() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let met = exemplar("The news hit him hard.", "hit", Label::Metaphor);
    let lit = exemplar("She hit the ball over the fence.", "hit", Label::Literal);
    let (mut answers, mut unparseable, mut accepted, mut rejected) = (0, 0, 0, 0);
    for _ in 0..10_000 {
        let raw = adversarial(&mut rng);
        let parsed = catch_unwind(|| parse_answer(&raw)).map_err(|_| format!("parse_answer aborted on {raw:?}"))?;
        match parsed {
            ParsedAnswer::Unparseable { .. } => unparseable += 1,
            _ => answers += 1,
        }
        for method in AugMethod::ALL {
            let seed = if method.polarity() == Label::Metaphor { &met } else { &lit };
            let outcome = catch_unwind(|| parse_generation(method, &raw, seed, 1))
                .map_err(|_| format!("parse_generation({method}) aborted on {raw:?}"))?;
            match outcome {
                GenerationOutcome::Accepted { instance } => {
                    ensure!(instance.validate().is_ok(), "accepted invalid instance from {raw:?}");
                    accepted += 1;
                }
                GenerationOutcome::Rejected { .. } => rejected += 1,
            }
        }
    }
    Ok(format!(
        "answers {answers} / unparseable {unparseable}; generations accepted {accepted} / rejected {rejected}"
    ))
}
