//! Runs the main configuration and two one-switch ablations on the same
//! synthetic pool, then reports each final student on two test sets over
//! three sampled trials.

use std::sync::Arc;

use anyhow::Result;
use cda_forge::augment::MethodFamily;
use cda_forge::data::Instance;
use cda_forge::inference::{EndpointConfig, ModelRouter};
use cda_forge::pipeline::{report_run, run_cda, Ablation, Backends, RunConfig};
use cda_forge::synthetic::{synthetic_pool, unit_hash, SyntheticTeacher};
use cda_forge::trainer::{CorrectnessRule, HookSpec, MockTrainer};

fn main() -> Result<()> {
    let schedule: Vec<CorrectnessRule> = (0..4)
        .map(|k| Arc::new(move |i: &Instance| unit_hash(&[&i.id, "s"]) < 0.6 + 0.1 * k as f64) as CorrectnessRule)
        .collect();
    let trainer = MockTrainer::new(schedule);
    let models = Arc::new(
        ModelRouter::new()
            .register("mock://teacher", Arc::new(SyntheticTeacher::new().reject_rate(0.3).build()))
            .route_prefix("mock://student/", Arc::new(trainer.clone())),
    );
    let backends = Backends::new(models.clone(), Arc::new(trainer.clone()));

    let mut main_config = RunConfig::default();
    main_config.teacher = EndpointConfig::teacher("mock://teacher", "teacher");
    main_config.student_base = trainer.base_endpoint();
    main_config.trainer.hook = HookSpec::Mock;
    main_config.sample.train_per_class = 60;
    main_config.sample.test_per_class = 30;

    let pool = synthetic_pool("pool", 120, 120);
    let tests = [synthetic_pool("test_a", 50, 50), synthetic_pool("test_b", 40, 60)];

    let variants = [
        ("main", main_config.clone()),
        ("train on all", main_config.clone().ablate(Ablation::TrainOnAll)),
        ("no direct", main_config.clone().ablate(Ablation::WithoutFamily(MethodFamily::Direct))),
    ];
    for (label, config) in variants {
        let dir = tempfile::tempdir()?;
        run_cda(&config, &pool, dir.path(), &backends)?;
        let report = report_run(dir.path(), &tests, 3, &*models)?;
        println!("=== {label} ===");
        println!("{}", report.render_markdown());
    }
    Ok(())
}
