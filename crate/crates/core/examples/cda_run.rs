//! A complete curriculum run against in-process stand-ins: a synthetic
//! teacher and a mock trainer whose students get better every round. The
//! run is paused part-way and resumed, as if the process had been killed.
//!
//! ```bash
//! cargo run --example cda_run
//! RUST_LOG=cda_forge=debug cargo run --example cda_run
//! ```

use std::sync::Arc;

use anyhow::Result;
use cda_forge::data::Instance;
use cda_forge::inference::{EndpointConfig, ModelRouter};
use cda_forge::pipeline::{resume, run_cda_with, Backends, RunConfig, RunOptions};
use cda_forge::synthetic::{synthetic_pool, unit_hash, SyntheticTeacher};
use cda_forge::trainer::{CorrectnessRule, HookSpec, MockTrainer};

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()))
        .init();

    // Student k answers an instance correctly when its hash is below 0.55 + 0.15k.
    let schedule: Vec<CorrectnessRule> = (0..4)
        .map(|k| Arc::new(move |i: &Instance| unit_hash(&[&i.id, "student"]) < 0.55 + 0.15 * k as f64) as CorrectnessRule)
        .collect();
    let trainer = MockTrainer::new(schedule);
    let teacher = SyntheticTeacher::new().error_rate(0.15).reject_rate(0.2).build();
    let models = ModelRouter::new()
        .register("mock://teacher", Arc::new(teacher))
        .route_prefix("mock://student/", Arc::new(trainer.clone()));
    let backends = Backends::new(Arc::new(models), Arc::new(trainer.clone()));

    let mut config = RunConfig::default();
    config.teacher = EndpointConfig::teacher("mock://teacher", "synthetic-teacher");
    config.student_base = trainer.base_endpoint();
    config.trainer.hook = HookSpec::Mock;
    config.sample.train_per_class = 100;

    let pool = synthetic_pool("pool", 160, 160);
    let dir = tempfile::tempdir()?;
    let paused = run_cda_with(&config, &pool, dir.path(), &backends, RunOptions { halt_after_stages: Some(5) })?;
    println!("paused before {}", paused.next_stage.expect("run is not over"));

    let state = resume(dir.path(), &backends, RunOptions::default())?;
    let filter = state.filter.expect("filter ran");
    println!(
        "teacher filter: {} -> {} instances",
        filter.before.n_instances, filter.after.n_instances
    );
    println!("{:>4} {:>9} {:>7} {:>9} {:>11} {:>10}", "iter", "#Instance", "%M", "%Correct", "%Correct.M", "augmented");
    for r in &state.records {
        let s = r.stats.expect("evaluated");
        println!(
            "{:>4} {:>9} {:>7} {:>9} {:>11} {:>10}",
            r.index,
            s.n_instances,
            s.pct_metaphor.to_string(),
            s.pct_correct.unwrap().to_string(),
            s.pct_correct_metaphor.unwrap().to_string(),
            r.augmented_size.unwrap_or(0)
        );
    }
    let lineage: Vec<&str> = state.checkpoints.iter().map(|c| c.id.as_str()).collect();
    println!("lineage: {}", lineage.join(" -> "));
    println!("artifacts in {}:", dir.path().display());
    for f in cda_forge::pipeline::RunDir::new(dir.path()).artifact_files()? {
        println!("  {f}");
    }
    Ok(())
}
