//! The trainer is an external process. This example drives a shell script
//! through the command hook: the script receives the training file, base
//! checkpoint and output directory, and reports back by writing
//! `manifest.txt`. The pipeline never looks inside the checkpoint itself.

use anyhow::Result;
use cda_forge::synthetic::synthetic_pool;
use cda_forge::trainer::{export_training_file, train, CheckpointRef, CommandHook, HookSpec, TrainerConfig};
use cda_forge::inference::EndpointConfig;

const SCRIPT: &str = r#"
set -e
train_file="$1"; base="$2"; out_dir="$3"
lines=$(wc -l < "$train_file")
echo "pretend-training on $lines examples from $base (rank=$TRAINER_OPT_ADAPTER_RANK, epochs=$TRAINER_EPOCHS)"
cat > "$out_dir/manifest.txt" <<MANIFEST
checkpoint_id=demo-$(basename "$out_dir")
base_url=http://127.0.0.1:8001/v1
model_id=student-$(basename "$out_dir")
examples=$lines
MANIFEST
"#;

fn main() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let script = dir.path().join("train.sh");
    std::fs::write(&script, SCRIPT)?;

    let template = format!("sh {} {{train_file}} {{base}} {{out_dir}}", script.display());
    let config = TrainerConfig {
        hook: HookSpec::Command {
            template: template.clone(),
        },
        ..TrainerConfig::default()
    };
    let hook = CommandHook::new(template);

    let train_file = dir.path().join("train.jsonl");
    let n = export_training_file(&synthetic_pool("train", 5, 5), &train_file)?;
    println!("exported {n} QA records to {}", train_file.display());

    let base = CheckpointRef::base(&EndpointConfig::student("http://127.0.0.1:8000/v1", "base-student"));
    let first = train(&hook, &config, &base, &train_file, &dir.path().join("iter_1"), 1)?;
    let second = train(&hook, &config, &first, &train_file, &dir.path().join("iter_2"), 2)?;
    for ckpt in [&base, &first, &second] {
        println!(
            "{:<12} parent={:<12} serving {} at {}",
            ckpt.id,
            ckpt.parent.as_deref().unwrap_or("-"),
            ckpt.serving.model_id,
            ckpt.serving.base_url
        );
    }
    println!("metadata from manifest: {:?}", second.metadata);

    let failing = CommandHook::new("sh -c 'echo out of memory >&2; exit 3' {train_file} {base} {out_dir}");
    match train(&failing, &config, &second, &train_file, &dir.path().join("iter_3"), 3) {
        Ok(_) => unreachable!(),
        Err(e) => println!("failing hook: {e}"),
    }
    Ok(())
}
