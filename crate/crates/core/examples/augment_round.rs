//! One augmentation round: every wrong seed goes to the teacher once per
//! applicable method, bad outputs are retried, and accepted sentences are
//! deduplicated against everything seen so far.

use std::collections::HashSet;

use anyhow::Result;
use cda_forge::augment::{augment_round, render_aug_prompt, AugMethod, EntryOutcome};
use cda_forge::synthetic::{synthetic_pool, SyntheticTeacher};

fn main() -> Result<()> {
    let seeds = synthetic_pool("wrong", 3, 3);
    let seed = &seeds.instances()[0];
    println!("{} prompt for seed {:?}:\n{}\n", AugMethod::ReplaceTargetMet, seed.sentence, render_aug_prompt(AugMethod::ReplaceTargetMet, seed)?);

    // A third of the teacher's attempts come back unusable.
    let teacher = SyntheticTeacher::new().reject_rate(0.33).build();
    let history: HashSet<_> = seeds.iter().map(|i| i.dedup_key()).collect();
    let (augmented, log) = augment_round(&teacher, &seeds, &AugMethod::ALL, 1, &history, 2)?;

    for entry in log.entries.iter().filter(|e| !matches!(e.outcome, EntryOutcome::Accepted { .. })) {
        println!("attempt {} of {} on {}: {:?}", entry.attempt, entry.method, &entry.seed_id[..8], entry.outcome);
    }
    println!("\nsummary: {:?}", log.summary);
    for inst in augmented.iter() {
        println!("  [{}] {} (target: {})", inst.label.as_str(), inst.sentence, inst.target_word);
    }
    println!("teacher calls: {}", teacher.invocation_count());
    Ok(())
}
