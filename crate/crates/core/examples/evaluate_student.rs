//! Zero-shot evaluation: render the question per instance, collect answers
//! from a model, parse Yes/No, and split into correct and wrong subsets.
//!
//! A scripted mock stands in for the student so the example runs offline.

use anyhow::Result;
use cda_forge::data::{compute_stats, render_qa};
use cda_forge::eval::evaluate_split;
use cda_forge::inference::{MockModel, MockReply};
use cda_forge::synthetic::synthetic_pool;

fn main() -> Result<()> {
    let data = synthetic_pool("demo", 6, 6);
    println!("prompt for the first instance:\n  {}\n", render_qa(&data.instances()[0]).instruction);

    // Says Yes to every other instance, chats a little, and times out once.
    let ids: Vec<String> = data.ids().map(String::from).collect();
    let student = MockModel::builder()
        .on_default("no")
        .on_instance(ids[0].clone(), "Yes, it is metaphorical.")
        .on_instance(ids[2].clone(), "YES")
        .on_instance(ids[4].clone(), "Hmm, hard to say.")
        .on_instance(ids[7].clone(), MockReply::Status(503))
        .max_retries(1)
        .build();

    let (report, split) = evaluate_split(&student, &data)?;
    for r in &report.records {
        println!(
            "{}  gold={:<9} raw={:<28?} correct={}",
            &r.instance_id[..8],
            r.gold.as_str(),
            r.raw_text,
            r.correct
        );
    }
    println!("\nconfusion: {:?}", report.confusion);
    println!(
        "accuracy {:.3}  precision {:.3}  recall {:.3}  f1 {:.3}",
        report.metrics.accuracy, report.metrics.precision, report.metrics.recall, report.metrics.f1
    );
    println!("correct {} / wrong {}", split.correct.len(), split.wrong.len());

    let stats = compute_stats(&data, Some(&report.correctness()))?;
    println!(
        "%Correct {}  %Correct.M {}",
        stats.pct_correct.unwrap(),
        stats.pct_correct_metaphor.unwrap()
    );
    Ok(())
}
