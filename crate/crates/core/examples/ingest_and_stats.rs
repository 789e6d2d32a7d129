//! Load a columnar CSV with custom column names, then look at class balance
//! and draw a balanced, seeded sample.
//!
//! ```bash
//! cargo run --example ingest_and_stats
//! ```

use anyhow::Result;
use cda_forge::data::{compute_stats, ingest_dataset, sample_balanced, ColumnMap, SourceFormat};

const CSV: &str = "\
text,word,is_metaphor,genre
The news hit him hard.,hit,1,news
She hit the ball over the fence.,hit,0,sport
Prices climbed all week.,climbed,1,news
The cat climbed the tree.,climbed,0,fiction
His words cut deep.,cut,1,fiction
I cut the bread.,cut,0,fiction
The news hit him hard!,hit,1,news
,broken,1,news
";

fn main() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("pool.csv");
    std::fs::write(&path, CSV)?;

    let mapping = ColumnMap {
        name: Some("toy".into()),
        sentence: "text".into(),
        target_word: "word".into(),
        label: "is_metaphor".into(),
        skip_invalid: true,
        ..ColumnMap::default()
    };
    let ingested = ingest_dataset(&path, SourceFormat::ColumnarCsv, &mapping)?;
    println!(
        "loaded {} instances ({} duplicates collapsed, {} rows rejected)",
        ingested.dataset.len(),
        ingested.duplicates,
        ingested.rejected.len()
    );
    for row in &ingested.rejected {
        println!("  row {}: {}", row.row, row.reason);
    }

    let data = ingested.dataset;
    let first = &data.instances()[0];
    println!("first id {} keeps extra columns: {:?}", first.id, first.extra);

    let stats = compute_stats(&data, None)?;
    println!("#Instance {}  %M {}", stats.n_instances, stats.pct_metaphor);

    let sample = sample_balanced(&data, 2, 7)?;
    let again = sample_balanced(&data, 2, 7)?;
    assert_eq!(sample, again);
    println!("balanced sample of {} (same seed, same order):", sample.len());
    for inst in sample.iter() {
        println!("  {:<9} {}", inst.label.as_str(), inst.sentence);
    }
    Ok(())
}
