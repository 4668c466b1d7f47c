//! Parse the bundled dataset, print corpus statistics and label it both ways.
//!
//! cargo run --example label_reviews [-- PATH]

use std::path::PathBuf;

use review_priority::corpus::{corpus_stats, parse_dataset, Approach, Format};
use review_priority::pipeline::label;

fn main() -> review_priority::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/synthetic_200.csv")));
    let format = Format::from_path(&path).unwrap_or(Format::Csv);
    let parsed = parse_dataset(&path, format)?;
    for e in &parsed.errors {
        eprintln!("skipped line {}: {}", e.line, e.kind);
    }

    let stats = corpus_stats(&parsed.records);
    println!("{} reviews, {} answered", stats.n_records, stats.n_responded);
    if let Some(days) = stats.mean_response_latency_days {
        println!("mean response latency {days:.3} days");
    }

    for approach in [Approach::ResponsePresence, Approach::ResponseUrgency] {
        let labeling = label(&parsed.records, approach, 3.0);
        let positive = labeling.examples.iter().filter(|e| e.label == 1).count();
        println!(
            "{:<9} {} labeled, {positive} positive, {} skipped, {} dropped as updated",
            approach.cli_name(),
            labeling.examples.len(),
            labeling.skipped.len(),
            labeling.dropped_updated
        );
    }
    Ok(())
}
