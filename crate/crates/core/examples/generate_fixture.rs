//! Writes the 200-review synthetic dataset used by the end-to-end tests.
//!
//! cargo run --example generate_fixture [-- PATH]

use std::fs::File;
use std::io::BufWriter;

use review_priority::corpus::write_csv;
use review_priority::synth::{fixture_rule, review_fixture};

fn main() -> review_priority::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/synthetic_200.csv").to_string());
    let records = review_fixture(200, 7);
    let positives = records.iter().filter(|r| fixture_rule(r.rating, &r.review_text)).count();
    let file = File::create(&path).map_err(|e| review_priority::Error::io(&path, e))?;
    write_csv(&records, BufWriter::new(file))?;
    println!("wrote {} reviews ({positives} answered) to {path}", records.len());
    Ok(())
}
