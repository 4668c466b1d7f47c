//! Correlation-based feature selection over the synthetic corpus.
//!
//! cargo run --release --example feature_selection

use review_priority::corpus::Approach;
use review_priority::features::approach_features;
use review_priority::lexicon::Lexicons;
use review_priority::pipeline::{label, prepare, FeaturizeConfig, Featurizer};
use review_priority::select::{select_features, SelectionConfig};
use review_priority::synth::review_fixture;

fn main() -> review_priority::Result<()> {
    let records = review_fixture(200, 7);
    let lexicons = Lexicons::bundled();
    let config = FeaturizeConfig::default();

    for approach in [Approach::ResponsePresence, Approach::ResponseUrgency] {
        let labeling = label(&records, approach, 3.0);
        let corpus = prepare(&records, &labeling.examples, &lexicons, &config.preprocess)?;
        let featurizer = Featurizer::fit(corpus.reviews.iter(), &config)?;
        let all: Vec<usize> = (0..corpus.len()).collect();
        let table = featurizer.table(&corpus, &all, &lexicons)?;

        let report = select_features(&table, &approach_features(approach), &SelectionConfig::default())?;
        println!("== {} ({} reviews)", approach.cli_name(), table.len());
        print!("{}", report.to_text());
        println!();
    }
    Ok(())
}
