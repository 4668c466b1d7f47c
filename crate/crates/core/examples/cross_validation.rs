//! Five-fold cross-validation of all four models on the synthetic fixture.
//!
//! cargo run --release --example cross_validation

use review_priority::corpus::Approach;
use review_priority::eval::markdown_table;
use review_priority::lexicon::Lexicons;
use review_priority::models::{ModelKind, TrainConfig};
use review_priority::pipeline::{evaluate, label, prepare, prepare_folds, CvConfig, FeaturizeConfig};
use review_priority::select::SelectionConfig;
use review_priority::synth::review_fixture;

fn main() -> review_priority::Result<()> {
    let records = review_fixture(200, 7);
    let lexicons = Lexicons::bundled();
    let labeling = label(&records, Approach::ResponsePresence, 3.0);
    let featurize = FeaturizeConfig::default();
    let corpus = prepare(&records, &labeling.examples, &lexicons, &featurize.preprocess)?;
    println!("{} labeled reviews, {} filtered as non-English", corpus.len(), corpus.non_english.len());

    let selection = SelectionConfig::default();
    let cv = CvConfig { k: 5, seed: 7, paper_mode: false };
    let folds = prepare_folds(&corpus, &lexicons, &featurize, &selection, &cv)?;
    let mut reports = Vec::new();
    for kind in ModelKind::ALL {
        let report = evaluate(&folds, corpus.approach, &selection, &TrainConfig::new(kind, 7))?;
        println!("{kind}: kept {:?}", report.kept);
        reports.push(report);
    }
    print!("{}", markdown_table(&reports));
    Ok(())
}
