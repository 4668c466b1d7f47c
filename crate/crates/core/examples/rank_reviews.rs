//! Train XGBoost on answered and unanswered reviews, then rank the unanswered
//! ones into a response queue.
//!
//! cargo run --release --example rank_reviews

use review_priority::corpus::Approach;
use review_priority::features::approach_features;
use review_priority::lexicon::Lexicons;
use review_priority::models::{train, Dataset, ModelKind, TrainConfig};
use review_priority::pipeline::{label, prepare, rank, write_rank_csv, FeaturizeConfig, Featurizer};
use review_priority::preprocess::preprocess;
use review_priority::select::{select_features, SelectionConfig};
use review_priority::synth::review_fixture;

fn main() -> review_priority::Result<()> {
    let history = review_fixture(200, 7);
    let lexicons = Lexicons::bundled();
    let config = FeaturizeConfig::default();
    let approach = Approach::ResponsePresence;

    let labeling = label(&history, approach, 3.0);
    let corpus = prepare(&history, &labeling.examples, &lexicons, &config.preprocess)?;
    let featurizer = Featurizer::fit(corpus.reviews.iter(), &config)?;
    let all: Vec<usize> = (0..corpus.len()).collect();
    let table = featurizer.table(&corpus, &all, &lexicons)?;
    let selection = select_features(&table, &approach_features(approach), &SelectionConfig::default())?;
    let model = train(&Dataset::from_table(&table, &selection.kept)?, &TrainConfig::new(ModelKind::Xgb, 1))?;

    // Fresh reviews that nobody has answered yet.
    let incoming: Vec<_> = review_fixture(40, 99)
        .into_iter()
        .map(|mut r| {
            r.response_text = None;
            r.response_time = None;
            r
        })
        .collect();
    let vectors = incoming
        .iter()
        .map(|r| featurizer.transform(r, &preprocess(&r.review_text, &lexicons, &config.preprocess), &lexicons))
        .collect::<review_priority::Result<Vec<_>>>()?;
    let ranked = rank(&incoming, &vectors, &model)?;
    write_rank_csv(&ranked[..ranked.len().min(10)], std::io::stdout().lock())?;
    Ok(())
}
