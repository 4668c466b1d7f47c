//! Preprocess a single review and print its feature vector.
//!
//! cargo run --example extract_features -- "The app crashes every time I open it!"

use chrono::{TimeZone, Utc};

use review_priority::corpus::{Approach, RecordId, ReviewRecord};
use review_priority::features::FeatureId;
use review_priority::lexicon::Lexicons;
use review_priority::pipeline::{label, prepare, FeaturizeConfig, Featurizer};
use review_priority::preprocess::{preprocess, PreprocessOptions};
use review_priority::synth::review_fixture;

fn main() -> review_priority::Result<()> {
    let text = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "The app keeps crashing after the update. I can't log in and I'm really frustrated!".into());
    let lexicons = Lexicons::bundled();
    let options = PreprocessOptions::default();

    let pre = preprocess(&text, &lexicons, &options);
    println!("sentences: {:?}", pre.sentences);
    println!("content:   {:?}", pre.content_tokens);
    println!("stems:     {:?}", pre.stems);
    println!("english:   {}", pre.is_english);

    // IDF and the topic model need a corpus; fit them on the synthetic one.
    let records = review_fixture(200, 7);
    let labeling = label(&records, Approach::ResponsePresence, 3.0);
    let config = FeaturizeConfig::default();
    let corpus = prepare(&records, &labeling.examples, &lexicons, &config.preprocess)?;
    let featurizer = Featurizer::fit(corpus.reviews.iter(), &config)?;

    let record = ReviewRecord {
        record_id: RecordId(0),
        app_name: "Example".into(),
        review_text: text,
        rating: 2,
        review_time: Utc.with_ymd_and_hms(2024, 6, 1, 9, 30, 0).unwrap(),
        helpful_votes: 3,
        response_text: None,
        response_time: None,
    };
    let vector = featurizer.transform(&record, &pre, &lexicons)?;
    for id in FeatureId::all() {
        println!("{:<4} {:<34} {:>10.4}", id.to_string(), id.descriptor().name, vector.get(id));
    }
    Ok(())
}
