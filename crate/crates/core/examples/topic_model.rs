//! Fit LDA on a corpus with three planted topics and compare topic counts by
//! held-out perplexity.
//!
//! cargo run --release --example topic_model

use review_priority::synth::planted_topics;
use review_priority::topics::{fit_lda_traced, LdaConfig};

fn main() -> review_priority::Result<()> {
    let corpus = planted_topics(3, 20, 240, 50, 4);
    let (train, held) = corpus.docs.split_at(200);

    let config = LdaConfig {
        k: 3,
        iterations: 300,
        min_df: 1,
        seed: 1,
        ..LdaConfig::default()
    };
    let (model, trace) = fit_lda_traced(train, &config)?;
    println!(
        "log-likelihood {:.1} after 1 sweep, {:.1} after {}",
        trace.log_likelihood[0],
        trace.log_likelihood.last().unwrap(),
        trace.log_likelihood.len()
    );
    for (k, words) in model.top_words(6).iter().enumerate() {
        let words: Vec<&str> = words.iter().map(|(w, _)| w.as_str()).collect();
        println!("topic {k}: {}", words.join(" "));
    }

    println!("\nk  held-out perplexity");
    for k in [2, 3, 5, 8] {
        let model = fit_lda_traced(train, &LdaConfig { k, ..config })?.0;
        println!("{k:<2} {:.2}", model.perplexity(held, 50, 1));
    }
    Ok(())
}
