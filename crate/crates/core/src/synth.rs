//! Seeded synthetic data: a labeled review corpus, a planted-topic corpus and
//! two small 2-D classification sets.

use std::collections::BTreeMap;

use chrono::{Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{RecordId, ReviewRecord};
use crate::features::FeatureId;
use crate::models::Dataset;

pub const APPS: [&str; 5] = ["PhotoSnap", "RideNow", "BudgetBook", "FitTrack", "ChatterBox"];

const CRASH_OPENERS: [&str; 6] = [
    "The app crashes every time I open the camera.",
    "It crashed twice today while I was uploading photos.",
    "Keeps crashing on startup since the last version.",
    "The app crashes when I rotate the screen.",
    "Crashes as soon as I try to log in.",
    "It crashed and I lost my whole draft.",
];

const CRASH_TAILS: [&str; 5] = [
    "Please look into it.",
    "Otherwise I really like it.",
    "My phone is a recent model.",
    "Really annoying.",
    "Still usable most days.",
];

const COMPLAINTS: [&str; 8] = [
    "Terrible experience, the new layout is confusing.",
    "Too many ads, I hate it.",
    "Worst update ever, everything is slow now.",
    "Useless since they changed the menu.",
    "Very disappointed with the subscription price.",
    "Awful design and the support never answers.",
    "Waste of money, the premium plan is a scam.",
    "I am frustrated, my settings keep resetting.",
];

const PRAISE: [&str; 10] = [
    "Great app, I use it every day.",
    "Nice design and very useful features.",
    "Love the new look, thanks to the team.",
    "Simple and clean, does exactly what I need.",
    "Excellent app, highly recommend it to friends.",
    "Works well for my daily routine.",
    "Pretty good overall, the widgets are handy.",
    "Best app in its category.",
    "Smooth experience and easy to set up.",
    "Decent app, does the job.",
];

const EXTRAS: [&str; 6] = [
    "Please add a dark mode.",
    "Would be nice to have more themes.",
    "I wish it had offline sync.",
    "My kids enjoy it too.",
    "Five stars from me.",
    "Keep up the good work.",
];

const RESPONSES: [&str; 4] = [
    "Thanks for reporting this, our team is looking into it.",
    "Sorry for the trouble, please contact support so we can help.",
    "We appreciate the feedback and are working on an update.",
    "Thank you, a fix is on the way in the next release.",
];

pub const CRASH_KEYWORDS: [&str; 4] = ["crash", "crashes", "crashed", "crashing"];

/// True iff the review mentions a crash keyword as a whole word.
pub fn mentions_crash(text: &str) -> bool {
    text.split(|c: char| !c.is_alphanumeric())
        .any(|w| CRASH_KEYWORDS.contains(&w.to_lowercase().as_str()))
}

/// Ground-truth rule behind [`review_fixture`]: respond iff rating <= 2 or a crash is mentioned.
pub fn fixture_rule(rating: u8, text: &str) -> bool {
    rating <= 2 || mentions_crash(text)
}

/// `n` reviews across [`APPS`]. A review gets a response iff
/// [`fixture_rule`] holds. Crash reports are answered within a day or two,
/// other responses after about six days.
pub fn review_fixture(n: usize, seed: u64) -> Vec<ReviewRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
    (0..n)
        .map(|i| {
            let kind = rng.gen_range(0..10);
            let (rating, text) = match kind {
                0..=2 => {
                    let t = format!(
                        "{} {}",
                        CRASH_OPENERS.choose(&mut rng).unwrap(),
                        CRASH_TAILS.choose(&mut rng).unwrap()
                    );
                    (rng.gen_range(1..=5), t)
                }
                3..=4 => {
                    let t = format!(
                        "{} {}",
                        COMPLAINTS.choose(&mut rng).unwrap(),
                        COMPLAINTS.choose(&mut rng).unwrap()
                    );
                    (rng.gen_range(1..=2), t)
                }
                _ => {
                    let mut t = PRAISE.choose(&mut rng).unwrap().to_string();
                    if rng.gen_bool(0.5) {
                        t.push(' ');
                        t.push_str(EXTRAS.choose(&mut rng).unwrap());
                    }
                    (rng.gen_range(3..=5), t)
                }
            };
            let review_time = start + Duration::minutes(rng.gen_range(0..(300 * 24 * 60)));
            let responded = fixture_rule(rating, &text);
            let (response_text, response_time) = if responded {
                let hours = if mentions_crash(&text) {
                    rng.gen_range(2..48)
                } else {
                    rng.gen_range(140..170)
                };
                (
                    Some(RESPONSES.choose(&mut rng).unwrap().to_string()),
                    Some(review_time + Duration::hours(hours)),
                )
            } else {
                (None, None)
            };
            ReviewRecord {
                record_id: RecordId(i as u64),
                app_name: APPS[rng.gen_range(0..APPS.len())].to_string(),
                review_text: text,
                rating,
                review_time,
                helpful_votes: rng.gen_range(0..25),
                response_text,
                response_time,
            }
        })
        .collect()
}

/// Documents drawn from a known mixture of topics with disjoint vocabularies.
#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub docs: Vec<Vec<String>>,
    /// True topic-word distributions.
    pub topics: Vec<BTreeMap<String, f64>>,
}

/// `n_docs` documents of `doc_len` tokens from `k` planted topics of
/// `words_per_topic` words each. Each document puts 80% of its mass on one
/// topic and spreads the rest evenly.
pub fn planted_topics(k: usize, words_per_topic: usize, n_docs: usize, doc_len: usize, seed: u64) -> PlantedCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let topics: Vec<BTreeMap<String, f64>> = (0..k)
        .map(|t| {
            let weights: Vec<f64> = (0..words_per_topic).map(|r| 1.0 / (r as f64 + 1.0)).collect();
            let z: f64 = weights.iter().sum();
            weights
                .iter()
                .enumerate()
                .map(|(r, w)| (format!("t{t}w{r:02}"), w / z))
                .collect()
        })
        .collect();
    let tables: Vec<Vec<(String, f64)>> = topics.iter().map(|t| t.iter().map(|(w, p)| (w.clone(), *p)).collect()).collect();
    let draw = |rng: &mut ChaCha8Rng, table: &[(String, f64)]| -> String {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (w, p) in table {
            acc += p;
            if u < acc {
                return w.clone();
            }
        }
        table.last().unwrap().0.clone()
    };
    let docs = (0..n_docs)
        .map(|d| {
            let dominant = d % k;
            (0..doc_len)
                .map(|_| {
                    let t = if k == 1 || rng.gen_bool(0.8) {
                        dominant
                    } else {
                        let other = rng.gen_range(0..k - 1);
                        if other >= dominant {
                            other + 1
                        } else {
                            other
                        }
                    };
                    draw(&mut rng, &tables[t])
                })
                .collect()
        })
        .collect();
    PlantedCorpus { docs, topics }
}

fn two_features() -> Vec<FeatureId> {
    vec![FeatureId::new(1).unwrap(), FeatureId::new(2).unwrap()]
}

fn in_disc(rng: &mut ChaCha8Rng, radius: f64) -> (f64, f64) {
    loop {
        let (x, y) = (rng.gen_range(-radius..radius), rng.gen_range(-radius..radius));
        if x * x + y * y <= radius * radius {
            return (x, y);
        }
    }
}

/// Two discs of radius 1.5 centred at (-2,-2) and (2,2): separable with a wide margin.
pub fn blobs(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let label: u8 = rng.gen_range(0..2);
        let c = if label == 1 { 2.0 } else { -2.0 };
        let (dx, dy) = in_disc(&mut rng, 1.5);
        x.push(vec![c + dx, c + dy]);
        y.push(label);
    }
    Dataset::new(two_features(), x, y).expect("finite by construction")
}

/// XOR of the coordinate signs on [-1,1]^2, leaving a gap of `margin` around
/// both axes, with `flip` of the labels inverted.
pub fn noisy_xor(n: usize, margin: f64, flip: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    while y.len() < n {
        let (a, b): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if a.abs() < margin || b.abs() < margin {
            continue;
        }
        let mut label = u8::from((a > 0.0) != (b > 0.0));
        if rng.gen_bool(flip) {
            label = 1 - label;
        }
        x.push(vec![a, b]);
        y.push(label);
    }
    Dataset::new(two_features(), x, y).expect("finite by construction")
}
