//! Per-review feature functions.
//!
//! Length, POS counts and sentiment work on surface tokens (before stopword
//! removal); readability and complexity on the raw text; wordlist counts on
//! stems of content tokens.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::lexicon::{Lexicons, PosTag, Purpose, PurposePattern};
use crate::preprocess::{split_sentences, stem, strip_punctuation, tokenize, PreprocessedReview};

const NEGATION_WINDOW: usize = 3;

pub fn f_length(pre: &PreprocessedReview) -> usize {
    pre.surface_len()
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Vowel-group syllable estimate: each run of `aeiouy` counts once, a trailing
/// silent `e` is dropped unless it is the only group or ends a consonant+`le`
/// cluster, and every word has at least one syllable.
pub fn syllables(word: &str) -> usize {
    let chars: Vec<char> = word.to_lowercase().chars().collect();
    let mut groups = 0;
    let mut prev_vowel = false;
    for &c in &chars {
        let v = is_vowel(c);
        if v && !prev_vowel {
            groups += 1;
        }
        prev_vowel = v;
    }
    let n = chars.len();
    if groups > 1 && n >= 2 && chars[n - 1] == 'e' && !is_vowel(chars[n - 2]) {
        let consonant_le = n >= 3 && chars[n - 2] == 'l' && !is_vowel(chars[n - 3]);
        if !consonant_le {
            groups -= 1;
        }
    }
    groups.max(1)
}

/// Word, sentence and syllable counts of raw text, as used by the readability formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TextCounts {
    pub words: usize,
    pub sentences: usize,
    pub syllables: usize,
    /// Words with three or more syllables.
    pub complex_words: usize,
}

pub fn text_counts(raw_text: &str) -> TextCounts {
    let mut counts = TextCounts {
        words: 0,
        sentences: 0,
        syllables: 0,
        complex_words: 0,
    };
    for sentence in split_sentences(raw_text) {
        let words = tokenize(&strip_punctuation(&sentence));
        if words.is_empty() {
            continue;
        }
        counts.sentences += 1;
        counts.words += words.len();
        for w in &words {
            let s = syllables(w);
            counts.syllables += s;
            if s >= 3 {
                counts.complex_words += 1;
            }
        }
    }
    counts
}

/// Flesch Reading Ease; 0 for text without words.
pub fn f_readability(raw_text: &str) -> f64 {
    let c = text_counts(raw_text);
    if c.words == 0 {
        return 0.0;
    }
    206.835 - 1.015 * (c.words as f64 / c.sentences as f64) - 84.6 * (c.syllables as f64 / c.words as f64)
}

/// Gunning Fog index; 0 for text without words.
pub fn f_complexity(raw_text: &str) -> f64 {
    let c = text_counts(raw_text);
    if c.words == 0 {
        return 0.0;
    }
    0.4 * (c.words as f64 / c.sentences as f64 + 100.0 * c.complex_words as f64 / c.words as f64)
}

fn suffix_tag(token: &str) -> PosTag {
    let n = token.chars().count();
    let has = |suffix: &str| n > suffix.len() + 1 && token.ends_with(suffix);
    if has("ly") {
        PosTag::Adverb
    } else if has("ing") || has("ed") {
        PosTag::Verb
    } else if has("ous") || has("ful") || has("ive") || has("able") || has("less") {
        PosTag::Adjective
    } else {
        PosTag::Noun
    }
}

/// Lexicon lookup, then: stopwords and numbers are `Other`, then suffix rules.
pub fn pos_tag(token: &str, lexicons: &Lexicons) -> PosTag {
    if let Some(tag) = lexicons.pos.get(token) {
        return *tag;
    }
    if lexicons.stopwords.contains(token) || token.chars().all(char::is_numeric) {
        return PosTag::Other;
    }
    suffix_tag(token)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PosCounts {
    pub nouns: usize,
    pub verbs: usize,
    pub adjectives: usize,
    pub adverbs: usize,
}

pub fn pos_counts<'a>(tokens: impl IntoIterator<Item = &'a str>, lexicons: &Lexicons) -> PosCounts {
    let mut c = PosCounts::default();
    for t in tokens {
        match pos_tag(t, lexicons) {
            PosTag::Noun => c.nouns += 1,
            PosTag::Verb => c.verbs += 1,
            PosTag::Adjective => c.adjectives += 1,
            PosTag::Adverb => c.adverbs += 1,
            PosTag::Other => {}
        }
    }
    c
}

pub fn f_pos_counts(pre: &PreprocessedReview, lexicons: &Lexicons) -> PosCounts {
    pos_counts(pre.surface_tokens(), lexicons)
}

/// Valences of sentiment-lexicon matches, sign-flipped when a negator occurs
/// among the previous three tokens of the same sentence.
pub fn sentiment_matches(pre: &PreprocessedReview, lexicons: &Lexicons) -> Vec<f64> {
    let mut out = Vec::new();
    for sentence in &pre.sentences {
        for (i, token) in sentence.iter().enumerate() {
            let Some(&valence) = lexicons.sentiment.get(token) else {
                continue;
            };
            let negated = sentence[i.saturating_sub(NEGATION_WINDOW)..i]
                .iter()
                .any(|t| lexicons.negators.contains(t));
            out.push(if negated { -valence } else { valence });
        }
    }
    out
}

/// Mean matched valence in [-1, 1]; 0 without matches.
pub fn f_sentiment(pre: &PreprocessedReview, lexicons: &Lexicons) -> f64 {
    let matches = sentiment_matches(pre, lexicons);
    if matches.is_empty() {
        0.0
    } else {
        matches.iter().sum::<f64>() / matches.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarityNeutrality {
    pub polarity: f64,
    pub neutrality: f64,
}

pub fn f_polarity_neutrality(pre: &PreprocessedReview, lexicons: &Lexicons) -> PolarityNeutrality {
    let matches = sentiment_matches(pre, lexicons);
    let positive = matches.iter().filter(|v| **v > 0.0).count() as f64;
    let negative = matches.iter().filter(|v| **v < 0.0).count() as f64;
    let matched = matches.len() as f64;
    PolarityNeutrality {
        polarity: (positive - negative) / matched.max(1.0),
        neutrality: 1.0 - matched / (pre.surface_len() as f64).max(1.0),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CategoryCounts {
    pub angry: usize,
    pub sad: usize,
    pub anxious: usize,
    pub negative: usize,
    pub positive: usize,
    pub commitment: usize,
}

pub fn f_category_counts(pre: &PreprocessedReview, lexicons: &Lexicons) -> CategoryCounts {
    let lists = &lexicons.categories;
    let count = |list: &HashSet<String>| pre.stems.iter().filter(|s| list.contains(s.as_str())).count();
    CategoryCounts {
        angry: count(&lists.angry),
        sad: count(&lists.sad),
        anxious: count(&lists.anxious),
        negative: count(&lists.negative),
        positive: count(&lists.positive),
        commitment: count(&lists.commitment),
    }
}

/// Document frequencies of stems over a training corpus.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IdfTable {
    pub n_docs: usize,
    pub df: BTreeMap<String, usize>,
}

impl IdfTable {
    pub fn fit<'a, I, D>(docs: I) -> Self
    where
        I: IntoIterator<Item = D>,
        D: IntoIterator<Item = &'a String>,
    {
        let mut table = IdfTable::default();
        for doc in docs {
            table.n_docs += 1;
            let unique: HashSet<&String> = doc.into_iter().collect();
            for s in unique {
                *table.df.entry(s.clone()).or_default() += 1;
            }
        }
        table
    }

    /// Smoothed inverse document frequency `ln((1 + N) / (1 + df)) + 1`.
    pub fn idf(&self, stem: &str) -> f64 {
        let df = self.df.get(stem).copied().unwrap_or(0) as f64;
        ((1.0 + self.n_docs as f64) / (1.0 + df)).ln() + 1.0
    }
}

/// Mean TF-IDF weight over the review's distinct stems.
pub fn f_informativeness(pre: &PreprocessedReview, idf: &IdfTable) -> f64 {
    if pre.stems.is_empty() {
        return 0.0;
    }
    let mut tf: BTreeMap<&str, usize> = BTreeMap::new();
    for s in &pre.stems {
        *tf.entry(s.as_str()).or_default() += 1;
    }
    let total = pre.stems.len() as f64;
    let sum: f64 = tf.iter().map(|(s, n)| *n as f64 / total * idf.idf(s)).sum();
    sum / tf.len() as f64
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PurposeFlags {
    pub feature_request: bool,
    pub problem_detection: bool,
    pub information_request: bool,
    pub informers: bool,
    pub other: bool,
}

fn contains_run(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

pub fn f_purpose(pre: &PreprocessedReview, lexicons: &Lexicons) -> PurposeFlags {
    let stems: Vec<String> = pre.surface_tokens().map(stem).collect();
    let fired = |category: Purpose| {
        lexicons
            .purpose
            .iter()
            .filter(|r| r.category == category)
            .any(|r| match &r.pattern {
                PurposePattern::Stems(run) => contains_run(&stems, run),
                PurposePattern::Char(c) => pre.original.contains(*c),
            })
    };
    let feature_request = fired(Purpose::Request);
    let problem_detection = fired(Purpose::Defect);
    let information_request = fired(Purpose::Question);
    let informers = !feature_request && !problem_detection && fired(Purpose::Inform);
    PurposeFlags {
        feature_request,
        problem_detection,
        information_request,
        informers,
        other: !(feature_request || problem_detection || information_request || informers),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::{preprocess, PreprocessOptions};

    fn pre(text: &str) -> PreprocessedReview {
        preprocess(text, &Lexicons::bundled(), &PreprocessOptions::default())
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn length() {
        assert_eq!(f_length(&pre("bad")), 1);
        assert_eq!(f_length(&pre("")), 0);
        assert_eq!(f_length(&pre("bad user interface, bad graphical design, the worst GUI.")), 9);
    }

    #[test]
    fn syllable_heuristic() {
        assert_eq!(syllables("the"), 1);
        assert_eq!(syllables("cat"), 1);
        assert_eq!(syllables("unbelievable"), 5);
        assert_eq!(syllables("make"), 1);
        assert_eq!(syllables("table"), 2);
        assert_eq!(syllables("rhythm"), 1);
        assert_eq!(syllables("42"), 1);
    }

    #[test]
    fn readability() {
        // 3 words, 1 sentence, 3 syllables
        assert!(close(f_readability("The cat sat."), 206.835 - 1.015 * 3.0 - 84.6, 0.01));
        assert!(close(f_readability("The cat sat."), 119.19, 0.01));
        assert_eq!(f_readability(""), 0.0);
        let ten = "The cat sat on the mat and then it ran.";
        assert!(close(f_readability(ten), 112.085, 1e-9));
    }

    #[test]
    fn complexity() {
        assert!(close(f_complexity("The cat sat."), 1.2, 1e-12));
        assert_eq!(f_complexity(""), 0.0);
        assert!(close(f_complexity("Unbelievable."), 40.4, 1e-12));
    }

    #[test]
    fn pos() {
        let lex = Lexicons::bundled();
        let c = pos_counts(["bad", "user", "interface"], &lex);
        assert_eq!(
            c,
            PosCounts {
                nouns: 2,
                verbs: 0,
                adjectives: 1,
                adverbs: 0
            }
        );
        assert_eq!(pos_counts([], &lex), PosCounts::default());
        let empty = Lexicons::empty();
        assert_eq!(pos_counts(["quickly"], &empty).adverbs, 1);
        assert_eq!(pos_counts(["loading"], &empty).verbs, 1);
        assert_eq!(pos_counts(["famous"], &empty).adjectives, 1);
        assert_eq!(pos_counts(["fly"], &empty).nouns, 1);
    }

    #[test]
    fn sentiment_and_negation() {
        let lex = Lexicons::bundled();
        assert_eq!(lex.sentiment["good"], 0.7);
        assert!(close(f_sentiment(&pre("good"), &lex), 0.7, 1e-12));
        assert!(close(f_sentiment(&pre("not good"), &lex), -0.7, 1e-12));
        assert!(close(f_sentiment(&pre("not really that good"), &lex), -0.7, 1e-12));
        assert!(close(f_sentiment(&pre("not a bit of it good"), &lex), 0.7, 1e-12));
        // negation does not cross sentence boundaries
        assert!(close(f_sentiment(&pre("Not bad. Good"), &lex), (0.7 + 0.7) / 2.0, 1e-12));
        assert_eq!(f_sentiment(&pre("the the the"), &lex), 0.0);
    }

    #[test]
    fn polarity_and_neutrality() {
        let lex = Lexicons::bundled();
        let p = f_polarity_neutrality(&pre("good good bad"), &lex);
        assert!(close(p.polarity, 1.0 / 3.0, 1e-12));
        assert_eq!(p.neutrality, 0.0);
        let none = f_polarity_neutrality(&pre("the phone"), &lex);
        assert_eq!((none.polarity, none.neutrality), (0.0, 1.0));
        let bad = f_polarity_neutrality(&pre("bad"), &lex);
        assert_eq!((bad.polarity, bad.neutrality), (-1.0, 0.0));
    }

    #[test]
    fn categories() {
        let lex = Lexicons::bundled();
        let c = f_category_counts(&pre("i hate this, it must change"), &lex);
        assert!(c.angry >= 1);
        assert!(c.commitment >= 1);
        assert_eq!(f_category_counts(&pre(""), &lex), CategoryCounts::default());
        assert_eq!(f_category_counts(&pre("hate hate hate"), &lex).angry, 3);
    }

    #[test]
    fn informativeness_single_universal_stem() {
        let docs = vec![vec!["app".to_string()], vec!["app".to_string(), "crash".to_string()]];
        let idf = IdfTable::fit(&docs);
        assert_eq!(idf.idf("app"), 1.0);
        assert!(close(f_informativeness(&pre("app"), &idf), 1.0, 1e-12));
        assert_eq!(f_informativeness(&pre(""), &idf), 0.0);
    }

    #[test]
    fn informativeness_two_doc_corpus() {
        // Brute force: tf = 1/2 for both stems; idf(app) = ln(3/3) + 1, idf(crash) = ln(3/2) + 1.
        let docs = vec![vec!["app".to_string(), "crash".to_string()], vec!["app".to_string()]];
        let idf = IdfTable::fit(&docs);
        let expected = (0.5 * 1.0 + 0.5 * ((3.0f64 / 2.0).ln() + 1.0)) / 2.0;
        assert!(close(f_informativeness(&pre("app crash"), &idf), expected, 1e-12));
        assert!(close(expected, 0.601_366_277_027_041_7, 1e-15));
        // unseen stems use df = 0
        assert!(close(idf.idf("zebra"), 3.0f64.ln() + 1.0, 1e-15));
    }

    #[test]
    fn purposes() {
        let lex = Lexicons::bundled();
        let f = f_purpose(&pre("please add dark mode"), &lex);
        assert!(f.feature_request && !f.other);
        let f = f_purpose(&pre("app crashes on startup"), &lex);
        assert!(f.problem_detection && !f.other);
        let f = f_purpose(&pre("How do I export"), &lex);
        assert!(f.information_request);
        assert!(f_purpose(&pre("export to pdf?"), &lex).information_request);
        let f = f_purpose(&pre("I love it, great app"), &lex);
        assert!(f.informers && !f.other);
        let f = f_purpose(&pre("love it but it crashes"), &lex);
        assert!(f.problem_detection && !f.informers);
        let f = f_purpose(&pre("the weather today"), &lex);
        assert_eq!(
            f,
            PurposeFlags {
                other: true,
                ..PurposeFlags::default()
            }
        );
    }
}
