//! Bundled wordlists used by preprocessing and feature extraction.
//!
//! Every list ships inside the crate (see `lexicons/`) and can be replaced
//! file by file from a directory with the same file names. Feature values
//! are only reproducible against a fixed [`LEXICON_VERSION`].

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::preprocess::stem;

pub const LEXICON_VERSION: &str = "1";

const STOPWORDS: &str = include_str!("../lexicons/stopwords.txt");
const ENGLISH: &str = include_str!("../lexicons/english.txt");
const NEGATORS: &str = include_str!("../lexicons/negators.txt");
const SENTIMENT: &str = include_str!("../lexicons/sentiment.tsv");
const POS: &str = include_str!("../lexicons/pos.tsv");
const PURPOSE: &str = include_str!("../lexicons/purpose.tsv");
const ANGRY: &str = include_str!("../lexicons/angry.txt");
const SAD: &str = include_str!("../lexicons/sad.txt");
const ANXIOUS: &str = include_str!("../lexicons/anxious.txt");
const NEGATIVE: &str = include_str!("../lexicons/negative.txt");
const POSITIVE: &str = include_str!("../lexicons/positive.txt");
const COMMITMENT: &str = include_str!("../lexicons/commitment.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PosTag {
    Noun,
    Verb,
    Adjective,
    Adverb,
    Other,
}

impl std::str::FromStr for PosTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "noun" => PosTag::Noun,
            "verb" => PosTag::Verb,
            "adj" => PosTag::Adjective,
            "adv" => PosTag::Adverb,
            "other" => PosTag::Other,
            other => return Err(Error::malformed("POS tag", other)),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Purpose {
    Request,
    Defect,
    Question,
    Inform,
}

impl std::str::FromStr for Purpose {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "request" => Purpose::Request,
            "defect" => Purpose::Defect,
            "question" => Purpose::Question,
            "inform" => Purpose::Inform,
            other => return Err(Error::malformed("purpose category", other)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PurposePattern {
    /// Consecutive stems.
    Stems(Vec<String>),
    /// A literal character in the raw text.
    Char(char),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PurposeRule {
    pub category: Purpose,
    pub pattern: PurposePattern,
}

/// The five inclination lists plus commitment words, all stemmed.
#[derive(Debug, Clone, Default)]
pub struct CategoryLists {
    pub angry: HashSet<String>,
    pub sad: HashSet<String>,
    pub anxious: HashSet<String>,
    pub negative: HashSet<String>,
    pub positive: HashSet<String>,
    pub commitment: HashSet<String>,
}

impl CategoryLists {
    pub fn all(&self) -> [&HashSet<String>; 6] {
        [
            &self.angry,
            &self.sad,
            &self.anxious,
            &self.negative,
            &self.positive,
            &self.commitment,
        ]
    }

    pub fn contains_any(&self, stem: &str) -> bool {
        self.all().iter().any(|list| list.contains(stem))
    }
}

#[derive(Debug, Clone)]
pub struct Lexicons {
    pub stopwords: HashSet<String>,
    /// Top-frequency English words; stopwords are checked separately.
    pub english: HashSet<String>,
    pub negators: HashSet<String>,
    /// Surface token -> valence in [-1, 1].
    pub sentiment: HashMap<String, f64>,
    pub pos: HashMap<String, PosTag>,
    pub categories: CategoryLists,
    pub purpose: Vec<PurposeRule>,
}

fn lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}

fn word_set(text: &str) -> HashSet<String> {
    lines(text).map(str::to_lowercase).collect()
}

fn stem_set(text: &str) -> HashSet<String> {
    lines(text).map(|w| stem(&w.to_lowercase())).collect()
}

fn two_columns<'a>(text: &'a str, file: &str) -> Result<Vec<(&'a str, &'a str)>> {
    lines(text)
        .map(|l| {
            l.split_once('\t')
                .map(|(a, b)| (a.trim(), b.trim()))
                .ok_or_else(|| Error::malformed(file, format!("expected two tab-separated columns: `{l}`")))
        })
        .collect()
}

fn parse_sentiment(text: &str) -> Result<HashMap<String, f64>> {
    two_columns(text, "sentiment.tsv")?
        .into_iter()
        .map(|(token, v)| {
            let valence: f64 = v
                .parse()
                .map_err(|_| Error::malformed("sentiment.tsv", format!("bad valence `{v}`")))?;
            if !(-1.0..=1.0).contains(&valence) {
                return Err(Error::malformed("sentiment.tsv", format!("valence {valence} outside [-1, 1]")));
            }
            Ok((token.to_lowercase(), valence))
        })
        .collect()
}

fn parse_pos(text: &str) -> Result<HashMap<String, PosTag>> {
    let mut map = HashMap::new();
    for (token, tag) in two_columns(text, "pos.tsv")? {
        map.entry(token.to_lowercase()).or_insert(tag.parse()?);
    }
    Ok(map)
}

fn parse_purpose(text: &str) -> Result<Vec<PurposeRule>> {
    two_columns(text, "purpose.tsv")?
        .into_iter()
        .map(|(category, phrase)| {
            let pattern = match phrase {
                "?" => PurposePattern::Char('?'),
                _ => PurposePattern::Stems(phrase.split_whitespace().map(|w| stem(&w.to_lowercase())).collect()),
            };
            Ok(PurposeRule {
                category: category.parse()?,
                pattern,
            })
        })
        .collect()
}

impl Lexicons {
    pub fn bundled() -> Self {
        Self::from_sources(&Sources::default()).expect("bundled lexicons are well-formed")
    }

    /// Load lexicons from `dir`, falling back to the bundled copy for any file not present.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let read = |name: &str, fallback: &'static str| -> Result<String> {
            let path = dir.join(name);
            if path.exists() {
                fs::read_to_string(&path).map_err(|e| Error::io(path, e))
            } else {
                Ok(fallback.to_string())
            }
        };
        let owned = [
            read("stopwords.txt", STOPWORDS)?,
            read("english.txt", ENGLISH)?,
            read("negators.txt", NEGATORS)?,
            read("sentiment.tsv", SENTIMENT)?,
            read("pos.tsv", POS)?,
            read("purpose.tsv", PURPOSE)?,
            read("angry.txt", ANGRY)?,
            read("sad.txt", SAD)?,
            read("anxious.txt", ANXIOUS)?,
            read("negative.txt", NEGATIVE)?,
            read("positive.txt", POSITIVE)?,
            read("commitment.txt", COMMITMENT)?,
        ];
        let [stopwords, english, negators, sentiment, pos, purpose, angry, sad, anxious, negative, positive, commitment] =
            owned.each_ref().map(String::as_str);
        Self::from_sources(&Sources {
            stopwords,
            english,
            negators,
            sentiment,
            pos,
            purpose,
            angry,
            sad,
            anxious,
            negative,
            positive,
            commitment,
        })
    }

    fn from_sources(src: &Sources<'_>) -> Result<Self> {
        let categories = CategoryLists {
            angry: stem_set(src.angry),
            sad: stem_set(src.sad),
            anxious: stem_set(src.anxious),
            negative: stem_set(src.negative),
            positive: stem_set(src.positive),
            commitment: stem_set(src.commitment),
        };
        if categories.all().iter().any(|l| l.is_empty()) {
            return Err(Error::malformed("lexicons", "a category wordlist is empty"));
        }
        Ok(Lexicons {
            stopwords: word_set(src.stopwords),
            english: word_set(src.english),
            negators: word_set(src.negators),
            sentiment: parse_sentiment(src.sentiment)?,
            pos: parse_pos(src.pos)?,
            categories,
            purpose: parse_purpose(src.purpose)?,
        })
    }

    /// An empty lexicon set, handy for exercising fallback rules.
    pub fn empty() -> Self {
        Lexicons {
            stopwords: HashSet::new(),
            english: HashSet::new(),
            negators: HashSet::new(),
            sentiment: HashMap::new(),
            pos: HashMap::new(),
            categories: CategoryLists::default(),
            purpose: Vec::new(),
        }
    }

    pub fn is_english_word(&self, token: &str) -> bool {
        self.english.contains(token) || self.stopwords.contains(token)
    }
}

struct Sources<'a> {
    stopwords: &'a str,
    english: &'a str,
    negators: &'a str,
    sentiment: &'a str,
    pos: &'a str,
    purpose: &'a str,
    angry: &'a str,
    sad: &'a str,
    anxious: &'a str,
    negative: &'a str,
    positive: &'a str,
    commitment: &'a str,
}

impl Default for Sources<'static> {
    fn default() -> Self {
        Sources {
            stopwords: STOPWORDS,
            english: ENGLISH,
            negators: NEGATORS,
            sentiment: SENTIMENT,
            pos: POS,
            purpose: PURPOSE,
            angry: ANGRY,
            sad: SAD,
            anxious: ANXIOUS,
            negative: NEGATIVE,
            positive: POSITIVE,
            commitment: COMMITMENT,
        }
    }
}
