//! Character, word, sentence and review level text cleanup.
//!
//! The pipeline is `split_sentences -> strip_punctuation -> tokenize ->
//! remove_stopwords_and_short -> stem`, with language detection over the
//! surface tokens. Apostrophes are punctuation, so `it's` becomes `it s`.

mod porter;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::lexicon::Lexicons;

pub use porter::stem;

pub const DEFAULT_ENGLISH_THRESHOLD: f64 = 0.30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreprocessOptions {
    /// Replace out-of-lexicon tokens by their unique edit-distance-1 neighbour.
    pub spell_check: bool,
    /// Minimum fraction of known English tokens; 0 disables the filter.
    pub english_threshold: f64,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        PreprocessOptions {
            spell_check: false,
            english_threshold: DEFAULT_ENGLISH_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessedReview {
    pub original: String,
    /// Lowercased, punctuation-free surface tokens per sentence.
    pub sentences: Vec<Vec<String>>,
    pub content_tokens: Vec<String>,
    /// `stem(t)` for each content token, index-aligned.
    pub stems: Vec<String>,
    pub is_english: bool,
}

impl PreprocessedReview {
    pub fn surface_tokens(&self) -> impl Iterator<Item = &str> {
        self.sentences.iter().flatten().map(String::as_str)
    }

    pub fn surface_len(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }
}

/// Replace every character that is neither a letter/digit nor whitespace by a
/// space, then collapse whitespace runs and trim.
pub fn strip_punctuation(text: &str) -> String {
    let replaced: String = text
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    replaced.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Split raw text at runs of `.`, `!` or `?` that are followed by whitespace
/// or the end of the text. Terminators are removed and empty segments dropped.
pub fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut current = String::new();
    let mut i = 0;
    while i < chars.len() {
        if is_terminator(chars[i]) {
            let run_start = i;
            while i < chars.len() && is_terminator(chars[i]) {
                i += 1;
            }
            if i == chars.len() || chars[i].is_whitespace() {
                let segment = current.trim();
                if !segment.is_empty() {
                    out.push(segment.to_string());
                }
                current.clear();
            } else {
                current.extend(&chars[run_start..i]);
            }
            continue;
        }
        current.push(chars[i]);
        i += 1;
    }
    let segment = current.trim();
    if !segment.is_empty() {
        out.push(segment.to_string());
    }
    out
}

/// Whitespace split plus lowercasing. Characters that lowercasing leaves
/// uppercase or turns into combining marks are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| {
            t.to_lowercase()
                .chars()
                .filter(|c| c.is_alphanumeric() && !c.is_uppercase())
                .collect::<String>()
        })
        .filter(|t| !t.is_empty())
        .collect()
}

pub fn remove_stopwords_and_short(tokens: &[String], stopwords: &HashSet<String>) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| t.chars().count() > 1 && !stopwords.contains(t.as_str()))
        .cloned()
        .collect()
}

/// True when at least 30% (by default) of the tokens are known English words.
/// Reviews with fewer than two tokens are assumed English.
pub fn detect_english(tokens: &[String], lexicons: &Lexicons, threshold: f64) -> bool {
    if tokens.len() < 2 {
        return true;
    }
    let known = tokens.iter().filter(|t| lexicons.is_english_word(t)).count();
    known as f64 / tokens.len() as f64 >= threshold
}

/// Unique in-lexicon token at edit distance one, if the token itself is unknown.
pub fn spell_correct(token: &str, lexicons: &Lexicons) -> Option<String> {
    if lexicons.is_english_word(token) || token.chars().any(|c| c.is_numeric()) {
        return None;
    }
    let chars: Vec<char> = token.chars().collect();
    let mut found: Option<String> = None;
    let mut consider = |candidate: String| -> bool {
        if lexicons.is_english_word(&candidate) {
            match &found {
                Some(prev) if *prev != candidate => return false,
                _ => found = Some(candidate),
            }
        }
        true
    };
    let alphabet = 'a'..='z';
    for i in 0..chars.len() {
        let deleted: String = chars[..i].iter().chain(&chars[i + 1..]).collect();
        if !consider(deleted) {
            return None;
        }
        for c in alphabet.clone() {
            if c != chars[i] {
                let mut replaced = chars.clone();
                replaced[i] = c;
                if !consider(replaced.into_iter().collect()) {
                    return None;
                }
            }
        }
    }
    for i in 0..=chars.len() {
        for c in alphabet.clone() {
            let mut inserted = chars.clone();
            inserted.insert(i, c);
            if !consider(inserted.into_iter().collect()) {
                return None;
            }
        }
    }
    for i in 0..chars.len().saturating_sub(1) {
        if chars[i] != chars[i + 1] {
            let mut swapped = chars.clone();
            swapped.swap(i, i + 1);
            if !consider(swapped.into_iter().collect()) {
                return None;
            }
        }
    }
    found
}

pub fn preprocess(text: &str, lexicons: &Lexicons, options: &PreprocessOptions) -> PreprocessedReview {
    let sentences: Vec<Vec<String>> = split_sentences(text)
        .iter()
        .map(|s| {
            let tokens = tokenize(&strip_punctuation(s));
            if options.spell_check {
                tokens
                    .into_iter()
                    .map(|t| spell_correct(&t, lexicons).unwrap_or(t))
                    .collect()
            } else {
                tokens
            }
        })
        .filter(|tokens: &Vec<String>| !tokens.is_empty())
        .collect();
    let surface: Vec<String> = sentences.iter().flatten().cloned().collect();
    let content_tokens = remove_stopwords_and_short(&surface, &lexicons.stopwords);
    let stems = content_tokens.iter().map(|t| stem(t)).collect();
    let is_english = options.english_threshold <= 0.0
        || detect_english(&surface, lexicons, options.english_threshold);
    PreprocessedReview {
        original: text.to_string(),
        sentences,
        content_tokens,
        stems,
        is_english,
    }
}
