//! Latent Dirichlet allocation fitted by collapsed Gibbs sampling.
//!
//! Sampling is sequential and driven by a single seeded ChaCha stream, so a
//! fit is bit-identical for a given corpus, configuration and seed.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_TOPICS: usize = 10;
pub const DEFAULT_ITERATIONS: usize = 500;
pub const DEFAULT_INFERENCE_SWEEPS: usize = 100;
pub const DEFAULT_BETA: f64 = 0.01;
pub const DEFAULT_MIN_DF: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub k: usize,
    /// Symmetric document-topic prior; `None` means `50 / k`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    /// Tokens appearing in fewer documents are pruned from the vocabulary.
    pub min_df: usize,
    pub seed: u64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            k: DEFAULT_TOPICS,
            alpha: None,
            beta: DEFAULT_BETA,
            iterations: DEFAULT_ITERATIONS,
            min_df: DEFAULT_MIN_DF,
            seed: 0,
        }
    }
}

impl LdaConfig {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.k as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub format_version: u32,
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub iterations: usize,
    /// Vocabulary in index order.
    pub vocabulary: Vec<String>,
    /// `k x V` token-topic assignment counts after the last sweep.
    pub topic_word_counts: Vec<Vec<u32>>,
    pub topic_totals: Vec<u64>,
}

/// Per-sweep training trace.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitTrace {
    /// Joint log-likelihood `log p(w, z)` after each sweep.
    pub log_likelihood: Vec<f64>,
    /// Total assigned tokens after each sweep.
    pub token_totals: Vec<u64>,
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos approximation, g = 7, n = 9.
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + 7.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

struct Sampler {
    k: usize,
    vocab_size: usize,
    alpha: f64,
    beta: f64,
    docs: Vec<Vec<usize>>,
    assignments: Vec<Vec<usize>>,
    doc_topic: Vec<Vec<u32>>,
    topic_word: Vec<Vec<u32>>,
    topic_totals: Vec<u64>,
    weights: Vec<f64>,
}

impl Sampler {
    fn sweep(&mut self, rng: &mut ChaCha8Rng) {
        let v_beta = self.vocab_size as f64 * self.beta;
        for d in 0..self.docs.len() {
            for i in 0..self.docs[d].len() {
                let w = self.docs[d][i];
                let old = self.assignments[d][i];
                self.doc_topic[d][old] -= 1;
                self.topic_word[old][w] -= 1;
                self.topic_totals[old] -= 1;

                let mut total = 0.0;
                for t in 0..self.k {
                    let p = (f64::from(self.doc_topic[d][t]) + self.alpha)
                        * (f64::from(self.topic_word[t][w]) + self.beta)
                        / (self.topic_totals[t] as f64 + v_beta);
                    total += p;
                    self.weights[t] = total;
                }
                let u = rng.gen::<f64>() * total;
                let new = self.weights.iter().position(|&c| u < c).unwrap_or(self.k - 1);

                self.assignments[d][i] = new;
                self.doc_topic[d][new] += 1;
                self.topic_word[new][w] += 1;
                self.topic_totals[new] += 1;
            }
        }
    }

    fn log_likelihood(&self) -> f64 {
        let v = self.vocab_size as f64;
        let k = self.k as f64;
        let mut ll = 0.0;
        for t in 0..self.k {
            ll += ln_gamma(v * self.beta) - ln_gamma(self.topic_totals[t] as f64 + v * self.beta);
            for &n in &self.topic_word[t] {
                if n > 0 {
                    ll += ln_gamma(f64::from(n) + self.beta) - ln_gamma(self.beta);
                }
            }
        }
        for (d, doc) in self.docs.iter().enumerate() {
            ll += ln_gamma(k * self.alpha) - ln_gamma(doc.len() as f64 + k * self.alpha);
            for &n in &self.doc_topic[d] {
                if n > 0 {
                    ll += ln_gamma(f64::from(n) + self.alpha) - ln_gamma(self.alpha);
                }
            }
        }
        ll
    }
}

/// Fit LDA on stemmed documents.
pub fn fit_lda(docs: &[Vec<String>], config: &LdaConfig) -> Result<TopicModel> {
    fit_lda_traced(docs, config).map(|(model, _)| model)
}

pub fn fit_lda_traced(docs: &[Vec<String>], config: &LdaConfig) -> Result<(TopicModel, FitTrace)> {
    if config.k == 0 {
        return Err(Error::Config("LDA needs at least one topic".into()));
    }
    if config.beta <= 0.0 || config.alpha() <= 0.0 {
        return Err(Error::Config("LDA priors must be positive".into()));
    }
    let docs: Vec<&Vec<String>> = docs.iter().filter(|d| !d.is_empty()).collect();
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in &docs {
        let unique: BTreeSet<&str> = doc.iter().map(String::as_str).collect();
        for w in unique {
            *df.entry(w).or_default() += 1;
        }
    }
    let vocabulary: Vec<String> = df
        .iter()
        .filter(|(_, n)| **n >= config.min_df)
        .map(|(w, _)| w.to_string())
        .collect();
    if vocabulary.is_empty() {
        return Err(Error::DegenerateVocabulary { min_df: config.min_df });
    }
    let index: BTreeMap<&str, usize> = vocabulary
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_str(), i))
        .collect();
    let encoded: Vec<Vec<usize>> = docs
        .iter()
        .map(|d| d.iter().filter_map(|w| index.get(w.as_str()).copied()).collect::<Vec<_>>())
        .filter(|d| !d.is_empty())
        .collect();
    if encoded.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let k = config.k;
    let v = vocabulary.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut sampler = Sampler {
        k,
        vocab_size: v,
        alpha: config.alpha(),
        beta: config.beta,
        assignments: Vec::with_capacity(encoded.len()),
        doc_topic: vec![vec![0; k]; encoded.len()],
        topic_word: vec![vec![0; v]; k],
        topic_totals: vec![0; k],
        weights: vec![0.0; k],
        docs: encoded,
    };
    for (d, doc) in sampler.docs.iter().enumerate() {
        let mut z = Vec::with_capacity(doc.len());
        for &w in doc {
            let t = rng.gen_range(0..k);
            z.push(t);
            sampler.doc_topic[d][t] += 1;
            sampler.topic_word[t][w] += 1;
            sampler.topic_totals[t] += 1;
        }
        sampler.assignments.push(z);
    }

    let mut trace = FitTrace::default();
    for _ in 0..config.iterations {
        sampler.sweep(&mut rng);
        trace.log_likelihood.push(sampler.log_likelihood());
        trace.token_totals.push(sampler.topic_totals.iter().sum());
    }

    let model = TopicModel {
        format_version: MODEL_FORMAT_VERSION,
        k,
        alpha: sampler.alpha,
        beta: sampler.beta,
        seed: config.seed,
        iterations: config.iterations,
        vocabulary,
        topic_word_counts: sampler.topic_word,
        topic_totals: sampler.topic_totals,
    };
    Ok((model, trace))
}

impl TopicModel {
    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn word_index(&self, word: &str) -> Option<usize> {
        self.vocabulary.binary_search_by(|w| w.as_str().cmp(word)).ok()
    }

    /// Smoothed topic-word distributions, `k x V`, rows summing to one.
    pub fn topic_word_distributions(&self) -> Vec<Vec<f64>> {
        let v_beta = self.vocab_size() as f64 * self.beta;
        self.topic_word_counts
            .iter()
            .zip(&self.topic_totals)
            .map(|(row, total)| {
                let denom = *total as f64 + v_beta;
                row.iter().map(|&n| (f64::from(n) + self.beta) / denom).collect()
            })
            .collect()
    }

    /// Top `n` words per topic by count, ties broken alphabetically.
    pub fn top_words(&self, n: usize) -> Vec<Vec<(String, f64)>> {
        let dists = self.topic_word_distributions();
        dists
            .iter()
            .map(|row| {
                let mut idx: Vec<usize> = (0..row.len()).collect();
                idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
                idx.into_iter()
                    .take(n)
                    .map(|i| (self.vocabulary[i].clone(), row[i]))
                    .collect()
            })
            .collect()
    }

    /// Fold-in Gibbs sampling with topic-word counts held fixed. Returns the
    /// smoothed proportions `(n_k + alpha) / (n + k * alpha)`; documents with
    /// no in-vocabulary tokens get the uniform distribution.
    pub fn infer(&self, doc: &[String], sweeps: usize, seed: u64) -> Vec<f64> {
        let words: Vec<usize> = doc.iter().filter_map(|w| self.word_index(w)).collect();
        let k = self.k;
        let mut counts = vec![0u32; k];
        if !words.is_empty() {
            let phi = self.topic_word_distributions();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut z: Vec<usize> = words.iter().map(|_| rng.gen_range(0..k)).collect();
            for &t in &z {
                counts[t] += 1;
            }
            let mut weights = vec![0.0; k];
            for _ in 0..sweeps {
                for (i, &w) in words.iter().enumerate() {
                    counts[z[i]] -= 1;
                    let mut total = 0.0;
                    for t in 0..k {
                        total += (f64::from(counts[t]) + self.alpha) * phi[t][w];
                        weights[t] = total;
                    }
                    let u = rng.gen::<f64>() * total;
                    let new = weights.iter().position(|&c| u < c).unwrap_or(k - 1);
                    z[i] = new;
                    counts[new] += 1;
                }
            }
        }
        let denom = words.len() as f64 + k as f64 * self.alpha;
        counts
            .iter()
            .map(|&n| (f64::from(n) + self.alpha) / denom)
            .collect()
    }

    /// Per-token perplexity of held-out documents under fold-in inference.
    pub fn perplexity(&self, docs: &[Vec<String>], sweeps: usize, seed: u64) -> f64 {
        let phi = self.topic_word_distributions();
        let mut log_sum = 0.0;
        let mut n = 0usize;
        for (d, doc) in docs.iter().enumerate() {
            let theta = self.infer(doc, sweeps, seed.wrapping_add(d as u64));
            for w in doc.iter().filter_map(|w| self.word_index(w)) {
                let p: f64 = (0..self.k).map(|t| theta[t] * phi[t][w]).sum();
                log_sum += p.ln();
                n += 1;
            }
        }
        if n == 0 {
            f64::NAN
        } else {
            (-log_sum / n as f64).exp()
        }
    }

    pub fn check_version(&self) -> Result<()> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                what: "topic model",
                found: self.format_version,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    fn small_corpus() -> Vec<Vec<String>> {
        vec![
            doc(&["crash", "bug", "crash", "freez"]),
            doc(&["crash", "bug", "error"]),
            doc(&["love", "great", "design"]),
            doc(&["great", "love", "love", "design"]),
            doc(&[]),
            doc(&["bug", "error", "great"]),
        ]
    }

    #[test]
    fn ln_gamma_matches_factorials() {
        for (n, fact) in [(1.0, 1.0f64), (2.0, 1.0), (5.0, 24.0), (10.0, 362_880.0)] {
            assert!((ln_gamma(n) - fact.ln()).abs() < 1e-10);
        }
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-10);
    }

    #[test]
    fn single_topic_is_forced() {
        let cfg = LdaConfig {
            k: 1,
            iterations: 20,
            ..LdaConfig::default()
        };
        let model = fit_lda(&small_corpus(), &cfg).unwrap();
        for d in small_corpus() {
            assert_eq!(model.infer(&d, 10, 1), vec![1.0]);
        }
    }

    #[test]
    fn errors() {
        let cfg = LdaConfig::default();
        assert!(matches!(fit_lda(&[], &cfg), Err(Error::EmptyCorpus)));
        assert!(matches!(fit_lda(&[doc(&[])], &cfg), Err(Error::EmptyCorpus)));
        assert!(matches!(
            fit_lda(&[doc(&["a"]), doc(&["b"])], &cfg),
            Err(Error::DegenerateVocabulary { min_df: 2 })
        ));
    }

    #[test]
    fn vocabulary_pruned_by_min_df() {
        let cfg = LdaConfig {
            k: 2,
            iterations: 5,
            ..LdaConfig::default()
        };
        let model = fit_lda(&small_corpus(), &cfg).unwrap();
        assert_eq!(model.vocabulary, doc(&["bug", "crash", "design", "error", "great", "love"]));
    }

    #[test]
    fn counts_are_conserved_and_rows_normalized() {
        let cfg = LdaConfig {
            k: 3,
            iterations: 30,
            seed: 4,
            ..LdaConfig::default()
        };
        let (model, trace) = fit_lda_traced(&small_corpus(), &cfg).unwrap();
        let in_vocab = 16;
        assert!(trace.token_totals.iter().all(|&n| n == in_vocab));
        let row_sums: u64 = model.topic_word_counts.iter().flatten().map(|&n| u64::from(n)).sum();
        assert_eq!(row_sums, in_vocab);
        for row in model.topic_word_distributions() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|p| *p >= 0.0));
        }
    }

    #[test]
    fn inference() {
        let cfg = LdaConfig {
            k: 10,
            iterations: 10,
            ..LdaConfig::default()
        };
        let model = fit_lda(&small_corpus(), &cfg).unwrap();
        assert_eq!(model.infer(&[], 100, 0), vec![0.1; 10]);
        assert_eq!(model.infer(&doc(&["unknown"]), 100, 0), vec![0.1; 10]);
        let theta = model.infer(&doc(&["crash", "bug"]), 100, 3);
        assert!((theta.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(theta, model.infer(&doc(&["crash", "bug"]), 100, 3));
    }

    #[test]
    fn serialization_round_trip() {
        let cfg = LdaConfig {
            k: 2,
            iterations: 5,
            ..LdaConfig::default()
        };
        let model = fit_lda(&small_corpus(), &cfg).unwrap();
        let json = serde_json::to_string(&model).unwrap();
        let back: TopicModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, model);
        back.check_version().unwrap();
    }
}
