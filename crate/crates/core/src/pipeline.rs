//! End-to-end plumbing: labeling, preprocessing, fold-local featurization,
//! cross-validation and ranking.

use std::cmp::Ordering;
use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    drop_updated_reviews, label_response_presence, label_response_urgency, Approach, LabeledExample, RecordId,
    ReviewRecord, SkipReason,
};
use crate::error::{Error, Result};
use crate::eval::{cross_validate, kfold_split, EvalReport, FoldTables};
use crate::features::{approach_features, featurize, FeatureContext, FeatureTable, FeatureVector, IdfTable};
use crate::lexicon::Lexicons;
use crate::models::{TrainConfig, TrainedModel};
use crate::preprocess::{preprocess, PreprocessOptions, PreprocessedReview};
use crate::select::{select_features, SelectionConfig};
use crate::topics::{fit_lda, LdaConfig, TopicModel, DEFAULT_INFERENCE_SWEEPS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeaturizeConfig {
    pub preprocess: PreprocessOptions,
    pub lda: LdaConfig,
    pub inference_sweeps: usize,
}

impl Default for FeaturizeConfig {
    fn default() -> Self {
        FeaturizeConfig {
            preprocess: PreprocessOptions::default(),
            lda: LdaConfig::default(),
            inference_sweeps: DEFAULT_INFERENCE_SWEEPS,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Labeling {
    pub examples: Vec<LabeledExample>,
    pub dropped_updated: usize,
    pub skipped: Vec<(RecordId, SkipReason)>,
}

/// Apply one labeling approach. Urgency labeling drops updated reviews first.
pub fn label(records: &[ReviewRecord], approach: Approach, threshold_days: f64) -> Labeling {
    match approach {
        Approach::ResponsePresence => Labeling {
            examples: label_response_presence(records),
            ..Labeling::default()
        },
        Approach::ResponseUrgency => {
            let (kept, dropped_updated) = drop_updated_reviews(records);
            let out = label_response_urgency(&kept, threshold_days);
            Labeling {
                examples: out.examples,
                dropped_updated,
                skipped: out.skipped,
            }
        }
    }
}

/// Labeled reviews with their preprocessed text, in label order.
#[derive(Debug, Clone)]
pub struct LabeledCorpus {
    pub approach: Approach,
    pub records: Vec<ReviewRecord>,
    pub reviews: Vec<PreprocessedReview>,
    pub labels: Vec<u8>,
    /// Labeled reviews removed by the language filter.
    pub non_english: Vec<RecordId>,
}

impl LabeledCorpus {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Join labels to records, preprocess, and drop non-English reviews.
pub fn prepare(
    records: &[ReviewRecord],
    examples: &[LabeledExample],
    lexicons: &Lexicons,
    options: &PreprocessOptions,
) -> Result<LabeledCorpus> {
    let approach = examples.first().map_or(Approach::ResponsePresence, |e| e.approach);
    let by_id: HashMap<RecordId, &ReviewRecord> = records.iter().map(|r| (r.record_id, r)).collect();
    let joined = examples
        .iter()
        .map(|e| {
            by_id
                .get(&e.record_id)
                .map(|r| (*r, e.label))
                .ok_or_else(|| Error::malformed("labels", format!("record {} is not in the dataset", e.record_id)))
        })
        .collect::<Result<Vec<_>>>()?;
    let processed: Vec<PreprocessedReview> = joined
        .par_iter()
        .map(|(r, _)| preprocess(&r.review_text, lexicons, options))
        .collect();
    let mut corpus = LabeledCorpus {
        approach,
        records: Vec::new(),
        reviews: Vec::new(),
        labels: Vec::new(),
        non_english: Vec::new(),
    };
    for ((record, label), pre) in joined.into_iter().zip(processed) {
        if pre.is_english {
            corpus.records.push(record.clone());
            corpus.reviews.push(pre);
            corpus.labels.push(label);
        } else {
            corpus.non_english.push(record.record_id);
        }
    }
    Ok(corpus)
}

/// Corpus-level state fitted on training reviews: the IDF table and the topic model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Featurizer {
    pub idf: IdfTable,
    pub topics: TopicModel,
    pub inference_sweeps: usize,
}

impl Featurizer {
    pub fn fit<'a>(reviews: impl IntoIterator<Item = &'a PreprocessedReview> + Clone, config: &FeaturizeConfig) -> Result<Self> {
        let idf = IdfTable::fit(reviews.clone().into_iter().map(|r| r.stems.iter()));
        let docs: Vec<Vec<String>> = reviews.into_iter().map(|r| r.stems.clone()).collect();
        let topics = fit_lda(&docs, &config.lda)?;
        Ok(Featurizer {
            idf,
            topics,
            inference_sweeps: config.inference_sweeps,
        })
    }

    /// Topic inference for a review is seeded from the model seed and record id,
    /// so a review gets the same distribution whichever batch it is scored in.
    pub fn transform(&self, record: &ReviewRecord, pre: &PreprocessedReview, lexicons: &Lexicons) -> Result<FeatureVector> {
        let seed = self.topics.seed ^ record.record_id.0.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let theta = self.topics.infer(&pre.stems, self.inference_sweeps, seed);
        let ctx = FeatureContext { lexicons, idf: &self.idf };
        featurize(record, pre, &theta, &ctx)
    }

    pub fn table(&self, corpus: &LabeledCorpus, indices: &[usize], lexicons: &Lexicons) -> Result<FeatureTable> {
        let rows = indices
            .par_iter()
            .map(|&i| self.transform(&corpus.records[i], &corpus.reviews[i], lexicons))
            .collect::<Result<Vec<_>>>()?;
        Ok(FeatureTable {
            rows,
            labels: indices.iter().map(|&i| corpus.labels[i]).collect(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub k: usize,
    pub seed: u64,
    /// Featurize and select once on the whole corpus before splitting.
    pub paper_mode: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            k: 5,
            seed: 0,
            paper_mode: false,
        }
    }
}

/// Featurized folds, plus the whole-corpus selection when selection runs before splitting.
pub struct PreparedFolds {
    pub folds: Vec<FoldTables>,
    pub fixed_selection: Option<Vec<crate::features::FeatureId>>,
}

pub fn prepare_folds(
    corpus: &LabeledCorpus,
    lexicons: &Lexicons,
    featurize_config: &FeaturizeConfig,
    selection: &SelectionConfig,
    cv: &CvConfig,
) -> Result<PreparedFolds> {
    let splits = kfold_split(corpus.len(), cv.k, cv.seed)?;
    if cv.paper_mode {
        let all: Vec<usize> = (0..corpus.len()).collect();
        let featurizer = Featurizer::fit(corpus.reviews.iter(), featurize_config)?;
        let table = featurizer.table(corpus, &all, lexicons)?;
        let kept = select_features(&table, &approach_features(corpus.approach), selection)?.kept;
        let folds = splits
            .iter()
            .map(|test| {
                let train: Vec<usize> = complement(corpus.len(), test);
                FoldTables {
                    train: table.subset(&train),
                    test: table.subset(test),
                }
            })
            .collect();
        return Ok(PreparedFolds {
            folds,
            fixed_selection: Some(kept),
        });
    }
    let folds = splits
        .iter()
        .map(|test| {
            let train = complement(corpus.len(), test);
            let featurizer = Featurizer::fit(train.iter().map(|&i| &corpus.reviews[i]), featurize_config)?;
            Ok(FoldTables {
                train: featurizer.table(corpus, &train, lexicons)?,
                test: featurizer.table(corpus, test, lexicons)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PreparedFolds {
        folds,
        fixed_selection: None,
    })
}

fn complement(n: usize, test: &[usize]) -> Vec<usize> {
    let mut in_test = vec![false; n];
    for &i in test {
        in_test[i] = true;
    }
    (0..n).filter(|&i| !in_test[i]).collect()
}

pub fn evaluate(
    prepared: &PreparedFolds,
    approach: Approach,
    selection: &SelectionConfig,
    train: &TrainConfig,
) -> Result<EvalReport> {
    cross_validate(
        &prepared.folds,
        approach,
        &approach_features(approach),
        selection,
        prepared.fixed_selection.as_deref(),
        train,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedReview {
    pub record_id: RecordId,
    pub app_name: String,
    pub score: f64,
    pub label_pred: u8,
    pub rating: u8,
    pub helpful_votes: u64,
    pub review_time: chrono::DateTime<chrono::Utc>,
    pub review_excerpt: String,
}

pub const EXCERPT_CHARS: usize = 80;

fn excerpt(text: &str) -> String {
    let flat: String = text.split_whitespace().collect::<Vec<_>>().join(" ");
    if flat.chars().count() <= EXCERPT_CHARS {
        flat
    } else {
        flat.chars().take(EXCERPT_CHARS - 3).collect::<String>() + "..."
    }
}

/// Order by score descending, then helpful votes descending, then most recent
/// first; record id ascending makes the order total.
pub fn rank_order(a: &RankedReview, b: &RankedReview) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(b.helpful_votes.cmp(&a.helpful_votes))
        .then(b.review_time.cmp(&a.review_time))
        .then(a.record_id.cmp(&b.record_id))
}

/// Score every review with the model and return them in queue order.
pub fn rank(
    records: &[ReviewRecord],
    vectors: &[FeatureVector],
    model: &TrainedModel,
) -> Result<Vec<RankedReview>> {
    let by_id: HashMap<RecordId, &ReviewRecord> = records.iter().map(|r| (r.record_id, r)).collect();
    let mut out = vectors
        .iter()
        .map(|v| {
            let r = by_id
                .get(&v.record_id)
                .ok_or_else(|| Error::malformed("feature matrix", format!("record {} is not in the dataset", v.record_id)))?;
            let p = model.predict(v)?;
            Ok(RankedReview {
                record_id: r.record_id,
                app_name: r.app_name.clone(),
                score: p.score,
                label_pred: p.label,
                rating: r.rating,
                helpful_votes: r.helpful_votes,
                review_time: r.review_time,
                review_excerpt: excerpt(&r.review_text),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(rank_order);
    Ok(out)
}

/// `rank.csv` with columns `record_id,app_name,score,label_pred,rating,review_excerpt`.
pub fn write_rank_csv<W: std::io::Write>(ranked: &[RankedReview], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["record_id", "app_name", "score", "label_pred", "rating", "review_excerpt"])?;
    for r in ranked {
        wtr.write_record([
            r.record_id.to_string(),
            r.app_name.clone(),
            format!("{:.6}", r.score),
            r.label_pred.to_string(),
            r.rating.to_string(),
            r.review_excerpt.clone(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<rank.csv>", e))?;
    Ok(())
}
