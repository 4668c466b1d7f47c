//! The 34-feature catalog and per-review feature vectors.

mod catalog;
pub mod extract;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::{RecordId, ReviewRecord};
use crate::error::{Error, Result};
use crate::lexicon::Lexicons;
use crate::preprocess::PreprocessedReview;

pub use catalog::{
    approach_features, ids, ApproachMask, FeatureDescriptor, FeatureId, FeatureKind, CATALOG, N_FEATURES,
    N_TOPIC_FEATURES,
};
pub use extract::IdfTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub record_id: RecordId,
    #[serde(with = "fixed_values")]
    pub values: [f64; N_FEATURES],
}

mod fixed_values {
    use super::N_FEATURES;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(values: &[f64; N_FEATURES], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(values.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[f64; N_FEATURES], D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        let n = v.len();
        v.try_into()
            .map_err(|_| D::Error::custom(format!("expected {N_FEATURES} feature values, found {n}")))
    }
}

impl FeatureVector {
    pub fn zeros(record_id: RecordId) -> Self {
        FeatureVector {
            record_id,
            values: [0.0; N_FEATURES],
        }
    }

    pub fn get(&self, id: FeatureId) -> f64 {
        self.values[id.index()]
    }

    pub fn set(&mut self, id: FeatureId, value: f64) {
        self.values[id.index()] = value;
    }

    /// Values of `features`, in the given order.
    pub fn select(&self, features: &[FeatureId]) -> Vec<f64> {
        features.iter().map(|f| self.get(*f)).collect()
    }

    /// Range check for every catalog invariant; returns the first violation.
    pub fn check_ranges(&self) -> std::result::Result<(), FeatureId> {
        use ids::*;
        let in_range = |id: FeatureId, lo: f64, hi: f64| {
            let v = self.get(id);
            if v.is_finite() && v >= lo && v <= hi {
                Ok(())
            } else {
                Err(id)
            }
        };
        let count = |id: FeatureId| {
            let v = self.get(id);
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(())
            } else {
                Err(id)
            }
        };
        in_range(RATING, 1.0, 5.0)?;
        count(HELPFUL_VOTES)?;
        count(LENGTH)?;
        for id in [
            NOUNS, VERBS, ANGRY, SAD, ANXIOUS, NEGATIVE, POSITIVE, COMMITMENT, ADVERBS, ADJECTIVES,
        ] {
            count(id)?;
        }
        in_range(NEUTRALITY, 0.0, 1.0)?;
        in_range(POLARITY, -1.0, 1.0)?;
        in_range(SENTIMENT, -1.0, 1.0)?;
        in_range(INFORMATIVENESS, 0.0, f64::MAX)?;
        in_range(READABILITY, f64::MIN, f64::MAX)?;
        in_range(COMPLEXITY, 0.0, f64::MAX)?;
        let mut topic_sum = 0.0;
        for k in 0..N_TOPIC_FEATURES {
            in_range(FeatureId::topic(k), 0.0, 1.0)?;
            topic_sum += self.get(FeatureId::topic(k));
        }
        if (topic_sum - 1.0).abs() > 1e-9 {
            return Err(FeatureId::topic(0));
        }
        for id in [FEATURE_REQUEST, PROBLEM_DETECTION, INFORMATION_REQUEST, INFORMERS, OTHER] {
            let v = self.get(id);
            if v != 0.0 && v != 1.0 {
                return Err(id);
            }
        }
        Ok(())
    }
}

/// Everything `featurize` needs beyond the review itself.
pub struct FeatureContext<'a> {
    pub lexicons: &'a Lexicons,
    pub idf: &'a IdfTable,
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Assemble all 34 values for one review. `topic_dist` fills F17..=F26.
pub fn featurize(
    record: &ReviewRecord,
    pre: &PreprocessedReview,
    topic_dist: &[f64],
    ctx: &FeatureContext<'_>,
) -> Result<FeatureVector> {
    use ids::*;
    if topic_dist.len() != N_TOPIC_FEATURES {
        return Err(Error::Config(format!(
            "topic features need a {N_TOPIC_FEATURES}-topic distribution, got {}",
            topic_dist.len()
        )));
    }
    let lex = ctx.lexicons;
    let mut v = FeatureVector::zeros(record.record_id);

    v.set(HELPFUL_VOTES, record.helpful_votes as f64);
    v.set(RATING, f64::from(record.rating));
    v.set(LENGTH, extract::f_length(pre) as f64);
    v.set(READABILITY, extract::f_readability(&pre.original));
    v.set(COMPLEXITY, extract::f_complexity(&pre.original));

    let pn = extract::f_polarity_neutrality(pre, lex);
    v.set(NEUTRALITY, pn.neutrality);
    v.set(POLARITY, pn.polarity);

    let pos = extract::f_pos_counts(pre, lex);
    v.set(NOUNS, pos.nouns as f64);
    v.set(VERBS, pos.verbs as f64);
    v.set(ADVERBS, pos.adverbs as f64);
    v.set(ADJECTIVES, pos.adjectives as f64);

    let cats = extract::f_category_counts(pre, lex);
    v.set(ANGRY, cats.angry as f64);
    v.set(SAD, cats.sad as f64);
    v.set(ANXIOUS, cats.anxious as f64);
    v.set(NEGATIVE, cats.negative as f64);
    v.set(POSITIVE, cats.positive as f64);
    v.set(COMMITMENT, cats.commitment as f64);

    v.set(SENTIMENT, extract::f_sentiment(pre, lex));
    for (k, p) in topic_dist.iter().enumerate() {
        v.set(FeatureId::topic(k), *p);
    }
    v.set(INFORMATIVENESS, extract::f_informativeness(pre, ctx.idf));

    let purpose = extract::f_purpose(pre, lex);
    v.set(FEATURE_REQUEST, flag(purpose.feature_request));
    v.set(PROBLEM_DETECTION, flag(purpose.problem_detection));
    v.set(INFORMATION_REQUEST, flag(purpose.information_request));
    v.set(INFORMERS, flag(purpose.informers));
    v.set(OTHER, flag(purpose.other));
    Ok(v)
}

/// Labeled feature matrix, one row per review.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureTable {
    pub rows: Vec<FeatureVector>,
    pub labels: Vec<u8>,
}

impl FeatureTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, id: FeatureId) -> Vec<f64> {
        self.rows.iter().map(|r| r.get(id)).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> FeatureTable {
        FeatureTable {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Dense row-major matrix restricted to `features`.
    pub fn matrix(&self, features: &[FeatureId]) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.select(features)).collect()
    }

    /// CSV with header `record_id,F1,...,F34,label`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["record_id".to_string()];
        header.extend(FeatureId::all().map(|f| f.to_string()));
        header.push("label".into());
        wtr.write_record(&header)?;
        for (row, label) in self.rows.iter().zip(&self.labels) {
            let mut fields = Vec::with_capacity(N_FEATURES + 2);
            fields.push(row.record_id.to_string());
            fields.extend(row.values.iter().map(|v| v.to_string()));
            fields.push(label.to_string());
            wtr.write_record(&fields)?;
        }
        wtr.flush().map_err(|e| Error::io("<features.csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<FeatureTable> {
        let mut rdr = csv::Reader::from_reader(reader);
        let header = rdr.headers()?.clone();
        let expected: Vec<String> = std::iter::once("record_id".to_string())
            .chain(FeatureId::all().map(|f| f.to_string()))
            .chain(std::iter::once("label".to_string()))
            .collect();
        if header.iter().ne(expected.iter().map(String::as_str)) {
            return Err(Error::malformed("feature matrix header", header.iter().collect::<Vec<_>>().join(",")));
        }
        let mut table = FeatureTable::default();
        for row in rdr.records() {
            let row = row?;
            let bad = |what: &str| Error::malformed("feature matrix row", format!("{what}: {:?}", row));
            let record_id = RecordId(row[0].parse().map_err(|_| bad("record_id"))?);
            let mut v = FeatureVector::zeros(record_id);
            for (i, field) in row.iter().skip(1).take(N_FEATURES).enumerate() {
                v.values[i] = field.parse().map_err(|_| bad("value"))?;
            }
            let label: u8 = row[N_FEATURES + 1].parse().map_err(|_| bad("label"))?;
            if label > 1 {
                return Err(bad("label"));
            }
            table.rows.push(v);
            table.labels.push(label);
        }
        Ok(table)
    }
}
