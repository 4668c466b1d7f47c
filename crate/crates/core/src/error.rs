use std::path::PathBuf;

use thiserror::Error;

use crate::features::FeatureId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing column `{0}` in header")]
    MissingColumn(String),

    #[error("malformed {what}: {detail}")]
    Malformed { what: String, detail: String },

    #[error("corpus is empty after dropping empty documents")]
    EmptyCorpus,

    #[error("vocabulary is empty after pruning tokens seen in fewer than {min_df} documents")]
    DegenerateVocabulary { min_df: usize },

    #[error("series lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("series of length {0} is too short for a correlation (need at least 2)")]
    TooShort(usize),

    #[error("thresholds removed every feature (min |r| = {min_abs_r}, redundancy r = {redundancy_r})")]
    EmptySelection { min_abs_r: f64, redundancy_r: f64 },

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("feature vector is missing kept feature {0}")]
    MissingFeature(FeatureId),

    #[error("non-finite value in feature {0}")]
    NonFinite(FeatureId),

    #[error("{n} examples cannot be split into {k} folds")]
    TooFewExamples { n: usize, k: usize },

    #[error("confusion matrix is empty")]
    EmptyMatrix,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing upstream artifact {path} (run `{stage}` first)")]
    MissingArtifact { stage: &'static str, path: PathBuf },

    #[error("{what} has format version {found}, expected {expected}")]
    FormatVersion {
        what: &'static str,
        found: u32,
        expected: u32,
    },

    #[error("output directory {0} is locked by another invocation")]
    Locked(PathBuf),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(what: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Malformed {
            what: what.into(),
            detail: detail.into(),
        }
    }

    /// Process exit code used by the command-line front end, one per error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            Error::MissingColumn(_) | Error::Malformed { .. } | Error::Json(_) | Error::Csv(_) => 3,
            Error::Config(_) => 4,
            Error::MissingArtifact { .. } => 5,
            Error::FormatVersion { .. } => 6,
            Error::Locked(_) => 7,
            Error::EmptyCorpus
            | Error::DegenerateVocabulary { .. }
            | Error::EmptySelection { .. }
            | Error::EmptyTrainingSet
            | Error::TooFewExamples { .. }
            | Error::EmptyMatrix => 8,
            Error::LengthMismatch { .. }
            | Error::TooShort(_)
            | Error::MissingFeature(_)
            | Error::NonFinite(_) => 9,
        }
    }
}
