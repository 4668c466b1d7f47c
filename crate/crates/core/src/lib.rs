//! Prioritizing app reviews for developer response.
//!
//! The pipeline runs ingest → label → preprocess → topics → featurize →
//! select → train → evaluate → rank. Every stage is usable on its own; the
//! [`cli`] module wires them together over an artifact directory.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod lexicon;
pub mod models;
pub mod pipeline;
pub mod preprocess;
pub mod select;
pub mod synth;
pub mod topics;

pub use error::{Error, Result};
