//! Mining, classifying and reporting self-admitted technical debt (SATD)
//! in source-code comments.

pub mod analyzer;
pub mod classifier;
pub mod corpus;
pub mod evaluation;
pub mod extract;
pub mod inference;
pub mod label;
pub mod preprocess;

pub use label::{Label, PerLabel, NUM_LABELS};
