//! Evaluation and selection tooling for lay summaries of scientific articles.
//!
//! * [`readability`] and [`relevance`]: FKGL, DCRS, CLI and ROUGE-1/2/L.
//! * [`scorer`]: client for external neural scorers over a JSON-lines protocol.
//! * [`des`]: Dynamic Expert Selection of the best candidate summary.
//! * [`fewshot`] and [`prompt`]: exemplar ranking and prompt assembly.
//! * [`corpus`] and [`pipeline`]: JSONL I/O and batch runs.

pub mod corpus;
pub mod des;
pub mod error;
pub mod fewshot;
pub mod pipeline;
pub mod prompt;
pub mod readability;
pub mod relevance;
pub mod scorer;
pub mod text;

pub use corpus::{CandidateSummary, Dataset, Document};
pub use des::{select, MetricVector, SelectionConfig, SelectionResult};
pub use error::{Error, ErrorClass, Result};
pub use readability::{readability_all, FamiliarWordList, ReadabilityScores};
pub use relevance::{rouge_all, RougeScores};
pub use text::{count_syllables, tokenize, TokenizedText};
