//! End-to-end harness for reasoning-intensive scientific-literature
//! retrieval: builds benchmark questions from citation-overlap graphs, runs a
//! think/search/answer agent against pluggable retrievers over a fixed
//! corpus, applies corpus-level augmentation, and scores the results.

pub mod agent;
pub mod benchgen;
pub mod config;
pub mod corpus;
pub mod error;
pub mod graph;
pub mod llm;
pub mod metrics;
pub mod prompts;
pub mod report;
pub mod retrieval;
pub mod scalar;
pub mod scaling;
pub mod text;

pub use error::{HarnessError, Result};
pub use scalar::Scalar;

/// Default scoring scalar used by the CLI.
pub type Score = f64;

pub type LexicalIndexF32 = retrieval::lexical::LexicalIndex<f32>;
pub type LexicalIndexF64 = retrieval::lexical::LexicalIndex<f64>;
pub type VectorIndexF32 = retrieval::vector::VectorIndex<f32>;
pub type VectorIndexF64 = retrieval::vector::VectorIndex<f64>;
