//! Error type shared across the harness.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("corpus error: {0}")]
    Corpus(String),

    #[error("graph error: {0}")]
    Graph(String),

    #[error("index error: {0}")]
    Index(String),

    #[error("embedding error: {0}")]
    Embedding(String),

    #[error("llm error: {0}")]
    Llm(String),

    #[error("prompt error: {0}")]
    Prompt(String),

    #[error("generation error: {0}")]
    Generation(String),

    #[error("agent error: {0}")]
    Agent(String),

    #[error("metrics error: {0}")]
    Metrics(String),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
