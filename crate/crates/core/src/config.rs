//! Harness configuration: a TOML file with per-section defaults. The LLM
//! credential is read from the environment variable named in the file and is
//! never written to disk.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct LlmConfig {
    /// Chat endpoint URL. Mutually exclusive with `stub_path`.
    pub endpoint: Option<String>,
    /// Name of the environment variable holding the API credential.
    pub credential_env: Option<String>,
    pub model: Option<String>,
    /// Scripted-stub response file. Mutually exclusive with `endpoint`.
    pub stub_path: Option<PathBuf>,
}

impl LlmConfig {
    /// Resolve the credential from the configured environment variable.
    pub fn credential(&self) -> Result<Option<String>> {
        match &self.credential_env {
            None => Ok(None),
            Some(var) => match std::env::var(var) {
                Ok(value) => Ok(Some(value)),
                Err(_) => Err(HarnessError::Config(format!(
                    "credential environment variable {var} is not set"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSection {
    pub k: usize,
    /// "lexical" or "vector".
    pub index_kind: String,
}

impl Default for SearchSection {
    fn default() -> Self {
        SearchSection {
            k: 5,
            index_kind: "lexical".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub max_iterations: usize,
    pub evidence_char_budget: usize,
    pub deterministic: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        let d = crate::agent::RunConfig::default();
        RunSection {
            max_iterations: d.max_iterations,
            evidence_char_budget: d.evidence_char_budget,
            deterministic: d.deterministic,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Bm25Section {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Section {
    fn default() -> Self {
        Bm25Section { k1: 1.2, b: 0.75 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HarnessConfig {
    pub corpus_path: Option<PathBuf>,
    pub benchmark_path: Option<PathBuf>,
    pub index_dir: Option<PathBuf>,
    pub results_dir: Option<PathBuf>,
    /// Worker threads for batch runs; 1 keeps output ordering trivial.
    pub concurrency: usize,
    pub llm: LlmConfig,
    pub search: SearchSection,
    pub run: RunSection,
    pub bm25: Bm25Section,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            corpus_path: None,
            benchmark_path: None,
            index_dir: None,
            results_dir: None,
            concurrency: 1,
            llm: LlmConfig::default(),
            search: SearchSection::default(),
            run: RunSection::default(),
            bm25: Bm25Section::default(),
        }
    }
}

impl HarnessConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: HarnessConfig =
            toml::from_str(&raw).map_err(|e| HarnessError::Config(format!("bad config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.llm.endpoint.is_some() && self.llm.stub_path.is_some() {
            return Err(HarnessError::Config(
                "llm.endpoint and llm.stub_path are mutually exclusive".into(),
            ));
        }
        if self.search.k == 0 {
            return Err(HarnessError::Config("search.k must be >= 1".into()));
        }
        if self.run.max_iterations == 0 {
            return Err(HarnessError::Config("run.max_iterations must be >= 1".into()));
        }
        if self.concurrency == 0 {
            return Err(HarnessError::Config("concurrency must be >= 1".into()));
        }
        if self.bm25.k1 <= 0.0 || self.bm25.k1.is_nan() {
            return Err(HarnessError::Config("bm25.k1 must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.bm25.b) {
            return Err(HarnessError::Config("bm25.b must be in [0, 1]".into()));
        }
        match self.search.index_kind.as_str() {
            "lexical" | "vector" => Ok(()),
            other => Err(HarnessError::Config(format!(
                "search.index_kind must be lexical or vector, got {other:?}"
            ))),
        }
    }
}
