//! Service contracts for generation, fused generation, relevance scoring,
//! entailment, and search.
//!
//! Pipelines never call a backend directly; they go through the free functions
//! in this module ([`generate`], [`generate_fused`], [`score_pairs`], [`nli`],
//! [`search`]), which enforce the request preconditions and response
//! postconditions regardless of which backend is plugged in.

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

mod fixtures;
mod http;
mod limiter;
pub mod mock;
mod retry;

pub use fixtures::{
    load_fixture_clients, EditRule, FixtureEditor, FixtureGenerator, FixtureSearch, GenerateRule, MockKind,
    MockOptions, SearchFixture,
};
pub use http::HttpClient;
pub use limiter::{Limited, Permit, Semaphore};
pub use retry::{RetryPolicy, Retrying};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClientError {
    /// Timeouts, connection failures, 5xx. Worth retrying.
    #[error("transient failure: {0}")]
    Transient(String),
    /// Bad requests, contract violations. Never retried.
    #[error("permanent failure: {0}")]
    Permanent(String),
    #[error("transient failure after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },
}

impl ClientError {
    pub fn is_transient(&self) -> bool {
        matches!(self, ClientError::Transient(_))
    }
}

pub type ClientResult<T> = Result<T, ClientError>;

/// Body of `POST /generate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub prompt: String,
    pub max_tokens: u32,
    pub temperature: f64,
}

/// Body of `POST /generate_fused`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedRequest {
    pub segments: Vec<String>,
    pub max_tokens: u32,
    #[serde(default)]
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextResponse {
    pub text: String,
}

/// Body of `POST /score` and `POST /nli`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairsRequest {
    pub pairs: Vec<[String; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoresResponse {
    pub scores: Vec<f64>,
}

/// Body of `POST /search`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchRequest {
    pub query: String,
    pub top_k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    #[serde(default)]
    pub url: String,
    #[serde(default)]
    pub title: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub results: Vec<SearchResult>,
}

pub trait Generator: Send + Sync {
    fn generate(&self, request: &GenerateRequest) -> ClientResult<String>;
}

pub trait FusedGenerator: Send + Sync {
    fn generate_fused(&self, request: &FusedRequest) -> ClientResult<String>;
}

pub trait RelevanceScorer: Send + Sync {
    fn score_pairs(&self, pairs: &[(&str, &str)]) -> ClientResult<Vec<f64>>;
}

pub trait EntailmentScorer: Send + Sync {
    /// Entailment probability of each hypothesis given its premise.
    fn nli(&self, pairs: &[(&str, &str)]) -> ClientResult<Vec<f64>>;
}

pub trait SearchBackend: Send + Sync {
    fn search(&self, query: &str, top_k: usize) -> ClientResult<Vec<SearchResult>>;
}

impl<F> Generator for F
where
    F: Fn(&GenerateRequest) -> ClientResult<String> + Send + Sync,
{
    fn generate(&self, request: &GenerateRequest) -> ClientResult<String> {
        self(request)
    }
}

impl<F> FusedGenerator for F
where
    F: Fn(&FusedRequest) -> ClientResult<String> + Send + Sync,
{
    fn generate_fused(&self, request: &FusedRequest) -> ClientResult<String> {
        self(request)
    }
}

impl<F> RelevanceScorer for F
where
    F: Fn(&str, &str) -> f64 + Send + Sync,
{
    fn score_pairs(&self, pairs: &[(&str, &str)]) -> ClientResult<Vec<f64>> {
        Ok(pairs.iter().map(|(q, p)| self(q, p)).collect())
    }
}

/// The five services a pipeline needs.
#[derive(Clone)]
pub struct Clients {
    pub generator: Arc<dyn Generator>,
    pub editor: Arc<dyn FusedGenerator>,
    pub scorer: Arc<dyn RelevanceScorer>,
    pub nli: Arc<dyn EntailmentScorer>,
    pub search: Arc<dyn SearchBackend>,
}

/// Connection settings for one HTTP service.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClientConfig {
    pub base_url: String,
    pub api_key: Option<String>,
    /// Seconds.
    pub timeout: f64,
    pub max_retries: u32,
    /// Seconds; the i-th retry waits `backoff_base * 2^i`.
    pub backoff_base: f64,
    pub parallelism_limit: usize,
}

impl Default for ClientConfig {
    fn default() -> Self {
        Self {
            base_url: "http://127.0.0.1:8080".into(),
            api_key: None,
            timeout: 30.0,
            max_retries: 3,
            backoff_base: 0.5,
            parallelism_limit: 4,
        }
    }
}

impl std::fmt::Debug for ClientConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClientConfig")
            .field("base_url", &self.base_url)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .field("timeout", &self.timeout)
            .field("max_retries", &self.max_retries)
            .field("backoff_base", &self.backoff_base)
            .field("parallelism_limit", &self.parallelism_limit)
            .finish()
    }
}

impl ClientConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.timeout.is_finite() && self.timeout > 0.0) {
            return Err(format!("timeout must be positive, got {}", self.timeout));
        }
        if !(self.backoff_base.is_finite() && self.backoff_base >= 0.0) {
            return Err(format!("backoff_base must be non-negative, got {}", self.backoff_base));
        }
        if self.parallelism_limit < 1 {
            return Err("parallelism_limit must be at least 1".into());
        }
        if self.base_url.trim().is_empty() {
            return Err("base_url is empty".into());
        }
        Ok(())
    }

    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy {
            max_retries: self.max_retries,
            backoff_base: Duration::from_secs_f64(self.backoff_base),
        }
    }
}

pub fn generate(client: &dyn Generator, prompt: &str, max_tokens: u32, temperature: f64) -> ClientResult<String> {
    if prompt.trim().is_empty() {
        return Err(ClientError::Permanent("empty prompt".into()));
    }
    client.generate(&GenerateRequest {
        prompt: prompt.to_string(),
        max_tokens,
        temperature,
    })
}

pub fn generate_fused(client: &dyn FusedGenerator, segments: &[String], max_tokens: u32) -> ClientResult<String> {
    if segments.is_empty() {
        return Err(ClientError::Permanent("empty segment list".into()));
    }
    client.generate_fused(&FusedRequest {
        segments: segments.to_vec(),
        max_tokens,
        temperature: 0.0,
    })
}

fn check_scores(kind: &str, expected: usize, scores: &[f64]) -> ClientResult<()> {
    if scores.len() != expected {
        return Err(ClientError::Permanent(format!(
            "{kind} returned {} scores for {expected} pairs",
            scores.len()
        )));
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(ClientError::Permanent(format!(
            "{kind} returned non-finite score {bad}"
        )));
    }
    Ok(())
}

/// One relevance score per (query, passage) pair, order-aligned.
pub fn score_pairs(client: &dyn RelevanceScorer, pairs: &[(&str, &str)]) -> ClientResult<Vec<f64>> {
    if pairs.is_empty() {
        return Err(ClientError::Permanent("empty pair list".into()));
    }
    let scores = client.score_pairs(pairs)?;
    check_scores("scorer", pairs.len(), &scores)?;
    Ok(scores)
}

/// One entailment score per (premise, hypothesis) pair, clamped to [0, 1].
pub fn nli(client: &dyn EntailmentScorer, pairs: &[(&str, &str)]) -> ClientResult<Vec<f64>> {
    if pairs.is_empty() {
        return Err(ClientError::Permanent("empty pair list".into()));
    }
    let scores = client.nli(pairs)?;
    check_scores("nli", pairs.len(), &scores)?;
    Ok(scores.into_iter().map(|s| s.clamp(0.0, 1.0)).collect())
}

/// Up to `top_k` results in rank order.
pub fn search(client: &dyn SearchBackend, query: &str, top_k: usize) -> ClientResult<Vec<SearchResult>> {
    if top_k == 0 {
        return Err(ClientError::Permanent("top_k must be at least 1".into()));
    }
    let mut results = client.search(query, top_k)?;
    results.truncate(top_k);
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Raw(Vec<f64>);

    impl EntailmentScorer for Raw {
        fn nli(&self, _pairs: &[(&str, &str)]) -> ClientResult<Vec<f64>> {
            Ok(self.0.clone())
        }
    }

    #[test]
    fn nli_clamps_to_unit_interval() {
        let scores = nli(&Raw(vec![-0.5, 0.3, 1.7]), &[("a", "b"), ("a", "c"), ("a", "d")]).unwrap();
        assert_eq!(scores, vec![0.0, 0.3, 1.0]);
    }

    #[test]
    fn length_mismatch_is_permanent() {
        let err = nli(&Raw(vec![0.1]), &[("a", "b"), ("c", "d")]).unwrap_err();
        assert!(matches!(err, ClientError::Permanent(_)));
    }

    #[test]
    fn empty_segments_rejected() {
        let echo = |r: &FusedRequest| Ok(r.segments.join("|"));
        assert!(matches!(generate_fused(&echo, &[], 16), Err(ClientError::Permanent(_))));
    }

    #[test]
    fn empty_prompt_rejected() {
        let echo = |r: &GenerateRequest| Ok(r.prompt.clone());
        assert!(matches!(generate(&echo, "  ", 16, 0.0), Err(ClientError::Permanent(_))));
    }

    #[test]
    fn fused_wire_body_keeps_segment_order() {
        let req = FusedRequest {
            segments: vec!["s1".into(), "s2".into(), "s3".into(), "s4".into()],
            max_tokens: 64,
            temperature: 0.0,
        };
        let body: serde_json::Value = serde_json::to_value(&req).unwrap();
        let segs = body["segments"].as_array().unwrap();
        assert_eq!(segs.len(), 4);
        assert_eq!(
            segs.iter().map(|s| s.as_str().unwrap()).collect::<Vec<_>>(),
            ["s1", "s2", "s3", "s4"]
        );
        assert_eq!(body["max_tokens"], 64);
    }

    #[test]
    fn pairs_serialize_as_arrays() {
        let req = PairsRequest {
            pairs: vec![["q".into(), "p".into()]],
        };
        assert_eq!(serde_json::to_string(&req).unwrap(), r#"{"pairs":[["q","p"]]}"#);
    }

    #[test]
    fn config_rejects_bad_values() {
        let mut cfg = ClientConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.timeout = 0.0;
        assert!(cfg.validate().is_err());
        cfg = ClientConfig {
            parallelism_limit: 0,
            ..ClientConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn debug_redacts_key() {
        let cfg = ClientConfig {
            api_key: Some("sekrit".into()),
            ..ClientConfig::default()
        };
        assert!(!format!("{cfg:?}").contains("sekrit"));
    }
}
