use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{
    ClientConfig, ClientError, ClientResult, EntailmentScorer, FusedGenerator, FusedRequest, GenerateRequest,
    Generator, PairsRequest, RelevanceScorer, RetryPolicy, ScoresResponse, SearchBackend, SearchRequest,
    SearchResponse, SearchResult, Semaphore, TextResponse,
};

/// JSON-over-HTTP client for the five service endpoints.
///
/// Each attempt holds one admission permit; permits are released while
/// backing off between retries.
pub struct HttpClient {
    agent: ureq::Agent,
    base_url: String,
    api_key: Option<String>,
    policy: RetryPolicy,
    limiter: Semaphore,
    retries: AtomicU64,
}

impl HttpClient {
    pub fn new(config: &ClientConfig) -> Result<Self, ClientError> {
        config.validate().map_err(ClientError::Permanent)?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout)))
            .http_status_as_error(true)
            .build()
            .into();
        Ok(Self {
            agent,
            base_url: config.base_url.trim_end_matches('/').to_string(),
            api_key: config.api_key.clone(),
            policy: config.retry_policy(),
            limiter: Semaphore::new(config.parallelism_limit),
            retries: AtomicU64::new(0),
        })
    }

    pub fn retries(&self) -> u64 {
        self.retries.load(Ordering::Relaxed)
    }

    fn post<Req: Serialize, Resp: DeserializeOwned>(&self, path: &str, body: &Req) -> ClientResult<Resp> {
        let url = format!("{}{}", self.base_url, path);
        let (resp, retries) = self.policy.run(path, || {
            let _permit = self.limiter.acquire();
            let mut req = self.agent.post(&url);
            if let Some(key) = &self.api_key {
                req = req.header("Authorization", &format!("Bearer {key}"));
            }
            let mut response = req.send_json(body).map_err(classify)?;
            response
                .body_mut()
                .read_json::<Resp>()
                .map_err(|e| ClientError::Permanent(format!("{url}: bad response body: {e}")))
        })?;
        self.retries.fetch_add(retries as u64, Ordering::Relaxed);
        Ok(resp)
    }
}

fn classify(err: ureq::Error) -> ClientError {
    use ureq::Error as E;
    match err {
        E::StatusCode(code) if code >= 500 || code == 429 || code == 408 => {
            ClientError::Transient(format!("HTTP {code}"))
        }
        E::StatusCode(code) => ClientError::Permanent(format!("HTTP {code}")),
        e @ (E::Timeout(_) | E::Io(_) | E::ConnectionFailed | E::HostNotFound) => ClientError::Transient(e.to_string()),
        e => ClientError::Permanent(e.to_string()),
    }
}

fn owned_pairs(pairs: &[(&str, &str)]) -> PairsRequest {
    PairsRequest {
        pairs: pairs.iter().map(|(a, b)| [a.to_string(), b.to_string()]).collect(),
    }
}

impl Generator for HttpClient {
    fn generate(&self, request: &GenerateRequest) -> ClientResult<String> {
        self.post::<_, TextResponse>("/generate", request).map(|r| r.text)
    }
}

impl FusedGenerator for HttpClient {
    fn generate_fused(&self, request: &FusedRequest) -> ClientResult<String> {
        self.post::<_, TextResponse>("/generate_fused", request).map(|r| r.text)
    }
}

impl RelevanceScorer for HttpClient {
    fn score_pairs(&self, pairs: &[(&str, &str)]) -> ClientResult<Vec<f64>> {
        self.post::<_, ScoresResponse>("/score", &owned_pairs(pairs))
            .map(|r| r.scores)
    }
}

impl EntailmentScorer for HttpClient {
    fn nli(&self, pairs: &[(&str, &str)]) -> ClientResult<Vec<f64>> {
        self.post::<_, ScoresResponse>("/nli", &owned_pairs(pairs))
            .map(|r| r.scores)
    }
}

impl SearchBackend for HttpClient {
    fn search(&self, query: &str, top_k: usize) -> ClientResult<Vec<SearchResult>> {
        let body = SearchRequest {
            query: query.to_string(),
            top_k,
        };
        self.post::<_, SearchResponse>("/search", &body).map(|r| r.results)
    }
}
