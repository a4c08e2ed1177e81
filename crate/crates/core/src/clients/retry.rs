use std::sync::atomic::{AtomicU64, Ordering};
use std::thread;
use std::time::Duration;

use super::{
    ClientError, ClientResult, EntailmentScorer, FusedGenerator, FusedRequest, GenerateRequest, Generator,
    RelevanceScorer, SearchBackend, SearchResult,
};

/// Exponential backoff on transient failures only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub backoff_base: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            backoff_base: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    pub fn none() -> Self {
        Self {
            max_retries: 0,
            backoff_base: Duration::ZERO,
        }
    }

    /// Wait before the `retry`-th re-attempt (0-based).
    pub fn delay(&self, retry: u32) -> Duration {
        self.backoff_base
            .saturating_mul(1u32.checked_shl(retry).unwrap_or(u32::MAX))
    }

    /// Runs `op` until it succeeds, fails permanently, or retries run out.
    /// Returns the value and the number of re-attempts made.
    pub fn run<T>(&self, what: &str, mut op: impl FnMut() -> ClientResult<T>) -> ClientResult<(T, u32)> {
        let mut retry = 0;
        loop {
            match op() {
                Ok(v) => return Ok((v, retry)),
                Err(e) if e.is_transient() => {
                    if retry >= self.max_retries {
                        return Err(ClientError::RetriesExhausted {
                            attempts: retry + 1,
                            last: e.to_string(),
                        });
                    }
                    let wait = self.delay(retry);
                    tracing::warn!(what, retry = retry + 1, ?wait, error = %e, "retrying");
                    thread::sleep(wait);
                    retry += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}

/// Adds a [`RetryPolicy`] in front of any client and counts re-attempts.
pub struct Retrying<C> {
    inner: C,
    policy: RetryPolicy,
    retries: AtomicU64,
}

impl<C> Retrying<C> {
    pub fn new(inner: C, policy: RetryPolicy) -> Self {
        Self {
            inner,
            policy,
            retries: AtomicU64::new(0),
        }
    }

    /// Total re-attempts made so far.
    pub fn retries(&self) -> u64 {
        self.retries.load(Ordering::Relaxed)
    }

    fn run<T>(&self, what: &str, op: impl FnMut() -> ClientResult<T>) -> ClientResult<T> {
        let (value, retries) = self.policy.run(what, op)?;
        self.retries.fetch_add(retries as u64, Ordering::Relaxed);
        Ok(value)
    }
}

impl<C: Generator> Generator for Retrying<C> {
    fn generate(&self, request: &GenerateRequest) -> ClientResult<String> {
        self.run("generate", || self.inner.generate(request))
    }
}

impl<C: FusedGenerator> FusedGenerator for Retrying<C> {
    fn generate_fused(&self, request: &FusedRequest) -> ClientResult<String> {
        self.run("generate_fused", || self.inner.generate_fused(request))
    }
}

impl<C: RelevanceScorer> RelevanceScorer for Retrying<C> {
    fn score_pairs(&self, pairs: &[(&str, &str)]) -> ClientResult<Vec<f64>> {
        self.run("score", || self.inner.score_pairs(pairs))
    }
}

impl<C: EntailmentScorer> EntailmentScorer for Retrying<C> {
    fn nli(&self, pairs: &[(&str, &str)]) -> ClientResult<Vec<f64>> {
        self.run("nli", || self.inner.nli(pairs))
    }
}

impl<C: SearchBackend> SearchBackend for Retrying<C> {
    fn search(&self, query: &str, top_k: usize) -> ClientResult<Vec<SearchResult>> {
        self.run("search", || self.inner.search(query, top_k))
    }
}
