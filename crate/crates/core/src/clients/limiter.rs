use std::sync::{Arc, Condvar, Mutex};

use super::{
    ClientResult, EntailmentScorer, FusedGenerator, FusedRequest, GenerateRequest, Generator, RelevanceScorer,
    SearchBackend, SearchResult,
};

/// Counting semaphore bounding in-flight requests.
#[derive(Debug)]
pub struct Semaphore {
    available: Mutex<usize>,
    freed: Condvar,
}

impl Semaphore {
    pub fn new(permits: usize) -> Self {
        assert!(permits >= 1, "semaphore needs at least one permit");
        Self {
            available: Mutex::new(permits),
            freed: Condvar::new(),
        }
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut available = self.available.lock().unwrap_or_else(|e| e.into_inner());
        while *available == 0 {
            available = self.freed.wait(available).unwrap_or_else(|e| e.into_inner());
        }
        *available -= 1;
        Permit { sem: self }
    }
}

pub struct Permit<'a> {
    sem: &'a Semaphore,
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut available = self.sem.available.lock().unwrap_or_else(|e| e.into_inner());
        *available += 1;
        self.sem.freed.notify_one();
    }
}

/// Admits at most `limit` concurrent calls into the wrapped client.
pub struct Limited<C> {
    inner: C,
    sem: Arc<Semaphore>,
}

impl<C> Limited<C> {
    pub fn new(inner: C, limit: usize) -> Self {
        Self {
            inner,
            sem: Arc::new(Semaphore::new(limit)),
        }
    }
}

impl<C: Generator> Generator for Limited<C> {
    fn generate(&self, request: &GenerateRequest) -> ClientResult<String> {
        let _permit = self.sem.acquire();
        self.inner.generate(request)
    }
}

impl<C: FusedGenerator> FusedGenerator for Limited<C> {
    fn generate_fused(&self, request: &FusedRequest) -> ClientResult<String> {
        let _permit = self.sem.acquire();
        self.inner.generate_fused(request)
    }
}

impl<C: RelevanceScorer> RelevanceScorer for Limited<C> {
    fn score_pairs(&self, pairs: &[(&str, &str)]) -> ClientResult<Vec<f64>> {
        let _permit = self.sem.acquire();
        self.inner.score_pairs(pairs)
    }
}

impl<C: EntailmentScorer> EntailmentScorer for Limited<C> {
    fn nli(&self, pairs: &[(&str, &str)]) -> ClientResult<Vec<f64>> {
        let _permit = self.sem.acquire();
        self.inner.nli(pairs)
    }
}

impl<C: SearchBackend> SearchBackend for Limited<C> {
    fn search(&self, query: &str, top_k: usize) -> ClientResult<Vec<SearchResult>> {
        let _permit = self.sem.acquire();
        self.inner.search(query, top_k)
    }
}
