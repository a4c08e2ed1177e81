//! Deterministic offline clients.

use std::collections::{BTreeMap, HashMap, HashSet};

use sha2::{Digest, Sha256};

use super::{
    ClientError, ClientResult, EntailmentScorer, FusedGenerator, FusedRequest, GenerateRequest, Generator,
    RelevanceScorer,
};

/// Maps a pair of strings to a stable value in [0, 1].
pub fn unit_hash(a: &str, b: &str) -> f64 {
    let mut h = Sha256::new();
    h.update(a.as_bytes());
    h.update([0u8]);
    h.update(b.as_bytes());
    let digest = h.finalize();
    let mut word = [0u8; 8];
    word.copy_from_slice(&digest[..8]);
    // 53 bits so the division is exact.
    (u64::from_be_bytes(word) >> 11) as f64 / ((1u64 << 53) - 1) as f64
}

fn word_set(text: &str) -> HashSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Fraction of the distinct words of `target` that also occur in `source`
/// (case-insensitive, alphanumeric runs). 0 when `target` has no words.
pub fn lexical_overlap(target: &str, source: &str) -> f64 {
    let target = word_set(target);
    if target.is_empty() {
        return 0.0;
    }
    let source = word_set(source);
    target.iter().filter(|w| source.contains(*w)).count() as f64 / target.len() as f64
}

/// Relevance = [`unit_hash`] of (query, passage).
#[derive(Debug, Clone, Copy, Default)]
pub struct HashScorer;

impl RelevanceScorer for HashScorer {
    fn score_pairs(&self, pairs: &[(&str, &str)]) -> ClientResult<Vec<f64>> {
        Ok(pairs.iter().map(|(q, p)| unit_hash(q, p)).collect())
    }
}

/// Entailment = [`unit_hash`] of (premise, hypothesis).
#[derive(Debug, Clone, Copy, Default)]
pub struct HashNli;

impl EntailmentScorer for HashNli {
    fn nli(&self, pairs: &[(&str, &str)]) -> ClientResult<Vec<f64>> {
        Ok(pairs.iter().map(|(p, h)| unit_hash(p, h)).collect())
    }
}

/// Relevance = share of query words present in the passage.
#[derive(Debug, Clone, Copy, Default)]
pub struct OverlapScorer;

impl RelevanceScorer for OverlapScorer {
    fn score_pairs(&self, pairs: &[(&str, &str)]) -> ClientResult<Vec<f64>> {
        Ok(pairs.iter().map(|(q, p)| lexical_overlap(q, p)).collect())
    }
}

/// Entailment = share of hypothesis words present in the premise.
#[derive(Debug, Clone, Copy, Default)]
pub struct OverlapNli;

impl EntailmentScorer for OverlapNli {
    fn nli(&self, pairs: &[(&str, &str)]) -> ClientResult<Vec<f64>> {
        Ok(pairs.iter().map(|(p, h)| lexical_overlap(h, p)).collect())
    }
}

/// Prompt → completion lookup. In strict mode an unmapped prompt is a
/// permanent failure; otherwise `fallback` is returned.
#[derive(Debug, Clone, Default)]
pub struct MapGenerator {
    pub responses: HashMap<String, String>,
    pub strict: bool,
    pub fallback: String,
}

impl MapGenerator {
    pub fn strict(responses: impl IntoIterator<Item = (String, String)>) -> Self {
        Self {
            responses: responses.into_iter().collect(),
            strict: true,
            fallback: String::new(),
        }
    }
}

impl Generator for MapGenerator {
    fn generate(&self, request: &GenerateRequest) -> ClientResult<String> {
        match self.responses.get(&request.prompt) {
            Some(text) => Ok(text.clone()),
            None if self.strict => Err(ClientError::Permanent("unmapped prompt".into())),
            None => Ok(self.fallback.clone()),
        }
    }
}

/// Canned fused-generation replies keyed by segment count.
#[derive(Debug, Clone, Default)]
pub struct CannedFused {
    pub by_segment_count: BTreeMap<usize, String>,
    pub default: Option<String>,
}

impl FusedGenerator for CannedFused {
    fn generate_fused(&self, request: &FusedRequest) -> ClientResult<String> {
        self.by_segment_count
            .get(&request.segments.len())
            .or(self.default.as_ref())
            .cloned()
            .ok_or_else(|| ClientError::Permanent(format!("no reply for {} segments", request.segments.len())))
    }
}
