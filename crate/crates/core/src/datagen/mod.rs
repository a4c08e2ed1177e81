//! Editor-training data: seed query, evidence, clean summary, corrupted
//! summary, packed evidence.

mod bins;
mod pack;
mod prompts;

use std::collections::HashSet;
use std::sync::Mutex;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

pub use bins::{bin_evidence, EvidenceBins};
pub use pack::{derive_seed, pack_instance, sample_num_corruptions, seeded_rng};
pub use prompts::{
    corrupt_prompt_header, parse_corruption, render_corrupt_prompt, render_summarize_prompt, summarize_prompt_header,
    CORRUPTION_MARKER, CORRUPT_TEMPLATE, SUMMARIZE_TEMPLATE,
};

use crate::clients::{self, ClientResult, Clients, GenerateRequest, Generator};
use crate::error::{Error, Result};
use crate::par::{bounded_map, Cancellation};
use crate::research::{gather_passages, ResearchConfig, ScoredSnippet};
use crate::text;
use crate::types::{EvidenceSnippet, Query, Record, TokenUsage, TrainingInstance, PACKED_EVIDENCE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionOutput {
    pub reasoning: String,
    pub corrupted: String,
    pub num_corruptions: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatagenConfig {
    pub seed: u64,
    pub threshold: f64,
    pub gold_cap: usize,
    pub top_pages: usize,
    pub window: usize,
    pub stride: usize,
    pub parallelism: usize,
    pub corruption_retries: u32,
    pub max_tokens: u32,
}

impl Default for DatagenConfig {
    fn default() -> Self {
        let research = ResearchConfig::default();
        Self {
            seed: 0,
            threshold: 0.5,
            gold_cap: PACKED_EVIDENCE,
            top_pages: research.top_pages,
            window: research.window,
            stride: research.stride,
            parallelism: research.parallelism,
            corruption_retries: 2,
            max_tokens: research.max_tokens,
        }
    }
}

impl DatagenConfig {
    fn research(&self) -> ResearchConfig {
        ResearchConfig {
            top_pages: self.top_pages,
            window: self.window,
            stride: self.stride,
            parallelism: self.parallelism,
            max_tokens: self.max_tokens,
            ..ResearchConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skip {
    pub query_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub produced: usize,
    pub train: usize,
    pub valid: usize,
    pub skipped: Vec<Skip>,
    pub token_counts: TokenUsage,
    pub cancelled: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetOutput {
    pub train: Vec<TrainingInstance>,
    pub valid: Vec<TrainingInstance>,
    pub report: RunReport,
}

/// Counts approximate tokens for every call that passes through it.
struct Metered<'a> {
    inner: &'a dyn Generator,
    usage: Mutex<TokenUsage>,
}

impl<'a> Metered<'a> {
    fn new(inner: &'a dyn Generator) -> Self {
        Self {
            inner,
            usage: Mutex::new(TokenUsage::default()),
        }
    }

    fn usage(&self) -> TokenUsage {
        *self.usage.lock().unwrap_or_else(|e| e.into_inner())
    }
}

impl Generator for Metered<'_> {
    fn generate(&self, request: &GenerateRequest) -> ClientResult<String> {
        let out = self.inner.generate(request)?;
        self.usage
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .record(&request.prompt, &out);
        Ok(out)
    }
}

/// Zero-shot summary of the gold passages; the clean statement.
pub fn summarize_gold(gold: &[EvidenceSnippet], gen: &dyn Generator, max_tokens: u32) -> Result<String> {
    if gold.is_empty() || gold.len() > PACKED_EVIDENCE {
        return Err(Error::InvalidArgument(format!(
            "summarization needs 1 to {PACKED_EVIDENCE} passages, got {}",
            gold.len()
        )));
    }
    let texts: Vec<&str> = gold.iter().map(|e| e.text.as_str()).collect();
    let out = clients::generate(gen, &render_summarize_prompt(&texts), max_tokens, 0.0)?;
    let summary = text::nfc(out.trim());
    if summary.is_empty() {
        return Err(Error::EmptySummary);
    }
    Ok(summary)
}

/// Asks for `num_corruptions` changes to `clean`. Unparseable or no-op outputs
/// are retried up to `retries` more times.
pub fn corrupt_statement(
    clean: &str,
    num_corruptions: u32,
    gen: &dyn Generator,
    retries: u32,
    max_tokens: u32,
) -> Result<CorruptionOutput> {
    if num_corruptions == 0 {
        return Err(Error::InvalidArgument("num_corruptions must be at least 1".into()));
    }
    let prompt = render_corrupt_prompt(clean, num_corruptions);
    let mut last = Error::BadCorruptionFormat;
    for attempt in 0..=retries {
        let out = clients::generate(gen, &prompt, max_tokens, 0.0)?;
        match parse_corruption(&out) {
            Ok((_, corrupted)) if text::nfc(&corrupted) == text::nfc(clean.trim()) => last = Error::NoOpCorruption,
            Ok((reasoning, corrupted)) => {
                return Ok(CorruptionOutput {
                    reasoning,
                    corrupted: text::nfc(&corrupted),
                    num_corruptions,
                })
            }
            Err(e) => last = e,
        }
        tracing::debug!(attempt, error = %last, "corruption rejected");
    }
    Err(last)
}

fn dedupe_scored(scored: Vec<ScoredSnippet>) -> Vec<ScoredSnippet> {
    let mut seen = HashSet::new();
    scored
        .into_iter()
        .filter(|s| seen.insert(text::dedup_key(&s.snippet.text)))
        .collect()
}

/// Runs one seed query end to end. Randomness comes only from
/// `(config.seed, query.id)`.
pub fn build_instance(query: &Query, clients: &Clients, config: &DatagenConfig) -> Result<TrainingInstance> {
    let gen = Metered::new(clients.generator.as_ref());
    let scored = gather_passages(
        &query.text,
        clients.search.as_ref(),
        clients.scorer.as_ref(),
        &config.research(),
    )?;
    if scored.is_empty() {
        return Err(Error::SearchEmpty {
            query_id: query.id.clone(),
        });
    }
    let bins = bin_evidence(
        dedupe_scored(scored),
        config.threshold,
        config.gold_cap.min(PACKED_EVIDENCE),
    )?;
    let gold: Vec<EvidenceSnippet> = bins.gold.iter().map(|s| s.snippet.clone()).collect();
    let clean = summarize_gold(&gold, &gen, config.max_tokens)?;

    let mut rng = seeded_rng(derive_seed(config.seed, &query.id));
    let n = sample_num_corruptions(&mut rng);
    let corruption = corrupt_statement(&clean, n, &gen, config.corruption_retries, config.max_tokens)?;

    let mut instance = pack_instance(
        query,
        &bins,
        &clean,
        &corruption,
        derive_seed(config.seed, &format!("{}/pack", query.id)),
    )?;
    instance.token_usage = gen.usage();
    instance.validate().map_err(|reason| Error::InvalidRecord {
        id: instance.id.clone(),
        reason,
    })?;
    Ok(instance)
}

/// Seed queries from text lines; blank lines are ignored and ids are content
/// hashes of the query text.
pub fn parse_seed_queries(input: &str) -> Result<Vec<Query>> {
    input
        .lines()
        .filter(|l| !text::is_blank(l))
        .map(Query::from_text)
        .collect()
}

/// Validation size: 10% of `n`, rounded half up.
pub fn validation_count(n: usize) -> usize {
    (n + 5) / 10
}

/// Seed-stable split. Both halves keep the input order.
pub fn split_train_valid(
    instances: Vec<TrainingInstance>,
    seed: u64,
) -> (Vec<TrainingInstance>, Vec<TrainingInstance>) {
    let n = instances.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded_rng(derive_seed(seed, "split")));
    let mut is_valid = vec![false; n];
    for &i in &order[..validation_count(n)] {
        is_valid[i] = true;
    }
    let (valid, train): (Vec<_>, Vec<_>) = instances.into_iter().zip(is_valid).partition(|(_, v)| *v);
    (
        train.into_iter().map(|(x, _)| x).collect(),
        valid.into_iter().map(|(x, _)| x).collect(),
    )
}

/// Builds the dataset. Failed seed queries are skipped and reported; the run
/// fails only when nothing is produced.
pub fn generate_dataset(
    seed_queries: &[Query],
    clients: &Clients,
    config: &DatagenConfig,
    cancel: Option<&Cancellation>,
) -> Result<DatasetOutput> {
    if seed_queries.is_empty() {
        return Err(Error::InvalidArgument("no seed queries".into()));
    }
    let mut skipped = Vec::new();
    let mut seen = HashSet::new();
    let mut unique = Vec::new();
    for q in seed_queries {
        if seen.insert(q.id.clone()) {
            unique.push(q.clone());
        } else {
            skipped.push(Skip {
                query_id: q.id.clone(),
                reason: "duplicate seed query".into(),
            });
        }
    }

    let results = bounded_map(&unique, config.parallelism, cancel, |_, q| {
        build_instance(q, clients, config)
    });
    let cancelled = cancel.is_some_and(Cancellation::is_cancelled);

    let mut instances = Vec::new();
    let mut token_counts = TokenUsage::default();
    for (q, result) in unique.iter().zip(results) {
        match result {
            Some(Ok(inst)) => {
                token_counts.add(&inst.token_usage);
                instances.push(inst);
            }
            Some(Err(e)) => {
                tracing::warn!(query = %q.id, error = %e, "seed query skipped");
                skipped.push(Skip {
                    query_id: q.id.clone(),
                    reason: e.to_string(),
                });
            }
            None => {}
        }
    }
    if instances.is_empty() {
        return Err(if cancelled {
            Error::Cancelled
        } else {
            Error::NothingProduced { skipped: skipped.len() }
        });
    }

    let produced = instances.len();
    let (train, valid) = split_train_valid(instances, config.seed);
    Ok(DatasetOutput {
        report: RunReport {
            produced,
            train: train.len(),
            valid: valid.len(),
            skipped,
            token_counts,
            cancelled,
        },
        train,
        valid,
    })
}
