//! Evidence gathering for a claim: generate queries, search, chunk the pages,
//! keep the best passage per query, and score every query against every kept
//! passage.

mod chunk;
mod queries;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use chunk::{chunk_passages, window_ranges, DEFAULT_STRIDE, DEFAULT_WINDOW, SNAP_WORDS};
pub use queries::{
    generate_queries, parse_queries, query_prompt_header, render_query_prompt, QUERY_TEMPLATE, QUERY_TEMPLATE_VERSION,
};

use crate::clients::{self, Clients, RelevanceScorer, SearchBackend};
use crate::error::{Error, Result};
use crate::par::{bounded_map, Cancellation};
use crate::report::{dedupe_evidence, RelevanceMatrix};
use crate::types::{Claim, EvidenceSnippet, Query};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResearchConfig {
    pub query_cap: usize,
    pub top_pages: usize,
    pub window: usize,
    pub stride: usize,
    pub parallelism: usize,
    pub max_tokens: u32,
}

impl Default for ResearchConfig {
    fn default() -> Self {
        Self {
            query_cap: 5,
            top_pages: 5,
            window: DEFAULT_WINDOW,
            stride: DEFAULT_STRIDE,
            parallelism: 4,
            max_tokens: 256,
        }
    }
}

/// A passage and its relevance to one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSnippet {
    pub snippet: EvidenceSnippet,
    pub score: f64,
}

/// Best passage for a query plus every passage that was scored.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub best: EvidenceSnippet,
    pub all_scored: Vec<ScoredSnippet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryStatus {
    pub query_id: String,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResearchResult {
    pub claim_id: String,
    pub queries: Vec<Query>,
    pub evidence: Vec<EvidenceSnippet>,
    pub matrix: RelevanceMatrix,
    pub statuses: Vec<QueryStatus>,
}

/// Searches, chunks the top pages, and scores every chunk against `text`.
/// Chunks keep their page URL/title; ids are content hashes.
pub fn gather_passages(
    text: &str,
    search: &dyn SearchBackend,
    scorer: &dyn RelevanceScorer,
    config: &ResearchConfig,
) -> Result<Vec<ScoredSnippet>> {
    let pages = clients::search(search, text, config.top_pages)?;
    let mut chunks = Vec::new();
    for (rank, page) in pages.iter().enumerate() {
        let url = if page.url.is_empty() {
            format!("result:{rank}")
        } else {
            page.url.clone()
        };
        let title = (!page.title.is_empty()).then(|| page.title.clone());
        for chunk in chunk_passages(&page.text, config.window, config.stride)? {
            let index = chunk.chunk_index;
            chunks.push(chunk.with_source(Some(url.clone()), title.clone(), index));
        }
    }
    if chunks.is_empty() {
        return Ok(Vec::new());
    }
    let pairs: Vec<(&str, &str)> = chunks.iter().map(|c| (text, c.text.as_str())).collect();
    let scores = clients::score_pairs(scorer, &pairs)?;
    Ok(chunks
        .into_iter()
        .zip(scores)
        .map(|(snippet, score)| ScoredSnippet { snippet, score })
        .collect())
}

/// Finds the most relevant passage for `query` among the top pages.
/// Ties go to the earlier page, then the earlier chunk.
pub fn search_evidence(
    query: &Query,
    search: &dyn SearchBackend,
    scorer: &dyn RelevanceScorer,
    config: &ResearchConfig,
) -> Result<SearchOutcome> {
    let all_scored = gather_passages(&query.text, search, scorer, config)?;
    let mut best: Option<&ScoredSnippet> = None;
    for cand in &all_scored {
        if best.is_none_or(|b| cand.score > b.score) {
            best = Some(cand);
        }
    }
    let Some(best) = best else {
        return Err(Error::SearchEmpty {
            query_id: query.id.clone(),
        });
    };
    let mut snippet = best.snippet.clone();
    snippet.relevance = Some([(query.id.clone(), best.score)].into());
    Ok(SearchOutcome {
        best: snippet,
        all_scored,
    })
}

/// Runs the full research stage for one claim.
pub fn run_research(
    claim: &Claim,
    clients: &Clients,
    config: &ResearchConfig,
    cancel: Option<&Cancellation>,
) -> Result<ResearchResult> {
    let queries = generate_queries(claim, clients.generator.as_ref(), config.query_cap, config.max_tokens)?;

    let outcomes = bounded_map(&queries, config.parallelism, cancel, |_, q| {
        search_evidence(q, clients.search.as_ref(), clients.scorer.as_ref(), config)
    });
    if cancel.is_some_and(Cancellation::is_cancelled) {
        return Err(Error::Cancelled);
    }

    let mut statuses = Vec::with_capacity(queries.len());
    let mut bests = Vec::new();
    for (q, outcome) in queries.iter().zip(outcomes) {
        match outcome.expect("not cancelled") {
            Ok(found) => {
                statuses.push(QueryStatus {
                    query_id: q.id.clone(),
                    ok: true,
                    error: None,
                });
                bests.push(found.best);
            }
            Err(e) => {
                tracing::warn!(claim = %claim.id, query = %q.id, error = %e, "query failed");
                statuses.push(QueryStatus {
                    query_id: q.id.clone(),
                    ok: false,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    if bests.is_empty() {
        return Err(Error::AllSearchesFailed {
            claim_id: claim.id.clone(),
        });
    }

    let mut evidence = dedupe_evidence(bests);
    let pairs: Vec<(&str, &str)> = queries
        .iter()
        .flat_map(|q| evidence.iter().map(move |e| (q.text.as_str(), e.text.as_str())))
        .collect();
    let flat = clients::score_pairs(clients.scorer.as_ref(), &pairs)?;
    let scores: Vec<Vec<f64>> = flat.chunks(evidence.len()).map(<[f64]>::to_vec).collect();

    for (j, e) in evidence.iter_mut().enumerate() {
        let rel: BTreeMap<String, f64> = queries
            .iter()
            .zip(&scores)
            .map(|(q, row)| (q.id.clone(), row[j]))
            .collect();
        e.relevance = Some(rel);
    }
    let matrix = RelevanceMatrix::new(queries.clone(), evidence.clone(), scores)?;
    Ok(ResearchResult {
        claim_id: claim.id.clone(),
        queries,
        evidence,
        matrix,
        statuses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clients::{ClientResult, SearchResult};

    struct Pages(Vec<SearchResult>);

    impl SearchBackend for Pages {
        fn search(&self, _query: &str, _top_k: usize) -> ClientResult<Vec<SearchResult>> {
            Ok(self.0.clone())
        }
    }

    fn page(url: &str, text: &str) -> SearchResult {
        SearchResult {
            url: url.into(),
            title: String::new(),
            text: text.into(),
        }
    }

    fn small_windows() -> ResearchConfig {
        ResearchConfig {
            window: 3,
            stride: 3,
            ..ResearchConfig::default()
        }
    }

    #[test]
    fn argmax_chunk_wins() {
        let search = Pages(vec![page("u", "Alpha one x. Beta two y. Gamma three z.")]);
        let scorer = |_: &str, p: &str| match p {
            p if p.starts_with("Alpha") => 0.1,
            p if p.starts_with("Beta") => 0.7,
            _ => 0.3,
        };
        let q = Query::new("q", "anything").unwrap();
        let out = search_evidence(&q, &search, &scorer, &small_windows()).unwrap();
        assert_eq!(out.best.text, "Beta two y.");
        assert_eq!(out.best.chunk_index, 1);
        assert_eq!(out.best.relevance.as_ref().unwrap()["q"], 0.7);
        assert_eq!(out.all_scored.len(), 3);
    }

    #[test]
    fn tie_goes_to_first_page() {
        let search = Pages(vec![page("first", "aaa bbb ccc"), page("second", "ddd eee fff")]);
        let scorer = |_: &str, _: &str| 0.5;
        let q = Query::new("q", "anything").unwrap();
        let out = search_evidence(&q, &search, &scorer, &small_windows()).unwrap();
        assert_eq!(out.best.url.as_deref(), Some("first"));
    }

    #[test]
    fn no_pages_is_search_empty() {
        let search = Pages(vec![]);
        let scorer = |_: &str, _: &str| 0.5;
        let q = Query::new("q7", "anything").unwrap();
        match search_evidence(&q, &search, &scorer, &small_windows()) {
            Err(Error::SearchEmpty { query_id }) => assert_eq!(query_id, "q7"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
