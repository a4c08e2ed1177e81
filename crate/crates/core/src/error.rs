use std::io;

use crate::clients::ClientError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("text is empty after trimming")]
    EmptyText,

    #[error("invalid record {id}: {reason}")]
    InvalidRecord { id: String, reason: String },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("coverage is undefined for an empty subset")]
    EmptySubset,

    #[error("no evidence to select from")]
    EmptyEvidence,

    #[error("attribution report is empty")]
    EmptyReport,

    #[error("query generation produced no parseable queries for claim {claim_id}")]
    NoQueries { claim_id: String },

    #[error("search returned no usable pages for query {query_id}")]
    SearchEmpty { query_id: String },

    #[error("every search failed for claim {claim_id}")]
    AllSearchesFailed { claim_id: String },

    #[error("no passage reached the gold threshold {threshold}")]
    NoGold { threshold: f64 },

    #[error("summarization returned an empty statement")]
    EmptySummary,

    #[error("corruption output has no `Corruption:` line")]
    BadCorruptionFormat,

    #[error("corruption output is identical to the clean statement")]
    NoOpCorruption,

    #[error("no instances were produced ({skipped} seed queries skipped)")]
    NothingProduced { skipped: usize },

    #[error("cancelled")]
    Cancelled,

    #[error("editing claim {claim_id} failed: {source}")]
    Edit {
        claim_id: String,
        #[source]
        source: ClientError,
    },

    #[error(transparent)]
    Client(#[from] ClientError),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
