//! Evidence attribution and revision for generated text.
//!
//! The crate covers four jobs:
//!
//! * [`research`]: turn a claim into search queries, fetch and chunk pages, and
//!   score passages for relevance.
//! * [`report`] and [`revision`]: pick a small covering evidence set and ask a
//!   fused editor for a revised statement.
//! * [`datagen`]: build editor-training data by summarizing retrieved evidence
//!   and corrupting the summary.
//! * [`metrics`] and [`evalharness`]: attribution, preservation, their
//!   harmonic mean, and an edit taxonomy, aggregated over an evaluation set.
//!
//! External services sit behind the traits in [`clients`], with HTTP,
//! fixture-backed, and in-memory implementations.

pub mod clients;
pub mod datagen;
pub mod dataset;
pub mod error;
pub mod evalharness;
pub mod metrics;
pub mod par;
pub mod report;
pub mod research;
pub mod revision;
mod template;
pub mod text;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    AttributionReport, Claim, EditCategory, EditRecord, EvidenceSnippet, Query, Record, TokenUsage, TrainingInstance,
    DEFAULT_REPORT_BUDGET, PACKED_EVIDENCE,
};
