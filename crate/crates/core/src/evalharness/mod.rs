//! Batch evaluation: research, report selection, editing, and scoring for a
//! set of claims, with aggregate tables.

mod render;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

pub use render::{render_report, ReportFormat};

use crate::clients::{Clients, EntailmentScorer};
use crate::error::{Error, Result};
use crate::metrics::{categorize_edit, f1_ap, preservation, statement_attribution};
use crate::par::{bounded_map, Cancellation};
use crate::report::select_report;
use crate::research::{run_research, QueryStatus, ResearchConfig};
use crate::revision::{edit_statement, EditConfig};
use crate::types::{AttributionReport, Claim, EditCategory, EditRecord, EvidenceSnippet, Query, DEFAULT_REPORT_BUDGET};

/// Claims whose attribution after editing falls below this are flagged.
pub const LOW_ATTRIBUTION: f64 = 0.30;
/// Share of failed claims above which a run counts as partially failed.
pub const FAILURE_TOLERANCE: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub research: ResearchConfig,
    pub budget: usize,
    pub edit: EditConfig,
    pub parallelism: usize,
    pub low_attr_threshold: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            research: ResearchConfig::default(),
            budget: DEFAULT_REPORT_BUDGET,
            edit: EditConfig::default(),
            parallelism: 4,
            low_attr_threshold: LOW_ATTRIBUTION,
        }
    }
}

/// Intermediate state of one edited claim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimTrace {
    pub queries: Vec<Query>,
    pub statuses: Vec<QueryStatus>,
    pub evidence: Vec<EvidenceSnippet>,
    pub report: AttributionReport,
    pub revised: Claim,
}

/// Research, select a report, and edit once.
pub fn edit_claim(
    claim: &Claim,
    clients: &Clients,
    config: &EvalConfig,
    cancel: Option<&Cancellation>,
) -> Result<ClaimTrace> {
    let research = run_research(claim, clients, &config.research, cancel)?;
    let report = select_report(&research.matrix, config.budget)?;
    let revised = edit_statement(claim, &report, clients.editor.as_ref(), &config.edit)?;
    Ok(ClaimTrace {
        queries: research.queries,
        statuses: research.statuses,
        evidence: research.evidence,
        report,
        revised,
    })
}

/// Scores an edit against its report. An unchanged claim reuses the
/// before-score, so abstentions score identically before and after.
pub fn score_edit(
    original: &Claim,
    revised: &Claim,
    report: &AttributionReport,
    nli: &dyn EntailmentScorer,
) -> Result<EditRecord> {
    let before = statement_attribution(original, report, nli)?.overall;
    let after = if revised.text == original.text {
        before
    } else {
        statement_attribution(revised, report, nli)?.overall
    };
    let pres = preservation(&original.text, &revised.text);
    let f1 = f1_ap(after, pres)?;
    EditRecord::new(
        original.clone(),
        revised.clone(),
        report.clone(),
        before,
        after,
        pres,
        f1,
        categorize_edit(before, after, pres),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub attr_before_mean: f64,
    pub attr_after_mean: f64,
    pub pres_mean: f64,
    /// F1_AP of the mean attribution and mean preservation.
    pub f1_of_means: f64,
    /// Mean of per-claim F1_AP.
    pub mean_of_f1s: f64,
}

impl Aggregates {
    pub fn from_records(records: &[EditRecord]) -> Result<Option<Self>> {
        if records.is_empty() {
            return Ok(None);
        }
        let n = records.len() as f64;
        let mean = |f: fn(&EditRecord) -> f64| records.iter().map(f).sum::<f64>() / n;
        let attr_after_mean = mean(|r| r.attr_after);
        let pres_mean = mean(|r| r.preservation);
        Ok(Some(Self {
            attr_before_mean: mean(|r| r.attr_before),
            attr_after_mean,
            pres_mean,
            f1_of_means: f1_ap(attr_after_mean, pres_mean)?,
            mean_of_f1s: mean(|r| r.f1_ap),
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub claim_id: String,
    pub reason: String,
}

/// A low-attribution claim with everything needed to diagnose it by hand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedClaim {
    pub claim_id: String,
    pub attr_after: f64,
    pub trace: ClaimTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_claim: Vec<EditRecord>,
    pub aggregates: Option<Aggregates>,
    pub category_counts: BTreeMap<EditCategory, usize>,
    pub low_attr_flags: Vec<String>,
    pub flagged: Vec<FlaggedClaim>,
    pub failures: Vec<Failure>,
    pub total: usize,
    pub cancelled: bool,
}

impl EvalReport {
    /// 0 when fine, 1 when more than [`FAILURE_TOLERANCE`] of claims failed
    /// or the run was cancelled, 2 when nothing could be evaluated.
    pub fn exit_code(&self) -> i32 {
        if self.per_claim.is_empty() {
            2
        } else if self.cancelled || self.failures.len() as f64 > FAILURE_TOLERANCE * self.total as f64 {
            1
        } else {
            0
        }
    }
}

pub fn count_categories(records: &[EditRecord]) -> BTreeMap<EditCategory, usize> {
    let mut counts: BTreeMap<EditCategory, usize> = EditCategory::ALL.iter().map(|&c| (c, 0)).collect();
    for c in records.iter().flat_map(|r| &r.category) {
        *counts.entry(*c).or_default() += 1;
    }
    counts
}

/// Evaluates every claim. Per-claim failures are recorded and excluded from
/// the aggregates.
pub fn evaluate(
    claims: &[Claim],
    clients: &Clients,
    config: &EvalConfig,
    cancel: Option<&Cancellation>,
) -> Result<EvalReport> {
    if claims.is_empty() {
        return Err(Error::InvalidArgument("no claims to evaluate".into()));
    }
    let mut seen = HashSet::new();
    let duplicate: Vec<bool> = claims.iter().map(|c| !seen.insert(c.id.as_str())).collect();

    let outcomes = bounded_map(claims, config.parallelism, cancel, |i, claim| {
        if duplicate[i] {
            return Err(Error::InvalidArgument(format!("duplicate claim id {}", claim.id)));
        }
        let trace = edit_claim(claim, clients, config, cancel)?;
        let record = score_edit(claim, &trace.revised, &trace.report, clients.nli.as_ref())?;
        Ok((record, trace))
    });

    let mut done = Vec::new();
    let mut failures = Vec::new();
    for (claim, outcome) in claims.iter().zip(outcomes) {
        match outcome {
            Some(Ok(pair)) => done.push(pair),
            Some(Err(Error::Cancelled)) | None => {}
            Some(Err(e)) => {
                tracing::warn!(claim = %claim.id, error = %e, "claim failed");
                failures.push(Failure {
                    claim_id: claim.id.clone(),
                    reason: e.to_string(),
                });
            }
        }
    }
    done.sort_by(|a, b| a.0.original.id.cmp(&b.0.original.id));
    failures.sort_by(|a, b| a.claim_id.cmp(&b.claim_id));

    let mut low_attr_flags = Vec::new();
    let mut flagged = Vec::new();
    for (record, trace) in &done {
        if record.attr_after < config.low_attr_threshold {
            low_attr_flags.push(record.original.id.clone());
            flagged.push(FlaggedClaim {
                claim_id: record.original.id.clone(),
                attr_after: record.attr_after,
                trace: trace.clone(),
            });
        }
    }
    let per_claim: Vec<EditRecord> = done.into_iter().map(|(r, _)| r).collect();
    Ok(EvalReport {
        aggregates: Aggregates::from_records(&per_claim)?,
        category_counts: count_categories(&per_claim),
        per_claim,
        low_attr_flags,
        flagged,
        failures,
        total: claims.len(),
        cancelled: cancel.is_some_and(Cancellation::is_cancelled),
    })
}
