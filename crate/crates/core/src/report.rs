//! Attribution-report construction by coverage maximization.
//!
//! Coverage of an evidence subset is the sum, over queries, of the best
//! relevance any chosen snippet achieves for that query. The objective is
//! monotone submodular, so greedy selection is within `1 - 1/e` of optimal.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::dedup_key;
use crate::types::{AttributionReport, EvidenceSnippet, Query};

/// Relevance of every evidence snippet to every query; `scores[i][j]` is
/// query `i` against evidence `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceMatrix {
    pub queries: Vec<Query>,
    pub evidence: Vec<EvidenceSnippet>,
    pub scores: Vec<Vec<f64>>,
}

impl RelevanceMatrix {
    pub fn new(queries: Vec<Query>, evidence: Vec<EvidenceSnippet>, scores: Vec<Vec<f64>>) -> Result<Self> {
        if scores.len() != queries.len() {
            return Err(Error::InvalidArgument(format!(
                "{} score rows for {} queries",
                scores.len(),
                queries.len()
            )));
        }
        for (i, row) in scores.iter().enumerate() {
            if row.len() != evidence.len() {
                return Err(Error::InvalidArgument(format!(
                    "row {i} has {} scores for {} evidence snippets",
                    row.len(),
                    evidence.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("row {i} has non-finite score {v}")));
            }
        }
        Ok(Self {
            queries,
            evidence,
            scores,
        })
    }

    pub fn num_queries(&self) -> usize {
        self.queries.len()
    }

    pub fn num_evidence(&self) -> usize {
        self.evidence.len()
    }
}

/// Sum over queries of the best score within `subset`.
pub fn coverage(matrix: &RelevanceMatrix, subset: &[usize]) -> Result<f64> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    if let Some(bad) = subset.iter().find(|&&j| j >= matrix.num_evidence()) {
        return Err(Error::InvalidArgument(format!("evidence index {bad} out of range")));
    }
    Ok(matrix
        .scores
        .iter()
        .map(|row| subset.iter().map(|&j| row[j]).fold(f64::NEG_INFINITY, f64::max))
        .sum())
}

/// Drops snippets whose normalized text was already seen, keeping the first.
pub fn dedupe_evidence(evidence: Vec<EvidenceSnippet>) -> Vec<EvidenceSnippet> {
    let mut seen = HashSet::new();
    evidence
        .into_iter()
        .filter(|e| seen.insert(dedup_key(&e.text)))
        .collect()
}

/// Greedy coverage maximization. Returns chosen indices in selection order.
///
/// The first pick is the snippet with the largest total relevance; each
/// later pick adds the largest coverage gain, ties going to the lowest index.
/// Selection stops at `budget` picks or as soon as no snippet adds coverage.
pub fn greedy_select(matrix: &RelevanceMatrix, budget: usize) -> Result<Vec<usize>> {
    let n = matrix.num_evidence();
    if n == 0 {
        return Err(Error::EmptyEvidence);
    }
    if matrix.num_queries() == 0 {
        return Err(Error::InvalidArgument("relevance matrix has no queries".into()));
    }
    if budget == 0 {
        return Err(Error::InvalidArgument("budget must be at least 1".into()));
    }

    let column_sum = |j: usize| matrix.scores.iter().map(|row| row[j]).sum::<f64>();
    let mut first = 0;
    let mut first_value = column_sum(0);
    for j in 1..n {
        let v = column_sum(j);
        if v > first_value {
            first = j;
            first_value = v;
        }
    }

    let mut chosen = vec![first];
    let mut taken = vec![false; n];
    taken[first] = true;
    let mut best: Vec<f64> = matrix.scores.iter().map(|row| row[first]).collect();

    while chosen.len() < budget.min(n) {
        let mut pick = None;
        let mut pick_gain = 0.0;
        for j in (0..n).filter(|&j| !taken[j]) {
            let gain: f64 = matrix
                .scores
                .iter()
                .zip(&best)
                .map(|(row, cur)| (row[j] - cur).max(0.0))
                .sum();
            if gain > pick_gain {
                pick = Some(j);
                pick_gain = gain;
            }
        }
        let Some(j) = pick else { break };
        taken[j] = true;
        chosen.push(j);
        for (cur, row) in best.iter_mut().zip(&matrix.scores) {
            *cur = cur.max(row[j]);
        }
    }
    Ok(chosen)
}

/// Builds the attribution report: greedy selection under `budget`, evidence in
/// selection order, coverage of the chosen subset.
pub fn select_report(matrix: &RelevanceMatrix, budget: usize) -> Result<AttributionReport> {
    let chosen = greedy_select(matrix, budget)?;
    let value = coverage(matrix, &chosen)?;
    let evidence = chosen.iter().map(|&j| matrix.evidence[j].clone()).collect();
    AttributionReport::new(evidence, value)
}
