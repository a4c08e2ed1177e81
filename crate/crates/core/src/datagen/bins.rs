use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::research::ScoredSnippet;

/// Passages split into gold (highest scoring, at or above threshold, capped)
/// and negatives (everything else). Both sorted by descending score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceBins {
    pub gold: Vec<ScoredSnippet>,
    pub negatives: Vec<ScoredSnippet>,
    pub threshold: f64,
}

fn by_score_then_id(a: &ScoredSnippet, b: &ScoredSnippet) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.snippet.id.cmp(&b.snippet.id))
}

pub fn bin_evidence(mut scored: Vec<ScoredSnippet>, threshold: f64, gold_cap: usize) -> Result<EvidenceBins> {
    if let Some(bad) = scored.iter().find(|s| !s.score.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "non-finite score for {}",
            bad.snippet.id
        )));
    }
    scored.sort_by(by_score_then_id);
    let n_gold = scored
        .iter()
        .take(gold_cap)
        .take_while(|s| s.score >= threshold)
        .count();
    if n_gold == 0 {
        return Err(Error::NoGold { threshold });
    }
    let negatives = scored.split_off(n_gold);
    Ok(EvidenceBins {
        gold: scored,
        negatives,
        threshold,
    })
}
