use serde::{Deserialize, Serialize};

use super::sentences::split_sentences;
use crate::clients::{self, EntailmentScorer};
use crate::error::{Error, Result};
use crate::types::{AttributionReport, Claim};

/// Attribution of a statement: per-sentence maxima and their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionScore {
    pub per_sentence: Vec<f64>,
    pub overall: f64,
}

/// Highest entailment score of `sentence` over the report's evidence.
pub fn sentence_attribution(sentence: &str, report: &AttributionReport, nli: &dyn EntailmentScorer) -> Result<f64> {
    if report.is_empty() {
        return Err(Error::EmptyReport);
    }
    let pairs: Vec<(&str, &str)> = report.evidence.iter().map(|e| (e.text.as_str(), sentence)).collect();
    let scores = clients::nli(nli, &pairs)?;
    Ok(scores.into_iter().fold(0.0, f64::max))
}

/// Mean over sentences of [`sentence_attribution`].
pub fn statement_attribution(
    claim: &Claim,
    report: &AttributionReport,
    nli: &dyn EntailmentScorer,
) -> Result<AttributionScore> {
    text_attribution(&claim.text, report, nli)
}

/// [`statement_attribution`] on raw text. All (evidence, sentence) pairs go out
/// in one batch and are gathered back by index.
pub fn text_attribution(
    text: &str,
    report: &AttributionReport,
    nli: &dyn EntailmentScorer,
) -> Result<AttributionScore> {
    let split = split_sentences(text)?;
    if report.is_empty() {
        return Err(Error::EmptyReport);
    }
    let n_evidence = report.len();
    let pairs: Vec<(&str, &str)> = split
        .sentences
        .iter()
        .flat_map(|s| report.evidence.iter().map(move |e| (e.text.as_str(), s.as_str())))
        .collect();
    let scores = clients::nli(nli, &pairs)?;
    let per_sentence: Vec<f64> = scores
        .chunks(n_evidence)
        .map(|row| row.iter().copied().fold(0.0, f64::max))
        .collect();
    let overall = per_sentence.iter().sum::<f64>() / per_sentence.len() as f64;
    Ok(AttributionScore { per_sentence, overall })
}
