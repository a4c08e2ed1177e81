//! Domain value types. Everything here is immutable once built and safe to share
//! across threads.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{self, de_nfc, de_nfc_opt};

/// Largest attribution report built by default.
pub const DEFAULT_REPORT_BUDGET: usize = 5;
/// Evidence slots per training instance and per editor input.
pub const PACKED_EVIDENCE: usize = 4;

/// A statement to attribute and possibly revise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub id: String,
    #[serde(deserialize_with = "de_nfc")]
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none", deserialize_with = "de_nfc_opt")]
    pub context: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_tag: Option<String>,
}

impl Claim {
    pub fn new(id: impl Into<String>, text: &str) -> Result<Self> {
        if text::is_blank(text) {
            return Err(Error::EmptyText);
        }
        Ok(Self {
            id: id.into(),
            text: text::nfc(text),
            context: None,
            dataset_tag: None,
        })
    }

    /// Builds a claim whose id is derived from its text.
    pub fn from_text(text: &str) -> Result<Self> {
        Self::new(text::content_id(text), text)
    }

    pub fn with_context(mut self, context: &str) -> Self {
        self.context = Some(text::nfc(context));
        self
    }

    /// The same claim carrying different text; used for revisions.
    pub fn revised(&self, text: &str) -> Self {
        Self {
            text: text::nfc(text),
            ..self.clone()
        }
    }
}

/// A passage of evidence together with where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceSnippet {
    pub id: String,
    #[serde(deserialize_with = "de_nfc")]
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default)]
    pub chunk_index: usize,
    /// Relevance per query id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relevance: Option<BTreeMap<String, f64>>,
}

impl EvidenceSnippet {
    pub fn new(id: impl Into<String>, text: &str) -> Result<Self> {
        if text::is_blank(text) {
            return Err(Error::EmptyText);
        }
        Ok(Self {
            id: id.into(),
            text: text::nfc(text),
            url: None,
            title: None,
            chunk_index: 0,
            relevance: None,
        })
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::new(text::content_id(text), text)
    }

    pub fn with_source(mut self, url: Option<String>, title: Option<String>, chunk_index: usize) -> Self {
        self.url = url;
        self.title = title;
        self.chunk_index = chunk_index;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    #[serde(deserialize_with = "de_nfc")]
    pub text: String,
}

impl Query {
    pub fn new(id: impl Into<String>, text: &str) -> Result<Self> {
        if text::is_blank(text) {
            return Err(Error::EmptyText);
        }
        Ok(Self {
            id: id.into(),
            text: text::nfc(text),
        })
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::new(text::content_id(text), text)
    }
}

/// The evidence subset chosen to ground a claim, in selection order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionReport {
    pub evidence: Vec<EvidenceSnippet>,
    pub coverage: f64,
}

impl AttributionReport {
    pub fn new(evidence: Vec<EvidenceSnippet>, coverage: f64) -> Result<Self> {
        let report = Self { evidence, coverage };
        report.check().map_err(|reason| Error::InvalidRecord {
            id: "report".into(),
            reason,
        })?;
        Ok(report)
    }

    pub fn len(&self) -> usize {
        self.evidence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.evidence.is_empty()
    }

    fn check(&self) -> Result<(), String> {
        if self.evidence.is_empty() {
            return Err("report has no evidence".into());
        }
        if !self.coverage.is_finite() {
            return Err("coverage is not finite".into());
        }
        let mut seen = HashSet::new();
        for e in &self.evidence {
            check_snippet(e)?;
            if !seen.insert(text::dedup_key(&e.text)) {
                return Err(format!("duplicate evidence text in snippet {}", e.id));
            }
        }
        Ok(())
    }
}

/// Edit categories. A record carries a set of these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EditCategory {
    Huge,
    Bad,
    Unnecessary,
    Good,
    Other,
}

impl EditCategory {
    pub const ALL: [EditCategory; 5] = [
        EditCategory::Huge,
        EditCategory::Bad,
        EditCategory::Unnecessary,
        EditCategory::Good,
        EditCategory::Other,
    ];
}

impl fmt::Display for EditCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            EditCategory::Huge => "Huge",
            EditCategory::Bad => "Bad",
            EditCategory::Unnecessary => "Unnecessary",
            EditCategory::Good => "Good",
            EditCategory::Other => "Other",
        };
        f.write_str(name)
    }
}

/// Checks the category algebra: Unnecessary implies Bad, Good excludes Bad,
/// Other stands alone, and the set is never empty.
pub fn check_categories(categories: &BTreeSet<EditCategory>) -> Result<(), String> {
    use EditCategory::*;
    if categories.is_empty() {
        return Err("empty category set".into());
    }
    if categories.contains(&Unnecessary) && !categories.contains(&Bad) {
        return Err("Unnecessary without Bad".into());
    }
    if categories.contains(&Good) && categories.contains(&Bad) {
        return Err("Good and Bad together".into());
    }
    if categories.contains(&Other) && categories.len() > 1 {
        return Err("Other combined with another category".into());
    }
    Ok(())
}

/// One scored edit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditRecord {
    pub original: Claim,
    pub revised: Claim,
    pub report: AttributionReport,
    pub attr_before: f64,
    pub attr_after: f64,
    pub preservation: f64,
    pub f1_ap: f64,
    pub category: BTreeSet<EditCategory>,
}

impl EditRecord {
    /// Assembles a record, rejecting out-of-range scores and inconsistent categories.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        original: Claim,
        revised: Claim,
        report: AttributionReport,
        attr_before: f64,
        attr_after: f64,
        preservation: f64,
        f1_ap: f64,
        category: BTreeSet<EditCategory>,
    ) -> Result<Self> {
        let record = Self {
            original,
            revised,
            report,
            attr_before,
            attr_after,
            preservation,
            f1_ap,
            category,
        };
        record.validate().map_err(|reason| Error::InvalidRecord {
            id: record.original.id.clone(),
            reason,
        })?;
        Ok(record)
    }
}

/// Approximate token accounting for generation calls (whitespace-delimited words).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub calls: u64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl TokenUsage {
    pub fn record(&mut self, prompt: &str, completion: &str) {
        self.calls += 1;
        self.prompt_tokens += prompt.split_whitespace().count() as u64;
        self.completion_tokens += completion.split_whitespace().count() as u64;
    }

    pub fn add(&mut self, other: &TokenUsage) {
        self.calls += other.calls;
        self.prompt_tokens += other.prompt_tokens;
        self.completion_tokens += other.completion_tokens;
    }

    pub fn is_zero(&self) -> bool {
        *self == TokenUsage::default()
    }
}

/// One editor-training example: corrupted statement, clean target, and the
/// four evidence passages the editor sees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingInstance {
    pub id: String,
    pub seed_query: Query,
    #[serde(deserialize_with = "de_nfc")]
    pub clean: String,
    #[serde(deserialize_with = "de_nfc")]
    pub corrupted: String,
    pub gold: Vec<EvidenceSnippet>,
    pub negatives: Vec<EvidenceSnippet>,
    pub packed: Vec<EvidenceSnippet>,
    pub corruption_reasoning: String,
    pub num_corruptions: u32,
    /// Set when there were too few passages and `packed` repeats one.
    #[serde(default)]
    pub padded: bool,
    #[serde(default, skip_serializing_if = "TokenUsage::is_zero")]
    pub token_usage: TokenUsage,
}

/// Types that can be written to and read from a JSONL dataset.
pub trait Record: Serialize + for<'de> Deserialize<'de> {
    fn record_id(&self) -> &str;

    /// Type invariants. The message names the offending field.
    fn validate(&self) -> Result<(), String>;
}

fn check_finite(field: &str, value: f64) -> Result<(), String> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(format!("{field} is not finite"))
    }
}

fn check_unit(field: &str, value: f64) -> Result<(), String> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(format!("{field} = {value} is outside [0, 1]"))
    }
}

fn check_snippet(e: &EvidenceSnippet) -> Result<(), String> {
    if text::is_blank(&e.text) {
        return Err(format!("evidence {} has empty text", e.id));
    }
    if let Some(rel) = &e.relevance {
        for (q, s) in rel {
            check_finite(&format!("relevance[{q}] of {}", e.id), *s)?;
        }
    }
    Ok(())
}

impl Record for Claim {
    fn record_id(&self) -> &str {
        &self.id
    }

    fn validate(&self) -> Result<(), String> {
        if text::is_blank(&self.text) {
            return Err("text is empty".into());
        }
        Ok(())
    }
}

impl Record for EvidenceSnippet {
    fn record_id(&self) -> &str {
        &self.id
    }

    fn validate(&self) -> Result<(), String> {
        check_snippet(self)
    }
}

impl Record for Query {
    fn record_id(&self) -> &str {
        &self.id
    }

    fn validate(&self) -> Result<(), String> {
        if text::is_blank(&self.text) {
            return Err("text is empty".into());
        }
        Ok(())
    }
}

impl Record for AttributionReport {
    fn record_id(&self) -> &str {
        self.evidence.first().map(|e| e.id.as_str()).unwrap_or("")
    }

    fn validate(&self) -> Result<(), String> {
        self.check()
    }
}

impl Record for EditRecord {
    fn record_id(&self) -> &str {
        &self.original.id
    }

    fn validate(&self) -> Result<(), String> {
        self.original.validate().map_err(|e| format!("original: {e}"))?;
        self.revised.validate().map_err(|e| format!("revised: {e}"))?;
        self.report.check()?;
        check_unit("attr_before", self.attr_before)?;
        check_unit("attr_after", self.attr_after)?;
        check_unit("preservation", self.preservation)?;
        check_unit("f1_ap", self.f1_ap)?;
        check_categories(&self.category)
    }
}

impl Record for TrainingInstance {
    fn record_id(&self) -> &str {
        &self.id
    }

    fn validate(&self) -> Result<(), String> {
        if text::is_blank(&self.clean) {
            return Err("clean is empty".into());
        }
        if text::is_blank(&self.corrupted) {
            return Err("corrupted is empty".into());
        }
        if self.clean == self.corrupted {
            return Err("corrupted equals clean".into());
        }
        if self.num_corruptions < 1 {
            return Err("num_corruptions must be at least 1".into());
        }
        if self.gold.is_empty() || self.gold.len() > PACKED_EVIDENCE {
            return Err(format!("gold has {} snippets", self.gold.len()));
        }
        if self.packed.len() != PACKED_EVIDENCE {
            return Err(format!("packed has {} snippets", self.packed.len()));
        }
        for e in self.gold.iter().chain(&self.negatives).chain(&self.packed) {
            check_snippet(e)?;
        }
        let packed: HashSet<&str> = self.packed.iter().map(|e| e.id.as_str()).collect();
        if let Some(missing) = self.gold.iter().find(|g| !packed.contains(g.id.as_str())) {
            return Err(format!("gold snippet {} missing from packed", missing.id));
        }
        let gold: HashSet<&str> = self.gold.iter().map(|e| e.id.as_str()).collect();
        if let Some(both) = self.negatives.iter().find(|n| gold.contains(n.id.as_str())) {
            return Err(format!("snippet {} is both gold and negative", both.id));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snippet(id: &str, text: &str) -> EvidenceSnippet {
        EvidenceSnippet::new(id, text).unwrap()
    }

    #[test]
    fn claim_rejects_blank_text() {
        assert!(matches!(Claim::new("a", "  \n"), Err(Error::EmptyText)));
    }

    #[test]
    fn claim_ids_from_text_are_hashes() {
        let c = Claim::from_text("The sky is blue.").unwrap();
        assert_eq!(c.id, text::content_id("The sky is blue."));
    }

    #[test]
    fn report_rejects_duplicate_text() {
        let err = AttributionReport::new(vec![snippet("a", "Same text."), snippet("b", "same   TEXT.")], 1.0);
        assert!(err.is_err());
        assert!(AttributionReport::new(vec![], 0.0).is_err());
    }

    #[test]
    fn category_algebra() {
        use EditCategory::*;
        let set = |v: &[EditCategory]| v.iter().copied().collect::<BTreeSet<_>>();
        assert!(check_categories(&set(&[Bad, Unnecessary])).is_ok());
        assert!(check_categories(&set(&[Unnecessary])).is_err());
        assert!(check_categories(&set(&[Good, Bad])).is_err());
        assert!(check_categories(&set(&[Huge, Good])).is_ok());
        assert!(check_categories(&set(&[])).is_err());
    }

    #[test]
    fn edit_record_rejects_out_of_range() {
        let c = Claim::new("c", "x").unwrap();
        let r = AttributionReport::new(vec![snippet("e", "evidence")], 1.0).unwrap();
        let cats: BTreeSet<_> = [EditCategory::Other].into();
        assert!(EditRecord::new(c.clone(), c.clone(), r.clone(), 0.2, 1.2, 1.0, 0.5, cats.clone()).is_err());
        assert!(EditRecord::new(c.clone(), c, r, 0.2, 0.2, 1.0, 0.5, cats).is_ok());
    }
}
