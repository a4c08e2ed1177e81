//! Editor input packing and the single fused editing call.

use serde::{Deserialize, Serialize};

use crate::clients::{self, FusedGenerator};
use crate::error::{Error, Result};
use crate::types::{AttributionReport, Claim, TrainingInstance, PACKED_EVIDENCE};

/// Literal layout of one editor segment. Shared by inference packing and the
/// training exporter so both produce identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentTemplate {
    pub claim_prefix: String,
    pub evidence_prefix: String,
    /// Word cap per segment. The claim is never cut; evidence loses its tail.
    pub max_words: usize,
}

impl Default for SegmentTemplate {
    fn default() -> Self {
        Self {
            claim_prefix: "claim: ".into(),
            evidence_prefix: " evidence: ".into(),
            max_words: 512,
        }
    }
}

impl SegmentTemplate {
    pub fn render(&self, claim: &str, evidence: &str) -> String {
        let used = self.claim_prefix.split_whitespace().count()
            + claim.split_whitespace().count()
            + self.evidence_prefix.split_whitespace().count();
        let budget = self.max_words.saturating_sub(used);
        let words: Vec<&str> = evidence.split_whitespace().collect();
        let evidence = if words.len() > budget {
            words[..budget].join(" ")
        } else {
            evidence.to_string()
        };
        format!("{}{claim}{}{evidence}", self.claim_prefix, self.evidence_prefix)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditorInput {
    pub claim: String,
    pub segments: Vec<String>,
}

fn fill_slots<'a>(texts: &[&'a str], slots: usize) -> Vec<&'a str> {
    let last = texts.last().copied().unwrap_or_default();
    (0..slots).map(|i| texts.get(i).copied().unwrap_or(last)).collect()
}

/// One segment per slot, report order; short reports repeat the last snippet.
pub fn pack_editor_input(
    claim: &Claim,
    report: &AttributionReport,
    slots: usize,
    template: &SegmentTemplate,
) -> Result<EditorInput> {
    if report.is_empty() {
        return Err(Error::EmptyReport);
    }
    if slots == 0 {
        return Err(Error::InvalidArgument("slots must be at least 1".into()));
    }
    let texts: Vec<&str> = report.evidence.iter().map(|e| e.text.as_str()).collect();
    Ok(EditorInput {
        claim: claim.text.clone(),
        segments: fill_slots(&texts, slots)
            .into_iter()
            .map(|e| template.render(&claim.text, e))
            .collect(),
    })
}

/// Editor training layout for one instance: segments built from the corrupted
/// statement and the packed evidence, target is the clean statement.
pub fn training_segments(instance: &TrainingInstance, template: &SegmentTemplate) -> (Vec<String>, String) {
    let texts: Vec<&str> = instance.packed.iter().map(|e| e.text.as_str()).collect();
    let segments = fill_slots(&texts, PACKED_EVIDENCE)
        .into_iter()
        .map(|e| template.render(&instance.corrupted, e))
        .collect();
    (segments, instance.clean.clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EditConfig {
    pub slots: usize,
    pub template: SegmentTemplate,
    pub abstention_token: String,
    pub max_tokens: u32,
}

impl Default for EditConfig {
    fn default() -> Self {
        Self {
            slots: PACKED_EVIDENCE,
            template: SegmentTemplate::default(),
            abstention_token: "No edit.".into(),
            max_tokens: 256,
        }
    }
}

/// Produces the revision `y`. An empty reply or the abstention token leaves
/// the claim untouched.
pub fn edit_statement(
    claim: &Claim,
    report: &AttributionReport,
    editor: &dyn FusedGenerator,
    config: &EditConfig,
) -> Result<Claim> {
    let input = pack_editor_input(claim, report, config.slots, &config.template)?;
    let out = clients::generate_fused(editor, &input.segments, config.max_tokens).map_err(|source| Error::Edit {
        claim_id: claim.id.clone(),
        source,
    })?;
    let out = out.trim();
    if out.is_empty() || out == config.abstention_token.trim() {
        return Ok(claim.clone());
    }
    Ok(claim.revised(out))
}
