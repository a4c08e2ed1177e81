//! Clients backed by a directory of JSON fixtures, for offline runs.
//!
//! Layout (every file optional):
//!
//! * `search.jsonl`: `{"query_substring": "...", "pages": [{"url", "title", "text"}]}`
//! * `generate.jsonl`: `{"prompt_substring": "...", "text": "..."}`
//! * `edits.jsonl`: `{"claim_substring": "...", "text": "..."}`
//! * `mock.json`: `{"strict": false, "scorer": "overlap", "nli": "overlap"}`
//!
//! Rules are tried in file order and the first match wins. Without a matching
//! rule the generator falls back to simple text heuristics (unless strict),
//! the editor abstains, and search returns nothing.

use std::fs;
use std::io::ErrorKind;
use std::path::Path;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::mock::{HashNli, HashScorer, OverlapNli, OverlapScorer};
use super::{
    ClientError, ClientResult, Clients, EntailmentScorer, FusedGenerator, FusedRequest, GenerateRequest, Generator,
    RelevanceScorer, SearchBackend, SearchResult,
};
use crate::datagen::{corrupt_prompt_header, summarize_prompt_header};
use crate::error::{Error, Result};
use crate::metrics::split_sentences;
use crate::research::query_prompt_header;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchFixture {
    pub query_substring: String,
    pub pages: Vec<SearchResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateRule {
    pub prompt_substring: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EditRule {
    pub claim_substring: String,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MockKind {
    #[default]
    Overlap,
    Hash,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MockOptions {
    pub strict: bool,
    pub scorer: MockKind,
    pub nli: MockKind,
}

#[derive(Debug, Clone, Default)]
pub struct FixtureSearch {
    pub fixtures: Vec<SearchFixture>,
}

impl SearchBackend for FixtureSearch {
    fn search(&self, query: &str, top_k: usize) -> ClientResult<Vec<SearchResult>> {
        let query = query.to_lowercase();
        Ok(self
            .fixtures
            .iter()
            .find(|f| query.contains(&f.query_substring.to_lowercase()))
            .map(|f| f.pages.iter().take(top_k).cloned().collect())
            .unwrap_or_default())
    }
}

#[derive(Debug, Clone, Default)]
pub struct FixtureGenerator {
    pub rules: Vec<GenerateRule>,
    pub strict: bool,
}

fn between<'a>(text: &'a str, start: &str, end: &str) -> Option<&'a str> {
    let from = text.rfind(start)? + start.len();
    let rest = &text[from..];
    Some(rest.find(end).map_or(rest, |i| &rest[..i]))
}

fn first_sentence(text: &str) -> String {
    split_sentences(text)
        .ok()
        .and_then(|s| s.sentences.into_iter().next())
        .unwrap_or_default()
}

fn heuristic_queries(prompt: &str) -> String {
    let statement = between(prompt, "Statement: ", "\n\nQueries:").unwrap_or_default();
    split_sentences(statement)
        .map(|s| s.sentences.join("\n"))
        .unwrap_or_default()
}

fn heuristic_summary(prompt: &str) -> String {
    let body = prompt
        .split_once("\n\n")
        .and_then(|(_, rest)| rest.rsplit_once("\n\nSummary:"))
        .map_or("", |(body, _)| body);
    body.lines()
        .map(first_sentence)
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Bumps the first `n` integers by one; with no integers, swaps the last word.
fn heuristic_corruption(prompt: &str) -> String {
    let target = between(prompt, "Text: ", "\n").unwrap_or_default().trim();
    let n: usize = between(prompt, "Number of things to change: ", ".")
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(1);

    let mut out = String::with_capacity(target.len() + 4);
    let mut changed = 0;
    let mut chars = target.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if c.is_ascii_digit() && changed < n {
            let mut end = i + c.len_utf8();
            while let Some(&(j, d)) = chars.peek() {
                if !d.is_ascii_digit() {
                    break;
                }
                end = j + d.len_utf8();
                chars.next();
            }
            match target[i..end].parse::<u64>() {
                Ok(v) => out.push_str(&(v.saturating_add(1)).to_string()),
                Err(_) => out.push_str(&target[i..end]),
            }
            changed += 1;
        } else {
            out.push(c);
        }
    }
    if changed == 0 {
        let trimmed = target.trim_end_matches(|c: char| !c.is_alphanumeric());
        let tail = &target[trimmed.len()..];
        let (head, last) = trimmed.rsplit_once(' ').unwrap_or(("", trimmed));
        let swap = if last == "something" { "nothing" } else { "something" };
        out = if head.is_empty() {
            format!("{swap}{tail}")
        } else {
            format!("{head} {swap}{tail}")
        };
        changed = 1;
    }
    format!("I am going to change {changed} things.\nCorruption: {out}")
}

impl Generator for FixtureGenerator {
    fn generate(&self, request: &GenerateRequest) -> ClientResult<String> {
        let prompt = &request.prompt;
        if let Some(rule) = self.rules.iter().find(|r| prompt.contains(&r.prompt_substring)) {
            return Ok(rule.text.clone());
        }
        if self.strict {
            return Err(ClientError::Permanent("no fixture matches the prompt".into()));
        }
        let out = if prompt.starts_with(query_prompt_header()) {
            heuristic_queries(prompt)
        } else if prompt.starts_with(summarize_prompt_header()) {
            heuristic_summary(prompt)
        } else if prompt.starts_with(corrupt_prompt_header()) {
            heuristic_corruption(prompt)
        } else {
            String::new()
        };
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct FixtureEditor {
    pub rules: Vec<EditRule>,
    pub abstention: String,
}

impl Default for FixtureEditor {
    fn default() -> Self {
        Self {
            rules: Vec::new(),
            abstention: "No edit.".into(),
        }
    }
}

impl FusedGenerator for FixtureEditor {
    fn generate_fused(&self, request: &FusedRequest) -> ClientResult<String> {
        let first = request.segments.first().map(String::as_str).unwrap_or_default();
        Ok(self
            .rules
            .iter()
            .find(|r| first.contains(&r.claim_substring))
            .map_or_else(|| self.abstention.clone(), |r| r.text.clone()))
    }
}

fn read_optional(path: &Path) -> Result<Option<String>> {
    match fs::read_to_string(path) {
        Ok(s) => Ok(Some(s)),
        Err(e) if e.kind() == ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let Some(body) = read_optional(path)? else {
        return Ok(Vec::new());
    };
    body.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                line: i + 1,
                message: format!("{}: {e}", path.display()),
            })
        })
        .collect()
}

/// Builds all five clients from a fixture directory.
pub fn load_fixture_clients(dir: &Path) -> Result<Clients> {
    if !dir.is_dir() {
        return Err(Error::InvalidArgument(format!(
            "fixture directory {} not found",
            dir.display()
        )));
    }
    let options: MockOptions = match read_optional(&dir.join("mock.json"))? {
        Some(body) => serde_json::from_str(&body)?,
        None => MockOptions::default(),
    };
    let scorer: Arc<dyn RelevanceScorer> = match options.scorer {
        MockKind::Overlap => Arc::new(OverlapScorer),
        MockKind::Hash => Arc::new(HashScorer),
    };
    let nli: Arc<dyn EntailmentScorer> = match options.nli {
        MockKind::Overlap => Arc::new(OverlapNli),
        MockKind::Hash => Arc::new(HashNli),
    };
    Ok(Clients {
        generator: Arc::new(FixtureGenerator {
            rules: read_jsonl(&dir.join("generate.jsonl"))?,
            strict: options.strict,
        }),
        editor: Arc::new(FixtureEditor {
            rules: read_jsonl(&dir.join("edits.jsonl"))?,
            ..FixtureEditor::default()
        }),
        scorer,
        nli,
        search: Arc::new(FixtureSearch {
            fixtures: read_jsonl(&dir.join("search.jsonl"))?,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{render_corrupt_prompt, render_summarize_prompt};
    use crate::research::render_query_prompt;
    use crate::types::Claim;

    fn gen(prompt: String) -> String {
        FixtureGenerator::default()
            .generate(&GenerateRequest {
                prompt,
                max_tokens: 64,
                temperature: 0.0,
            })
            .unwrap()
    }

    #[test]
    fn queries_are_claim_sentences() {
        let claim = Claim::new("c", "Paris is in France. It has 2 million people.").unwrap();
        assert_eq!(
            gen(render_query_prompt(&claim)),
            "Paris is in France.\nIt has 2 million people."
        );
    }

    #[test]
    fn summary_takes_first_sentences() {
        let out = gen(render_summarize_prompt(&["One. Two.", "Three. Four."]));
        assert_eq!(out, "One. Three.");
    }

    #[test]
    fn corruption_bumps_numbers() {
        let out = gen(render_corrupt_prompt("Built in 1889, it is 330 m tall.", 1));
        assert_eq!(
            out,
            "I am going to change 1 things.\nCorruption: Built in 1890, it is 330 m tall."
        );
        let out = gen(render_corrupt_prompt("Built in 1889, it is 330 m tall.", 3));
        assert!(out.ends_with("Corruption: Built in 1890, it is 331 m tall."));
    }

    #[test]
    fn corruption_without_numbers_swaps_last_word() {
        let out = gen(render_corrupt_prompt("The sky is blue.", 2));
        assert!(out.ends_with("Corruption: The sky is something."), "{out}");
    }

    #[test]
    fn rules_win_and_strict_refuses() {
        let g = FixtureGenerator {
            rules: vec![GenerateRule {
                prompt_substring: "needle".into(),
                text: "hit".into(),
            }],
            strict: true,
        };
        let req = |p: &str| GenerateRequest {
            prompt: p.into(),
            max_tokens: 1,
            temperature: 0.0,
        };
        assert_eq!(g.generate(&req("a needle here")).unwrap(), "hit");
        assert!(matches!(g.generate(&req("nothing")), Err(ClientError::Permanent(_))));
    }

    #[test]
    fn search_matches_case_insensitively() {
        let s = FixtureSearch {
            fixtures: vec![SearchFixture {
                query_substring: "Eiffel".into(),
                pages: vec![
                    SearchResult {
                        url: "u1".into(),
                        title: String::new(),
                        text: "a".into(),
                    },
                    SearchResult {
                        url: "u2".into(),
                        title: String::new(),
                        text: "b".into(),
                    },
                ],
            }],
        };
        assert_eq!(s.search("how tall is the eiffel tower", 1).unwrap().len(), 1);
        assert!(s.search("unrelated", 5).unwrap().is_empty());
    }

    #[test]
    fn editor_abstains_by_default() {
        let e = FixtureEditor::default();
        let out = e
            .generate_fused(&FusedRequest {
                segments: vec!["claim: x evidence: y".into()],
                max_tokens: 8,
                temperature: 0.0,
            })
            .unwrap();
        assert_eq!(out, "No edit.");
    }
}
