use crate::clients::{self, Generator};
use crate::error::{Error, Result};
use crate::template;
use crate::types::{Claim, Query};

/// Query-generation prompt, version 1.
pub const QUERY_TEMPLATE: &str = include_str!("../../templates/query_generation.v1.txt");
pub const QUERY_TEMPLATE_VERSION: &str = "query_generation.v1";

/// First line of [`QUERY_TEMPLATE`]; identifies query-generation prompts.
pub fn query_prompt_header() -> &'static str {
    QUERY_TEMPLATE.lines().next().unwrap_or_default()
}

pub fn render_query_prompt(claim: &Claim) -> String {
    let context = claim
        .context
        .as_deref()
        .filter(|c| !c.trim().is_empty())
        .map(|c| format!("Context: {}\n", c.trim()))
        .unwrap_or_default();
    template::render(QUERY_TEMPLATE, &[("context", &context), ("text", claim.text.trim())])
}

/// Strips list decorations such as `-`, `*`, `1.` or `2)`.
fn strip_marker(line: &str) -> &str {
    let line = line.trim();
    if let Some(rest) = line.strip_prefix(['-', '*', '\u{2022}']) {
        return rest.trim_start();
    }
    let digits = line.len() - line.trim_start_matches(|c: char| c.is_ascii_digit()).len();
    if digits > 0 {
        let rest = &line[digits..];
        if let Some(rest) = rest.strip_prefix(['.', ')']) {
            if rest.starts_with(char::is_whitespace) {
                return rest.trim_start();
            }
        }
    }
    line
}

/// One query per non-empty line, at most `cap`.
pub fn parse_queries(claim_id: &str, output: &str, cap: usize) -> Vec<Query> {
    output
        .lines()
        .map(strip_marker)
        .filter(|l| !l.is_empty())
        .take(cap)
        .enumerate()
        .filter_map(|(i, text)| Query::new(format!("{claim_id}-q{i}"), text).ok())
        .collect()
}

/// Asks the generator for search queries covering `claim`.
pub fn generate_queries(claim: &Claim, gen: &dyn Generator, cap: usize, max_tokens: u32) -> Result<Vec<Query>> {
    if claim.text.trim().is_empty() {
        return Err(Error::EmptyText);
    }
    let output = clients::generate(gen, &render_query_prompt(claim), max_tokens, 0.0)?;
    let queries = parse_queries(&claim.id, &output, cap);
    if queries.is_empty() {
        return Err(Error::NoQueries {
            claim_id: claim.id.clone(),
        });
    }
    Ok(queries)
}
