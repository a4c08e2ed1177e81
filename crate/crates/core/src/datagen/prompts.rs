use crate::error::{Error, Result};
use crate::template;

/// Zero-shot multi-document summarization prompt.
pub const SUMMARIZE_TEMPLATE: &str = include_str!("../../templates/summarize.txt");
/// Few-shot corruption prompt.
pub const CORRUPT_TEMPLATE: &str = include_str!("../../templates/corrupt.txt");

/// Marker separating the reasoning from the corrupted text.
pub const CORRUPTION_MARKER: &str = "Corruption:";

pub fn summarize_prompt_header() -> &'static str {
    SUMMARIZE_TEMPLATE.lines().next().unwrap_or_default()
}

pub fn corrupt_prompt_header() -> &'static str {
    CORRUPT_TEMPLATE.lines().next().unwrap_or_default()
}

/// Gold passages are joined with newlines into `{text}`.
pub fn render_summarize_prompt<S: AsRef<str>>(texts: &[S]) -> String {
    let joined = texts.iter().map(|t| t.as_ref().trim()).collect::<Vec<_>>().join("\n");
    template::render(SUMMARIZE_TEMPLATE, &[("text", &joined)])
}

pub fn render_corrupt_prompt(clean: &str, num_corruptions: u32) -> String {
    template::render(
        CORRUPT_TEMPLATE,
        &[
            ("text", clean.trim()),
            ("num_corruptions", &num_corruptions.to_string()),
        ],
    )
}

/// Splits a completion of the corruption prompt into (reasoning, corrupted).
///
/// The reasoning is everything before the first line starting with
/// `Corruption:`; the corrupted text is the rest of that line plus any
/// following lines up to a blank line.
pub fn parse_corruption(output: &str) -> Result<(String, String)> {
    let mut reasoning = Vec::new();
    let mut lines = output.lines();
    for line in lines.by_ref() {
        if let Some(rest) = line.trim_start().strip_prefix(CORRUPTION_MARKER) {
            let mut corrupted = vec![rest.trim()];
            corrupted.extend(lines.take_while(|l| !l.trim().is_empty()).map(str::trim));
            let corrupted = corrupted.join(" ").trim().to_string();
            if corrupted.is_empty() {
                return Err(Error::BadCorruptionFormat);
            }
            let reasoning = reasoning.join("\n").trim().to_string();
            let reasoning = reasoning
                .strip_prefix("Reasoning:")
                .map(str::trim)
                .unwrap_or(&reasoning)
                .to_string();
            return Ok((reasoning, corrupted));
        }
        reasoning.push(line);
    }
    Err(Error::BadCorruptionFormat)
}
