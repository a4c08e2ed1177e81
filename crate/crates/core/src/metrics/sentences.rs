//! Rule-based sentence segmentation.
//!
//! A sentence ends at a whitespace-delimited token whose last non-closing
//! character is `.`, `!` or `?`, provided the next token starts with an
//! uppercase letter or a digit. Known abbreviations and single-letter
//! initials never end a sentence. Decimals like `3.5` are never split because
//! a boundary needs whitespace after the punctuation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ABBREVIATIONS: &[&str] = &[
    "Mr.", "Mrs.", "Ms.", "Dr.", "Prof.", "Sr.", "Jr.", "St.", "Mt.", "Ft.", "No.", "Nos.", "vs.", "Vs.", "e.g.",
    "i.e.", "cf.", "al.", "approx.", "ca.", "Inc.", "Ltd.", "Co.", "Corp.", "Bros.", "Gen.", "Gov.", "Sen.", "Rep.",
    "Rev.", "Hon.", "Pres.", "Capt.", "Lt.", "Col.", "Sgt.", "Cpl.", "Adm.", "Jan.", "Feb.", "Mar.", "Apr.", "Jun.",
    "Jul.", "Aug.", "Sep.", "Sept.", "Oct.", "Nov.", "Dec.", "Fig.", "Figs.", "Vol.", "Eq.", "pp.", "Ave.", "Blvd.",
    "Rd.", "Dept.", "Univ.", "Est.", "U.S.", "U.K.", "U.N.", "E.U.", "D.C.", "a.m.", "p.m.",
];

const OPENERS: &[char] = &['"', '\'', '(', '[', '{', '\u{201c}', '\u{2018}', '\u{ab}'];
const CLOSERS: &[char] = &['"', '\'', ')', ']', '}', '\u{201d}', '\u{2019}', '\u{bb}'];

/// Sentences of a text with their character (Unicode scalar) spans.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceSplit {
    pub sentences: Vec<String>,
    /// Half-open `(start, end)` char offsets into the source.
    pub spans: Vec<(usize, usize)>,
}

impl SentenceSplit {
    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

fn is_abbreviation(core: &str) -> bool {
    if ABBREVIATIONS.contains(&core) {
        return true;
    }
    // Initials: "J." and dotted acronyms such as "U.S.A."
    let mut chars = core.chars();
    let mut letters = 0;
    loop {
        match (chars.next(), chars.next()) {
            (Some(c), Some('.')) if c.is_alphabetic() => letters += 1,
            (None, _) => break,
            _ => return false,
        }
    }
    letters == 1 && core.chars().next().is_some_and(char::is_uppercase) || letters > 1
}

/// Whether `token` closes a sentence given the token after it.
pub(crate) fn is_sentence_end(token: &str, next: Option<&str>) -> bool {
    let core = token.trim_end_matches(CLOSERS);
    let Some(last) = core.chars().last() else {
        return false;
    };
    if !matches!(last, '.' | '!' | '?') {
        return false;
    }
    if last == '.' && is_abbreviation(core.trim_start_matches(OPENERS)) {
        return false;
    }
    match next {
        None => true,
        Some(next) => next
            .trim_start_matches(OPENERS)
            .chars()
            .next()
            .is_some_and(|c| c.is_uppercase() || c.is_ascii_digit()),
    }
}

/// Whitespace-delimited tokens with char-offset spans.
fn tokens(text: &str) -> Vec<(&str, usize, usize)> {
    let mut out = Vec::new();
    let mut start: Option<(usize, usize)> = None; // (byte, char)
    let mut char_pos = 0;
    for (byte, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some((b, ch)) = start.take() {
                out.push((&text[b..byte], ch, char_pos));
            }
        } else if start.is_none() {
            start = Some((byte, char_pos));
        }
        char_pos += 1;
    }
    if let Some((b, ch)) = start {
        out.push((&text[b..], ch, char_pos));
    }
    out
}

/// Splits `text` into sentences.
pub fn split_sentences(text: &str) -> Result<SentenceSplit> {
    let toks = tokens(text);
    if toks.is_empty() {
        return Err(Error::EmptyText);
    }
    let chars: Vec<char> = text.chars().collect();
    let mut split = SentenceSplit {
        sentences: Vec::new(),
        spans: Vec::new(),
    };
    let mut first = 0;
    for i in 0..toks.len() {
        let next = toks.get(i + 1).map(|t| t.0);
        if next.is_none() || is_sentence_end(toks[i].0, next) {
            let (start, end) = (toks[first].1, toks[i].2);
            split.sentences.push(chars[start..end].iter().collect());
            split.spans.push((start, end));
            first = i + 1;
        }
    }
    Ok(split)
}
