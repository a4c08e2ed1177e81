use crate::error::{Error, Result};
use crate::metrics::is_sentence_end;
use crate::types::EvidenceSnippet;

pub const DEFAULT_WINDOW: usize = 128;
pub const DEFAULT_STRIDE: usize = 64;
/// How far (in words) a chunk edge may move to reach a sentence boundary.
pub const SNAP_WORDS: usize = 20;

/// Raw sliding windows `[start, end)` over `n` words, before snapping.
/// The last window is the first one that reaches the end.
pub fn window_ranges(n: usize, window: usize, stride: usize) -> Vec<(usize, usize)> {
    let mut ranges = Vec::new();
    let mut start = 0;
    while start < n {
        let end = (start + window).min(n);
        ranges.push((start, end));
        if end == n {
            break;
        }
        start += stride;
    }
    ranges
}

fn snap(words: &[&str], ends: &[bool], (start, end): (usize, usize)) -> (usize, usize) {
    let is_start = |k: usize| k == 0 || ends[k - 1];
    let is_end = |k: usize| k == words.len() || ends[k - 1];
    let new_start = (start.saturating_sub(SNAP_WORDS)..=start)
        .rev()
        .find(|&k| is_start(k))
        .unwrap_or(start);
    let new_end = (end..=(end + SNAP_WORDS).min(words.len()))
        .find(|&k| is_end(k))
        .unwrap_or(end);
    (new_start, new_end)
}

/// Splits a page into overlapping word windows whose edges are moved
/// outward to the nearest sentence boundary within [`SNAP_WORDS`] words.
///
/// Text is whitespace-normalized, so every chunk is a contiguous substring of
/// the page with whitespace runs collapsed. Snippet ids are content hashes.
pub fn chunk_passages(page_text: &str, window: usize, stride: usize) -> Result<Vec<EvidenceSnippet>> {
    if stride == 0 || window < stride {
        return Err(Error::InvalidArgument(format!(
            "need window >= stride >= 1, got window {window} stride {stride}"
        )));
    }
    let words: Vec<&str> = page_text.split_whitespace().collect();
    let ends: Vec<bool> = (0..words.len())
        .map(|i| is_sentence_end(words[i], words.get(i + 1).copied()))
        .collect();

    let mut out: Vec<EvidenceSnippet> = Vec::new();
    let mut last = None;
    for range in window_ranges(words.len(), window, stride) {
        let (s, e) = snap(&words, &ends, range);
        if last == Some((s, e)) {
            continue;
        }
        last = Some((s, e));
        let text = words[s..e].join(" ");
        let index = out.len();
        out.push(EvidenceSnippet::from_text(&text)?.with_source(None, None, index));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numbered(n: usize) -> String {
        (1..=n).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn short_page_is_one_chunk() {
        let page = numbered(100);
        let chunks = chunk_passages(&page, 128, 64).unwrap();
        assert_eq!(chunks.len(), 1);
        assert_eq!(chunks[0].text, page);
        assert_eq!(chunks[0].chunk_index, 0);
    }

    #[test]
    fn window_starts_for_256_words() {
        // 1-based word positions of chunk starts: 1, 65, 129
        let starts: Vec<usize> = window_ranges(256, 128, 64).iter().map(|r| r.0 + 1).collect();
        assert_eq!(starts, [1, 65, 129]);
        let chunks = chunk_passages(&numbered(256), 128, 64).unwrap();
        assert!(chunks[0].text.starts_with("w1 "));
        assert!(chunks[1].text.starts_with("w65 "));
        assert!(chunks[1].text.ends_with(" w192"));
        assert_eq!(chunks.len(), 3);
    }

    #[test]
    fn edges_snap_to_sentences() {
        // sentences of 10 words each; window 25 ends mid-sentence
        let sentence = |k: usize| {
            let mut w: Vec<String> = (0..9).map(|i| format!("s{k}w{i}")).collect();
            w[0] = format!("S{k}w0");
            format!("{} end{k}.", w.join(" "))
        };
        let page = (0..6).map(sentence).collect::<Vec<_>>().join(" ");
        let chunks = chunk_passages(&page, 25, 15).unwrap();
        // first window [0,25) extends to 30, second [15,40) moves back to 10 and out to 40
        assert!(chunks[0].text.ends_with("end2."));
        assert!(chunks[1].text.starts_with("S1w0"));
        assert!(chunks[1].text.ends_with("end3."));
    }

    #[test]
    fn empty_page_and_bad_args() {
        assert!(chunk_passages("   ", 128, 64).unwrap().is_empty());
        assert!(chunk_passages("a b", 4, 8).is_err());
        assert!(chunk_passages("a b", 4, 0).is_err());
    }
}
