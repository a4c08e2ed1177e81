//! Text normalization shared by ingestion, dedup, and the edit-distance metrics.

use serde::{Deserialize, Deserializer};
use sha2::{Digest, Sha256};
use unicode_normalization::UnicodeNormalization;

/// Canonical composition (NFC) of `text`.
pub fn nfc(text: &str) -> String {
    text.nfc().collect()
}

/// Collapses every whitespace run to a single ASCII space and trims the ends.
pub fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Key under which two texts count as duplicates: NFC, lowercased, whitespace collapsed.
pub fn dedup_key(text: &str) -> String {
    collapse_whitespace(&nfc(text).to_lowercase())
}

/// First 16 hex characters of the SHA-256 of the NFC form of `text`.
pub fn content_id(text: &str) -> String {
    let digest = Sha256::digest(nfc(text).as_bytes());
    hex::encode(&digest[..8])
}

/// Number of Unicode scalar values after NFC.
pub fn char_len(text: &str) -> usize {
    text.nfc().count()
}

pub(crate) fn is_blank(text: &str) -> bool {
    text.trim().is_empty()
}

pub(crate) fn de_nfc<'de, D: Deserializer<'de>>(de: D) -> Result<String, D::Error> {
    String::deserialize(de).map(|s| nfc(&s))
}

pub(crate) fn de_nfc_opt<'de, D: Deserializer<'de>>(de: D) -> Result<Option<String>, D::Error> {
    Option::<String>::deserialize(de).map(|s| s.map(|s| nfc(&s)))
}
