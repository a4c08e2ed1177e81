//! JSONL reading and writing for every [`Record`] type.
//!
//! One JSON object per line, keys in struct declaration order. A writer that is
//! interrupted appends [`TRUNCATION_MARKER`]; readers stop there and report it.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::types::Record;

/// Final line of a partially written file.
pub const TRUNCATION_MARKER: &str = r#"{"__truncated__":true}"#;

/// Records read from a JSONL stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub records: Vec<T>,
    /// Keys present in the input that no field consumed.
    pub unknown_keys: usize,
    pub truncated: bool,
}

/// Writes `records` as JSONL. Each record is validated first; a record that
/// cannot be represented is reported by id and nothing after it is written.
pub fn serialize_dataset<T: Record, W: Write>(records: &[T], mut out: W) -> Result<()> {
    for record in records {
        write_record(record, &mut out)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_record<T: Record, W: Write>(record: &T, out: &mut W) -> Result<()> {
    record.validate().map_err(|reason| Error::InvalidRecord {
        id: record.record_id().to_string(),
        reason,
    })?;
    let line = serde_json::to_string(record).map_err(|e| Error::InvalidRecord {
        id: record.record_id().to_string(),
        reason: e.to_string(),
    })?;
    out.write_all(line.as_bytes())?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn to_jsonl<T: Record>(records: &[T]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    serialize_dataset(records, &mut buf)?;
    Ok(buf)
}

/// Reads a JSONL stream of `T`, in file order. Blank lines are skipped.
pub fn deserialize_dataset<T: Record, R: BufRead>(input: R) -> Result<Dataset<T>> {
    let mut records = Vec::new();
    let mut unknown_keys = 0;
    let mut truncated = false;
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed == TRUNCATION_MARKER {
            truncated = true;
            break;
        }
        let (record, ignored) = parse_line::<T>(trimmed).map_err(|message| Error::Parse { line: line_no, message })?;
        record.validate().map_err(|reason| Error::Parse {
            line: line_no,
            message: format!("record {}: {reason}", record.record_id()),
        })?;
        unknown_keys += ignored;
        records.push(record);
    }
    if unknown_keys > 0 {
        tracing::warn!(unknown_keys, "ignored unknown keys while reading dataset");
    }
    Ok(Dataset {
        records,
        unknown_keys,
        truncated,
    })
}

pub fn from_jsonl<T: Record>(bytes: &[u8]) -> Result<Dataset<T>> {
    deserialize_dataset(bytes)
}

fn parse_line<T: Record>(line: &str) -> Result<(T, usize), String> {
    let mut ignored = 0;
    let mut de = serde_json::Deserializer::from_str(line);
    let record: T = serde_ignored::deserialize(&mut de, |_path| ignored += 1).map_err(|e| e.to_string())?;
    de.end().map_err(|e| e.to_string())?;
    Ok((record, ignored))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Claim, EvidenceSnippet};

    #[test]
    fn empty_round_trip() {
        let bytes = to_jsonl::<Claim>(&[]).unwrap();
        assert!(bytes.is_empty());
        let back: Dataset<Claim> = from_jsonl(b"").unwrap();
        assert!(back.records.is_empty());
    }

    #[test]
    fn claim_line_has_both_keys() {
        let bytes = to_jsonl(&[Claim::new("a", "x").unwrap()]).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert_eq!(text, "{\"id\":\"a\",\"text\":\"x\"}\n");
    }

    #[test]
    fn missing_field_is_named() {
        let err = from_jsonl::<Claim>(b"{\"id\":\"a\"}\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 1"), "{msg}");
        assert!(msg.contains("`text`"), "{msg}");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let input = b"{\"id\":\"a\",\"text\":\"x\"}\n\n{\"id\":\"b\",\n";
        match from_jsonl::<Claim>(input).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_counted() {
        let input = b"{\"id\":\"a\",\"text\":\"x\",\"extra\":1,\"more\":[1,2]}\n";
        let ds = from_jsonl::<Claim>(input).unwrap();
        assert_eq!(ds.records.len(), 1);
        assert_eq!(ds.unknown_keys, 2);
    }

    #[test]
    fn non_finite_score_names_record() {
        let mut e = EvidenceSnippet::new("snip-7", "text").unwrap();
        e.relevance = Some([("q".to_string(), f64::NAN)].into());
        match to_jsonl(&[e]).unwrap_err() {
            Error::InvalidRecord { id, .. } => assert_eq!(id, "snip-7"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reader_stops_at_truncation_marker() {
        let input = format!("{{\"id\":\"a\",\"text\":\"x\"}}\n{TRUNCATION_MARKER}\n");
        let ds = from_jsonl::<Claim>(input.as_bytes()).unwrap();
        assert!(ds.truncated);
        assert_eq!(ds.records.len(), 1);
    }

    #[test]
    fn text_is_nfc_on_ingest() {
        let ds = from_jsonl::<Claim>("{\"id\":\"a\",\"text\":\"cafe\u{301}\"}".as_bytes()).unwrap();
        assert_eq!(ds.records[0].text, "caf\u{e9}");
    }
}
