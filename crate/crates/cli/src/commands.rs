use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use attrib_core::clients::Clients;
use attrib_core::datagen::{generate_dataset, parse_seed_queries};
use attrib_core::dataset::{deserialize_dataset, serialize_dataset, TRUNCATION_MARKER};
use attrib_core::evalharness::{edit_claim, evaluate, render_report, score_edit, ReportFormat};
use attrib_core::metrics::{categorize_edit, f1_ap, preservation, text_attribution};
use attrib_core::par::{bounded_map, Cancellation};
use attrib_core::report::dedupe_evidence;
use attrib_core::{AttributionReport, Claim, EditCategory, EvidenceSnippet, Record};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::{CliError, EXIT_FATAL, EXIT_OK, EXIT_PARTIAL};

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn read_records<T: Record>(path: &Path) -> Result<Vec<T>, CliError> {
    let file = File::open(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let data = deserialize_dataset::<T, _>(BufReader::new(file)).map_err(|source| CliError::Input {
        path: path.to_path_buf(),
        source,
    })?;
    if data.unknown_keys > 0 {
        tracing::warn!(path = %path.display(), count = data.unknown_keys, "ignored unknown keys");
    }
    if data.truncated {
        tracing::warn!(path = %path.display(), "input ends with a truncation marker");
    }
    Ok(data.records)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes records as JSONL, closing with the truncation marker when the run
/// was interrupted.
fn write_records<T: Record>(path: &Path, records: &[T], truncated: bool) -> Result<(), CliError> {
    let wrap = |source| CliError::Write {
        path: path.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(wrap)?);
    serialize_dataset(records, &mut out)?;
    if truncated {
        writeln!(out, "{TRUNCATION_MARKER}").map_err(wrap)?;
    }
    out.flush().map_err(wrap)
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn pretty_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(attrib_core::Error::from)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Builds training data from a file of seed queries into
/// `out_dir/{train.jsonl, valid.jsonl, report.json}`.
pub fn cmd_datagen(
    seeds: &Path,
    out_dir: &Path,
    config: &RunConfig,
    clients: &Clients,
    cancel: Option<&Cancellation>,
) -> Result<i32, CliError> {
    let queries = parse_seed_queries(&read_text(seeds)?).map_err(|source| CliError::Input {
        path: seeds.to_path_buf(),
        source,
    })?;
    let out = generate_dataset(&queries, clients, &config.datagen(), cancel)?;
    create_dir(out_dir)?;
    let cancelled = out.report.cancelled;
    write_records(&out_dir.join("train.jsonl"), &out.train, cancelled)?;
    write_records(&out_dir.join("valid.jsonl"), &out.valid, cancelled)?;
    write_file(&out_dir.join("report.json"), &pretty_json(&out.report)?)?;
    tracing::info!(
        produced = out.report.produced,
        skipped = out.report.skipped.len(),
        "datagen finished"
    );
    Ok(if out.report.skipped.is_empty() && !cancelled {
        EXIT_OK
    } else {
        EXIT_PARTIAL
    })
}

/// An edit written without scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnscoredEdit {
    pub original: Claim,
    pub revised: Claim,
    pub report: AttributionReport,
}

impl Record for UnscoredEdit {
    fn record_id(&self) -> &str {
        &self.original.id
    }

    fn validate(&self) -> Result<(), String> {
        self.original.validate()?;
        self.revised.validate()?;
        self.report.validate()
    }
}

/// Researches and edits each claim, writing one JSONL line per successful
/// claim in input order.
pub fn cmd_edit(
    claims_path: &Path,
    out_file: &Path,
    config: &RunConfig,
    clients: &Clients,
    no_metrics: bool,
    cancel: Option<&Cancellation>,
) -> Result<i32, CliError> {
    let claims: Vec<Claim> = read_records(claims_path)?;
    let eval = config.eval();
    let results = bounded_map(&claims, config.parallelism, cancel, |_, claim| {
        let trace = edit_claim(claim, clients, &eval, cancel)?;
        let scored = if no_metrics {
            None
        } else {
            Some(score_edit(claim, &trace.revised, &trace.report, clients.nli.as_ref())?)
        };
        Ok::<_, attrib_core::Error>((trace, scored))
    });

    let mut scored = Vec::new();
    let mut unscored = Vec::new();
    let mut failed = 0;
    for (claim, result) in claims.iter().zip(results) {
        match result {
            Some(Ok((trace, record))) => {
                tracing::info!(claim = %claim.id, changed = trace.revised.text != claim.text, "edited");
                match record {
                    Some(r) => scored.push(r),
                    None => unscored.push(UnscoredEdit {
                        original: claim.clone(),
                        revised: trace.revised,
                        report: trace.report,
                    }),
                }
            }
            Some(Err(attrib_core::Error::Cancelled)) | None => {}
            Some(Err(e)) => {
                failed += 1;
                tracing::error!(claim = %claim.id, error = %e, "claim failed");
            }
        }
    }
    let cancelled = cancel.is_some_and(Cancellation::is_cancelled);
    if let Some(parent) = out_file.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    if no_metrics {
        write_records(out_file, &unscored, cancelled)?;
    } else {
        write_records(out_file, &scored, cancelled)?;
    }
    let done = scored.len() + unscored.len();
    Ok(if done == 0 && !claims.is_empty() {
        EXIT_FATAL
    } else if failed > 0 || cancelled {
        EXIT_PARTIAL
    } else {
        EXIT_OK
    })
}

/// Runs the evaluation and writes `out_dir/{report.json, report.txt,
/// edits.jsonl}`. Returns the exit code and the text table.
pub fn cmd_evaluate(
    claims_path: &Path,
    out_dir: &Path,
    config: &RunConfig,
    clients: &Clients,
    cancel: Option<&Cancellation>,
) -> Result<(i32, String), CliError> {
    let claims: Vec<Claim> = read_records(claims_path)?;
    let report = evaluate(&claims, clients, &config.eval(), cancel)?;
    for r in &report.per_claim {
        tracing::info!(claim = %r.original.id, attr_before = r.attr_before, attr_after = r.attr_after, pres = r.preservation, "scored");
    }
    create_dir(out_dir)?;
    write_file(
        &out_dir.join("report.json"),
        &render_report(&report, ReportFormat::Json)?,
    )?;
    let text = render_report(&report, ReportFormat::Text)?;
    write_file(&out_dir.join("report.txt"), &text)?;
    write_records(&out_dir.join("edits.jsonl"), &report.per_claim, report.cancelled)?;
    Ok((report.exit_code(), String::from_utf8_lossy(&text).into_owned()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EvidenceItem {
    Text(String),
    Snippet(EvidenceSnippet),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EditTriple {
    #[serde(default)]
    pub id: Option<String>,
    pub x: String,
    pub y: String,
    pub evidence: Vec<EvidenceItem>,
}

/// Precomputed attribution and preservation, for checking F1_AP alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScorePair {
    #[serde(default)]
    pub id: Option<String>,
    pub attr: f64,
    pub pres: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricsInput {
    Triple(EditTriple),
    Scores(ScorePair),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attr_before: Option<f64>,
    pub attr_after: f64,
    pub preservation: f64,
    pub f1_ap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub category: Option<BTreeSet<EditCategory>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub rows: usize,
    pub attr_after_mean: f64,
    pub pres_mean: f64,
    pub f1_of_means: f64,
    pub mean_of_f1s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsOutput {
    pub rows: Vec<MetricsRow>,
    pub summary: Option<MetricsSummary>,
}

fn triple_row(id: String, t: &EditTriple, clients: &Clients) -> attrib_core::Result<MetricsRow> {
    let evidence = t
        .evidence
        .iter()
        .map(|e| match e {
            EvidenceItem::Text(s) => EvidenceSnippet::from_text(s),
            EvidenceItem::Snippet(s) => Ok(s.clone()),
        })
        .collect::<attrib_core::Result<Vec<_>>>()?;
    let report = AttributionReport::new(dedupe_evidence(evidence), 0.0)?;
    let before = text_attribution(&t.x, &report, clients.nli.as_ref())?.overall;
    let after = if t.x == t.y {
        before
    } else {
        text_attribution(&t.y, &report, clients.nli.as_ref())?.overall
    };
    let pres = preservation(&t.x, &t.y);
    Ok(MetricsRow {
        id,
        attr_before: Some(before),
        attr_after: after,
        preservation: pres,
        f1_ap: f1_ap(after, pres)?,
        category: Some(categorize_edit(before, after, pres)),
    })
}

/// Computes attribution, preservation, and F1_AP for each input line.
/// `clients` is only built when some line needs entailment scores.
pub fn cmd_metrics(
    input: &Path,
    clients: impl FnOnce() -> Result<Clients, CliError>,
) -> Result<MetricsOutput, CliError> {
    let body = read_text(input)?;
    let bad = |line: usize, message: String| CliError::Input {
        path: input.to_path_buf(),
        source: attrib_core::Error::Parse { line, message },
    };
    let mut rows_in = Vec::new();
    for (i, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: MetricsInput = serde_json::from_str(line).map_err(|e| bad(i + 1, e.to_string()))?;
        rows_in.push((i + 1, row));
    }

    let mut client_slot = None;
    let mut build = Some(clients);
    let mut rows = Vec::with_capacity(rows_in.len());
    for (line, row) in rows_in {
        let id = |given: &Option<String>| given.clone().unwrap_or_else(|| format!("line{line}"));
        let out = match &row {
            MetricsInput::Scores(s) => f1_ap(s.attr, s.pres).map(|f| MetricsRow {
                id: id(&s.id),
                attr_before: None,
                attr_after: s.attr,
                preservation: s.pres,
                f1_ap: f,
                category: None,
            }),
            MetricsInput::Triple(t) => {
                if client_slot.is_none() {
                    let make = build.take().expect("built once");
                    client_slot = Some(make()?);
                }
                triple_row(id(&t.id), t, client_slot.as_ref().expect("just built"))
            }
        };
        rows.push(out.map_err(|e| bad(line, e.to_string()))?);
    }

    let summary = if rows.is_empty() {
        None
    } else {
        let n = rows.len() as f64;
        let attr_after_mean = rows.iter().map(|r| r.attr_after).sum::<f64>() / n;
        let pres_mean = rows.iter().map(|r| r.preservation).sum::<f64>() / n;
        Some(MetricsSummary {
            rows: rows.len(),
            attr_after_mean,
            pres_mean,
            f1_of_means: f1_ap(attr_after_mean, pres_mean)?,
            mean_of_f1s: rows.iter().map(|r| r.f1_ap).sum::<f64>() / n,
        })
    };
    Ok(MetricsOutput { rows, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use attrib_core::clients::mock::OverlapNli;
    use std::sync::Arc;

    fn no_clients() -> Result<Clients, CliError> {
        Err(CliError::Config("no clients in this test".into()))
    }

    fn overlap_clients() -> Result<Clients, CliError> {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/demo");
        let mut c = attrib_core::clients::load_fixture_clients(&dir)?;
        c.nli = Arc::new(OverlapNli);
        Ok(c)
    }

    fn input(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn score_rows_need_no_clients() {
        let f = input("{\"id\": \"nq\", \"attr\": 0.598, \"pres\": 0.910}\n");
        let out = cmd_metrics(f.path(), no_clients).unwrap();
        assert_eq!(out.rows.len(), 1);
        assert!((out.rows[0].f1_ap - 0.7217).abs() < 5e-4);
    }

    #[test]
    fn kitten_sitting_preservation() {
        let f = input("{\"x\": \"kitten\", \"y\": \"sitting\", \"evidence\": [\"kitten\"]}\n");
        let out = cmd_metrics(f.path(), overlap_clients).unwrap();
        assert_eq!(out.rows[0].preservation, 0.5);
        assert_eq!(out.rows[0].id, "line1");
    }

    #[test]
    fn identical_pair_preserves_fully() {
        let f = input(
            "{\"x\": \"The sky is blue.\", \"y\": \"The sky is blue.\", \"evidence\": [\"The sky is blue today.\"]}\n",
        );
        let out = cmd_metrics(f.path(), overlap_clients).unwrap();
        let row = &out.rows[0];
        assert_eq!(row.preservation, 1.0);
        assert_eq!(row.attr_before, Some(row.attr_after));
    }

    #[test]
    fn bad_line_names_line_number() {
        let f = input("{\"attr\": 0.5, \"pres\": 0.5}\n{\"attr\": 2.0, \"pres\": 0.5}\n");
        let err = cmd_metrics(f.path(), no_clients).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }
}
