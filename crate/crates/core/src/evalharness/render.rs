use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::EvalReport;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Text,
}

fn pct(v: f64) -> String {
    format!("{:.1}", 100.0 * v)
}

fn text_table(report: &EvalReport) -> String {
    let mut out = String::new();
    let n = report.per_claim.len();
    let _ = writeln!(
        out,
        "claims: {} evaluated, {} failed, {} total",
        n,
        report.failures.len(),
        report.total
    );
    if report.cancelled {
        let _ = writeln!(out, "warning: run was interrupted; results are partial");
    }
    out.push('\n');
    let _ = writeln!(
        out,
        "{:>16}  {:>6}  {:>6}  {:>8}",
        "Attr x->y", "Pres", "F1_AP", "mean F1"
    );
    match &report.aggregates {
        Some(a) => {
            let attr = format!("{} -> {}", pct(a.attr_before_mean), pct(a.attr_after_mean));
            let _ = writeln!(
                out,
                "{:>16}  {:>6}  {:>6}  {:>8}",
                attr,
                pct(a.pres_mean),
                pct(a.f1_of_means),
                pct(a.mean_of_f1s)
            );
        }
        None => {
            let _ = writeln!(out, "{:>16}  {:>6}  {:>6}  {:>8}", "-", "-", "-", "-");
            let _ = writeln!(out, "warning: no claims were evaluated");
        }
    }
    out.push('\n');
    let _ = writeln!(out, "edit categories:");
    for (category, count) in &report.category_counts {
        let _ = writeln!(out, "  {:<12}{count:>5}", category.to_string());
    }
    out.push('\n');
    let _ = writeln!(out, "low attribution after editing: {}", report.low_attr_flags.len());
    for id in &report.low_attr_flags {
        let _ = writeln!(out, "  {id}");
    }
    if !report.failures.is_empty() {
        out.push('\n');
        let _ = writeln!(out, "failures:");
        for f in &report.failures {
            let _ = writeln!(out, "  {}: {}", f.claim_id, f.reason);
        }
    }
    out
}

pub fn render_report(report: &EvalReport, format: ReportFormat) -> Result<Vec<u8>> {
    Ok(match format {
        ReportFormat::Json => {
            let mut bytes = serde_json::to_vec_pretty(report)?;
            bytes.push(b'\n');
            bytes
        }
        ReportFormat::Text => text_table(report).into_bytes(),
    })
}
