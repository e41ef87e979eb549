//! CSV / JSONL report emission.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{ReportFormat, Tolerances};
use super::run::{ConvergenceReport, ReportRow};
use crate::error::{Error, Result};

/// First JSONL line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub config_sha256: String,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub note: String,
    pub prechecks: Vec<super::run::PrecheckRecord>,
    pub failures: Vec<String>,
}

const TOLERANCE_NOTE: &str = "tolerances are engineering defaults, not derived rates";

fn fmt_opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Renders the report. Floats use the shortest round-trip form, so equal
/// inputs give equal bytes.
pub fn render_report(report: &ConvergenceReport, tol: &Tolerances, format: ReportFormat) -> Result<String> {
    if report.rows.is_empty() {
        return Err(Error::InvalidParameter("report has no rows".into()));
    }
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            let _ = writeln!(out, "# config_sha256={}", report.config_hash);
            let _ = writeln!(out, "# seed={}", report.seed);
            let _ = writeln!(out, "# tolerances lp={} seminorm={} ({TOLERANCE_NOTE})", tol.lp, tol.seminorm);
            for c in &report.prechecks {
                let _ = writeln!(out, "# precheck {}={} {:?}", c.name, c.value, c.verdict);
            }
            for f in &report.failures {
                let _ = writeln!(out, "# failure {f}");
            }
            let mut cols = vec!["k".to_string(), "fraction".into(), "max_eta".into()];
            for e in &report.rows[0].errors {
                let n = e.kind.name();
                cols.push(n.to_string());
                cols.push(format!("{n}_error_estimate"));
                cols.push(format!("{n}_verdict"));
            }
            cols.push("hardy".into());
            cols.push("wall_time".into());
            let _ = writeln!(out, "{}", cols.join(","));
            for r in &report.rows {
                let mut f = vec![fmt_opt(r.k), fmt_opt(r.fraction), r.max_eta.to_string()];
                for e in &r.errors {
                    f.push(e.value.to_string());
                    f.push(e.error_estimate.to_string());
                    f.push(serde_json::to_value(e.verdict)?.as_str().unwrap_or_default().to_string());
                }
                f.push(fmt_opt(r.hardy));
                f.push(fmt_opt(r.wall_time));
                let _ = writeln!(out, "{}", f.join(","));
            }
        }
        ReportFormat::Jsonl => {
            let header = ReportHeader {
                config_sha256: report.config_hash.clone(),
                seed: report.seed,
                tolerances: tol.clone(),
                note: TOLERANCE_NOTE.into(),
                prechecks: report.prechecks.clone(),
                failures: report.failures.clone(),
            };
            out.push_str(&serde_json::to_string(&header)?);
            out.push('\n');
            for r in &report.rows {
                out.push_str(&serde_json::to_string(r)?);
                out.push('\n');
            }
        }
    }
    Ok(out)
}

pub fn emit_report(report: &ConvergenceReport, tol: &Tolerances, format: ReportFormat, path: &Path) -> Result<()> {
    let text = render_report(report, tol, format)?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Inverse of the JSONL form.
pub fn parse_jsonl(text: &str) -> Result<(ReportHeader, Vec<ReportRow>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: ReportHeader = serde_json::from_str(lines.next().ok_or_else(|| Error::InvalidParameter("empty report".into()))?)?;
    let rows = lines.map(serde_json::from_str).collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((header, rows))
}
