//! success@C tables and per-bucket tallies over outcome records.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::ProgramEntry;
use crate::pipeline::{OutcomeRecord, OutcomeStatus};

pub const DEFAULT_THRESHOLDS: [u32; 4] = [1, 5, 10, 15];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("outcome records do not match manifest entries (missing: {missing:?}, unexpected: {unexpected:?}, duplicated: {duplicated:?})")]
    MismatchedRecords {
        missing: Vec<String>,
        unexpected: Vec<String>,
        duplicated: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessRate {
    pub count: usize,
    /// Fraction of all programs, rounded to 4 decimal places.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub total_programs: usize,
    pub success_at_c: BTreeMap<u32, SuccessRate>,
    /// Functional programs per context-length bucket.
    pub bucket_success: BTreeMap<usize, usize>,
    /// All programs per bucket.
    pub bucket_programs: BTreeMap<usize, usize>,
    /// Functional programs outside every bucket.
    pub unbucketed_success: usize,
    pub revert_events: u64,
    pub history_truncations: u64,
    pub sanitizer_triggered: usize,
    pub sanitizer_fixed: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Text,
}

fn round4(x: f64) -> f64 {
    (x * 10_000.0).round() / 10_000.0
}

pub fn aggregate(
    records: &[OutcomeRecord],
    entries: &[ProgramEntry],
    thresholds: &[u32],
) -> Result<RunReport, MetricsError> {
    let mut by_id: HashMap<&str, &OutcomeRecord> = HashMap::with_capacity(records.len());
    let mut duplicated = BTreeSet::new();
    for r in records {
        if by_id.insert(r.program_id.as_str(), r).is_some() {
            duplicated.insert(r.program_id.clone());
        }
    }
    let entry_ids: BTreeSet<&str> = entries.iter().map(|e| e.id.as_str()).collect();
    let missing: Vec<String> = entry_ids
        .iter()
        .filter(|id| !by_id.contains_key(*id))
        .map(|s| s.to_string())
        .collect();
    let unexpected: BTreeSet<String> = records
        .iter()
        .filter(|r| !entry_ids.contains(r.program_id.as_str()))
        .map(|r| r.program_id.clone())
        .collect();
    if !missing.is_empty() || !unexpected.is_empty() || !duplicated.is_empty() || entry_ids.len() != entries.len() {
        return Err(MetricsError::MismatchedRecords {
            missing,
            unexpected: unexpected.into_iter().collect(),
            duplicated: duplicated.into_iter().collect(),
        });
    }

    let total = records.len();
    let success_at_c = thresholds
        .iter()
        .map(|&c| {
            let count = records.iter().filter(|r| r.success_at.is_some_and(|s| s <= c)).count();
            let rate = if total == 0 { 0.0 } else { round4(count as f64 / total as f64) };
            (c, SuccessRate { count, rate })
        })
        .collect();

    let mut report = RunReport {
        total_programs: total,
        success_at_c,
        bucket_success: BTreeMap::new(),
        bucket_programs: BTreeMap::new(),
        unbucketed_success: 0,
        revert_events: 0,
        history_truncations: 0,
        sanitizer_triggered: 0,
        sanitizer_fixed: 0,
    };
    for e in entries {
        let r = by_id[e.id.as_str()];
        let functional = r.status == OutcomeStatus::Functional;
        match e.bucket.index() {
            Some(i) => {
                *report.bucket_programs.entry(i).or_default() += 1;
                *report.bucket_success.entry(i).or_default() += usize::from(functional);
            }
            None => report.unbucketed_success += usize::from(functional),
        }
        report.revert_events += u64::from(r.revert_events);
        report.history_truncations += u64::from(r.history_truncations);
        if r.sanitizer_triggered {
            report.sanitizer_triggered += 1;
            report.sanitizer_fixed += usize::from(functional);
        }
    }
    Ok(report)
}

pub fn emit_report(report: &RunReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Csv => {
            let mut s = String::from("c,count,rate\n");
            for (c, r) in &report.success_at_c {
                let _ = writeln!(s, "{c},{},{:.4}", r.count, r.rate);
            }
            s
        }
        ReportFormat::Text => text_report(report),
    }
}

fn text_report(report: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Programs: {}", report.total_programs);
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<6} {:>8} {:>8} {:>8}", "C", "Success", "Rate", "Percent");
    for (c, r) in &report.success_at_c {
        let pct = format!("{:.0}%", r.rate * 100.0);
        let _ = writeln!(s, "{c:<6} {:>8} {:>8.4} {pct:>8}", r.count, r.rate);
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<8} {:>9} {:>8}", "Bucket", "Programs", "Success");
    for (i, n) in &report.bucket_programs {
        let ok = report.bucket_success.get(i).copied().unwrap_or(0);
        let _ = writeln!(s, "{i:<8} {n:>9} {ok:>8}");
    }
    if report.unbucketed_success > 0 {
        let _ = writeln!(s, "{:<8} {:>9} {:>8}", "none", "-", report.unbucketed_success);
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "Revert events: {}", report.revert_events);
    let _ = writeln!(s, "History truncations: {}", report.history_truncations);
    let _ = writeln!(s, "Sanitizer triggered: {}", report.sanitizer_triggered);
    let _ = writeln!(s, "Sanitizer fixed: {}", report.sanitizer_fixed);
    s
}
