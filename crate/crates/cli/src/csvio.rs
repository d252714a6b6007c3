//! Canonical ledger CSV: ingest with lenient invariant checking and emit
//! with fixed formatting, so a round trip reproduces the file byte for byte
//! (modulo line endings).

use std::path::Path;
use std::str::FromStr;

use adparity_core::{validate_record, EngagementRecord, GroupLabel, Money, Targeting};
use chrono::NaiveDate;

use crate::errors::{CliError, CliResult};

/// The one and only ledger schema. Header names and order are fixed.
pub const CANONICAL_HEADER: [&str; 8] = [
    "date",
    "campaign_id",
    "targeting",
    "label",
    "impressions",
    "clicks",
    "conversions",
    "spend",
];

/// One ledger line: an engagement record plus the targeting of the campaign
/// that bought it.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerRow {
    pub record: EngagementRecord,
    pub targeting: Targeting,
}

/// Reads a canonical ledger file. Header or field-level parse problems are
/// fatal; rows that parse but break engagement invariants (funnel order,
/// spend without clicks) are kept and reported as warnings, because audits
/// should see all spend.
pub fn ingest_csv(path: &Path) -> CliResult<(Vec<LedgerRow>, Vec<String>)> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io_at(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);

    let headers = reader.headers()?.clone();
    let found: Vec<&str> = headers.iter().collect();
    if found != CANONICAL_HEADER {
        return Err(CliError::Validation(format!(
            "{}: header must be exactly `{}`, found `{}`",
            path.display(),
            CANONICAL_HEADER.join(","),
            found.join(",")
        )));
    }

    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for (index, result) in reader.records().enumerate() {
        let line = index + 2; // 1-based, after the header line
        let raw = result?;
        if raw.len() != CANONICAL_HEADER.len() {
            return Err(CliError::Validation(format!(
                "{}: line {line}: expected {} fields, found {}",
                path.display(),
                CANONICAL_HEADER.len(),
                raw.len()
            )));
        }
        let field = |i: usize| raw.get(i).unwrap_or("");
        let parse_error = |column: &str, value: &str, reason: &dyn std::fmt::Display| {
            CliError::Validation(format!(
                "{}: line {line}: bad {column} `{value}`: {reason}",
                path.display()
            ))
        };

        let date = NaiveDate::parse_from_str(field(0), "%Y-%m-%d")
            .map_err(|e| parse_error("date", field(0), &e))?;
        let campaign_id = field(1).to_string();
        let targeting =
            Targeting::from_str(field(2)).map_err(|e| parse_error("targeting", field(2), &e))?;
        let label =
            GroupLabel::from_str(field(3)).map_err(|e| parse_error("label", field(3), &e))?;
        let counts: Vec<u64> = (4..7)
            .map(|i| {
                field(i)
                    .parse::<u64>()
                    .map_err(|e| parse_error(CANONICAL_HEADER[i], field(i), &e))
            })
            .collect::<CliResult<_>>()?;
        let spend = Money::from_str(field(7)).map_err(|e| parse_error("spend", field(7), &e))?;

        let record = EngagementRecord {
            campaign_id,
            date,
            label,
            impressions: counts[0],
            clicks: counts[1],
            conversions: counts[2],
            spend,
        };
        for violation in validate_record(&record) {
            warnings.push(format!(
                "{}: line {line}: {violation} (row kept)",
                path.display()
            ));
        }
        rows.push(LedgerRow { record, targeting });
    }
    Ok((rows, warnings))
}

/// Writes rows in the canonical schema to any sink.
pub fn emit_csv<W: std::io::Write>(sink: W, rows: &[LedgerRow]) -> CliResult<()> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(CANONICAL_HEADER)?;
    for row in rows {
        let r = &row.record;
        writer.write_record([
            r.date.format("%Y-%m-%d").to_string(),
            r.campaign_id.clone(),
            row.targeting.as_str().to_string(),
            r.label.as_str().to_string(),
            r.impressions.to_string(),
            r.clicks.to_string(),
            r.conversions.to_string(),
            r.spend.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes rows to a file, creating parent directories as needed.
pub fn emit_csv_file(path: &Path, rows: &[LedgerRow]) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io_at(parent, e))?;
        }
    }
    let file = std::fs::File::create(path).map_err(|e| CliError::io_at(path, e))?;
    emit_csv(file, rows)
}

/// Drops the targeting column, leaving plain engagement records.
pub fn records(rows: &[LedgerRow]) -> Vec<EngagementRecord> {
    rows.iter().map(|row| row.record.clone()).collect()
}
