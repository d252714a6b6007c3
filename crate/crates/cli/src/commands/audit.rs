//! `audit`: skew estimates and parity verdicts over an engagement ledger.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use adparity_core::metrics::{rates_by_label, scaled_reach_delta, skew_estimate, skew_series};
use adparity_core::{EngagementRecord, Error, GroupLabel, Money, SkewMetric};
use serde_json::{json, Value};

use crate::config::{hex_digest, AuditParams};
use crate::csvio;
use crate::errors::{CliError, CliResult};
use crate::report;

pub struct AuditArgs {
    pub input: PathBuf,
    pub out_dir: PathBuf,
    pub params: AuditParams,
    pub config_sha256: Option<String>,
}

pub fn run(args: &AuditArgs) -> CliResult<()> {
    let input_bytes = std::fs::read(&args.input).map_err(|e| CliError::io_at(&args.input, e))?;
    let input_sha256 = hex_digest(&input_bytes);
    let (rows, warnings) = csvio::ingest_csv(&args.input)?;
    for warning in &warnings {
        eprintln!("warning: {warning}");
    }
    let records = csvio::records(&rows);
    if records.is_empty() {
        return Err(CliError::Validation(format!(
            "{}: no data rows to audit",
            args.input.display()
        )));
    }

    let params = &args.params;
    let mut notes: Vec<String> = Vec::new();

    let impressions_series = skew_series(
        &records,
        params.window,
        SkewMetric::Impressions,
        params.focal,
        params.level,
    )?;
    let spend_series = skew_series(
        &records,
        params.window,
        SkewMetric::Spend,
        params.focal,
        params.level,
    )?;
    report::write_skew_series_csv(
        &args.out_dir.join("skew_impressions.csv"),
        &impressions_series,
    )?;
    report::write_skew_series_csv(&args.out_dir.join("skew_spend.csv"), &spend_series)?;

    let whole = |metric: SkewMetric| -> CliResult<Option<Value>> {
        match skew_estimate(&records, metric, params.focal, params.level) {
            Ok(estimate) => Ok(Some(report::estimate_json(&estimate))),
            Err(Error::UndefinedSkew) => Ok(None),
            Err(e) => Err(e.into()),
        }
    };
    let whole_impressions = whole(SkewMetric::Impressions)?;
    let whole_spend = whole(SkewMetric::Spend)?;
    if whole_impressions.is_none() {
        notes.push("impression skew undefined over the whole range (no labeled units)".into());
    }
    if whole_spend.is_none() {
        notes.push("spend skew undefined over the whole range (no labeled spend)".into());
    }

    let rates = write_rates_csv(
        &args.out_dir.join("rates_by_label.csv"),
        &records,
        &mut notes,
    )?;

    let reach_delta = match (params.baseline_skew, &whole_impressions) {
        (Some(baseline), Some(estimate)) => {
            let point = estimate["skew"].as_f64().expect("estimate has a point");
            let n_total = estimate["n_total"].as_u64().expect("estimate has trials");
            let delta = scaled_reach_delta(baseline, point, n_total)?;
            Some(json!({
                "baseline_skew": baseline,
                "audited_skew": point,
                "labeled_impressions": n_total,
                "complement_impressions_gained": delta,
            }))
        }
        (Some(_), None) => {
            notes.push("scaled reach delta skipped: whole-range skew undefined".into());
            None
        }
        (None, _) => None,
    };

    let mut summary = report::summary_base(
        "audit",
        None,
        args.config_sha256.as_deref(),
        Some(&input_sha256),
    );
    summary.insert("input".into(), json!(args.input.display().to_string()));
    summary.insert(
        "params".into(),
        json!({
            "level": params.level,
            "window": window_name(params.window),
            "focal": params.focal.as_str(),
            "spend_ci_units": report::SPEND_CI_UNITS,
        }),
    );
    summary.insert(
        "whole_range".into(),
        json!({"impressions": whole_impressions, "spend": whole_spend}),
    );
    summary.insert(
        "windows".into(),
        json!({
            "count": impressions_series.len(),
            "undefined_impressions": report::count_undefined(&impressions_series),
            "undefined_spend": report::count_undefined(&spend_series),
        }),
    );
    summary.insert("rates_by_label".into(), rates);
    summary.insert(
        "scaled_reach_delta".into(),
        reach_delta.unwrap_or(Value::Null),
    );
    summary.insert("ingest_warnings".into(), json!(warnings));
    summary.insert("notes".into(), json!(notes));
    report::write_json(
        &args.out_dir.join("audit_summary.json"),
        &Value::Object(summary),
    )?;
    println!(
        "audit: {} windows analyzed; reports in {}",
        impressions_series.len(),
        args.out_dir.display()
    );
    Ok(())
}

pub fn window_name(window: adparity_core::metrics::AggregationWindow) -> &'static str {
    match window {
        adparity_core::metrics::AggregationWindow::Daily => "daily",
        adparity_core::metrics::AggregationWindow::Weekly => "weekly",
        adparity_core::metrics::AggregationWindow::Whole => "whole",
    }
}

/// Per-label funnel rates; labels with zero impressions cannot have rates
/// and are skipped with a note.
fn write_rates_csv(
    path: &Path,
    records: &[EngagementRecord],
    notes: &mut Vec<String>,
) -> CliResult<Value> {
    let mut totals: BTreeMap<GroupLabel, (u64, u64, u64, Money)> = BTreeMap::new();
    for record in records {
        let entry = totals.entry(record.label).or_insert((0, 0, 0, Money::ZERO));
        entry.0 += record.impressions;
        entry.1 += record.clicks;
        entry.2 += record.conversions;
        entry.3 += record.spend;
    }
    let with_impressions: Vec<EngagementRecord> = records
        .iter()
        .filter(|r| totals[&r.label].0 > 0)
        .cloned()
        .collect();
    for (label, (impressions, ..)) in &totals {
        if *impressions == 0 {
            notes.push(format!(
                "label {label} has zero impressions; rates undefined, omitted from rates_by_label.csv"
            ));
        }
    }
    let rates = if with_impressions.is_empty() {
        BTreeMap::new()
    } else {
        rates_by_label(&with_impressions)?
    };

    report::ensure_parent(path)?;
    let file = std::fs::File::create(path).map_err(|e| CliError::io_at(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    writer.write_record([
        "label",
        "impressions",
        "clicks",
        "conversions",
        "spend",
        "ctr",
        "cvr",
        "cpm",
    ])?;
    let mut json_rates = serde_json::Map::new();
    for (label, metrics) in &rates {
        let (impressions, clicks, conversions, spend) = totals[label];
        writer.write_record([
            label.as_str().to_string(),
            impressions.to_string(),
            clicks.to_string(),
            conversions.to_string(),
            spend.to_string(),
            format!("{:.6}", metrics.ctr),
            format!("{:.6}", metrics.cvr),
            format!("{:.4}", metrics.cpm),
        ])?;
        json_rates.insert(
            label.as_str().into(),
            json!({
                "impressions": impressions,
                "clicks": clicks,
                "conversions": conversions,
                "spend_usd": spend.dollars(),
                "ctr": metrics.ctr,
                "cvr": metrics.cvr,
                "cpm_usd": metrics.cpm,
            }),
        );
    }
    writer.flush()?;
    Ok(Value::Object(json_rates))
}
