//! Shared reporting plumbing: provenance stamps, JSON documents, and the
//! figure-ready CSV tables that more than one command emits.

use std::path::Path;

use adparity_core::metrics::{parity_test, WindowSkew};
use adparity_core::SkewEstimate;
use serde_json::{json, Map, Value};

use crate::errors::{CliError, CliResult};

/// The skew value parity is judged against.
pub const PARITY_TARGET: f64 = 0.5;

/// Documented unit heuristic for spend-based confidence intervals: cents are
/// treated as CI trials even though they are not independent.
pub const SPEND_CI_UNITS: &str = "cents (heuristic)";

pub fn tool_version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

/// Every report starts from this stamp so any output can be traced back to
/// the exact inputs that produced it.
pub fn summary_base(
    command: &str,
    seed: Option<u64>,
    config_sha256: Option<&str>,
    input_sha256: Option<&str>,
) -> Map<String, Value> {
    let mut map = Map::new();
    map.insert("tool".into(), json!("adparity"));
    map.insert("tool_version".into(), json!(tool_version()));
    map.insert("command".into(), json!(command));
    map.insert("seed".into(), json!(seed));
    map.insert("config_sha256".into(), json!(config_sha256));
    map.insert("input_sha256".into(), json!(input_sha256));
    map
}

pub fn estimate_json(estimate: &SkewEstimate) -> Value {
    json!({
        "metric": estimate.metric.as_str(),
        "skew": estimate.point,
        "ci_low": estimate.ci_low,
        "ci_high": estimate.ci_high,
        "level": estimate.level,
        "n_focal": estimate.n_focal,
        "n_total": estimate.n_total,
        "parity": parity_test(estimate, PARITY_TARGET),
    })
}

pub fn write_json(path: &Path, value: &Value) -> CliResult<()> {
    ensure_parent(path)?;
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Validation(format!("serializing {}: {e}", path.display())))?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::io_at(path, e))
}

pub fn ensure_parent(path: &Path) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io_at(parent, e))?;
        }
    }
    Ok(())
}

/// One skew series as a figure-ready table. Undefined windows (no labeled
/// units) keep their date bounds and carry an `undefined` verdict with empty
/// numeric cells.
pub fn write_skew_series_csv(path: &Path, series: &[WindowSkew]) -> CliResult<()> {
    ensure_parent(path)?;
    let file = std::fs::File::create(path).map_err(|e| CliError::io_at(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    writer.write_record([
        "window_start",
        "window_end",
        "partial",
        "n_focal",
        "n_total",
        "skew",
        "ci_low",
        "ci_high",
        "parity",
    ])?;
    for window in series {
        let (n_focal, n_total, skew, ci_low, ci_high, parity) = match &window.estimate {
            Some(estimate) => (
                estimate.n_focal.to_string(),
                estimate.n_total.to_string(),
                format!("{:.6}", estimate.point),
                format!("{:.6}", estimate.ci_low),
                format!("{:.6}", estimate.ci_high),
                parity_test(estimate, PARITY_TARGET).to_string(),
            ),
            None => (
                "0".into(),
                "0".into(),
                String::new(),
                String::new(),
                String::new(),
                "undefined".into(),
            ),
        };
        writer.write_record([
            window.start.format("%Y-%m-%d").to_string(),
            window.end.format("%Y-%m-%d").to_string(),
            window.partial.to_string(),
            n_focal,
            n_total,
            skew,
            ci_low,
            ci_high,
            parity,
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn count_undefined(series: &[WindowSkew]) -> usize {
    series.iter().filter(|w| w.estimate.is_none()).count()
}
