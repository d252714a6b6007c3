//! `montecarlo`: bound the skew uncertainty introduced by unknown-label
//! users under a family of priors.

use std::path::{Path, PathBuf};

use adparity_core::unknownsim::{
    prior_p, simulate_unknown_skew, summarize_distribution, DistributionSummary, ObservedCounts,
    PriorModel,
};
use serde_json::{json, Value};

use crate::config::{hex_digest, MonteCarloParams};
use crate::csvio;
use crate::errors::{CliError, CliResult};
use crate::report;

pub struct MonteCarloArgs {
    pub params: MonteCarloParams,
    /// Ledger path; when given, observed counts are its per-label
    /// impression sums and override any counts in the config.
    pub input: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub config_sha256: Option<String>,
}

pub fn run(args: &MonteCarloArgs) -> CliResult<()> {
    let mut input_sha256 = None;
    let observed = match &args.input {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|e| CliError::io_at(path, e))?;
            input_sha256 = Some(hex_digest(&bytes));
            let (rows, warnings) = csvio::ingest_csv(path)?;
            for warning in &warnings {
                eprintln!("warning: {warning}");
            }
            ObservedCounts::from_records(&csvio::records(&rows))
        }
        None => args.params.observed.ok_or_else(|| {
            CliError::Validation(
                "observed counts required: pass --input <ledger.csv> or set \
                 [montecarlo.observed] in the config"
                    .into(),
            )
        })?,
    };
    if observed.n_total() == 0 {
        return Err(CliError::Validation(
            "observed counts are all zero; nothing to simulate".into(),
        ));
    }

    let params = &args.params;
    let mut notes: Vec<String> = Vec::new();
    let known_only_skew = if observed.n_known() > 0 {
        Some(observed.n_male as f64 / observed.n_known() as f64)
    } else {
        notes.push("no known-labeled units; known-only skew undefined".into());
        None
    };

    let mut prior_reports = Vec::new();
    for prior in &params.priors {
        let slug = prior.name();
        match simulate_unknown_skew(&observed, prior, params.draws, params.seed) {
            Ok(distribution) => {
                let summary = summarize_distribution(&distribution, params.bins)?;
                write_histogram_csv(
                    &args.out_dir.join(format!("montecarlo_{slug}.csv")),
                    &summary,
                )?;
                prior_reports.push(json!({
                    "prior": slug,
                    "params": prior_params(prior),
                    "prior_p_mean": prior_p(prior, &observed).ok(),
                    "mean": summary.mean,
                    "q01": summary.q01,
                    "q50": summary.q50,
                    "q99": summary.q99,
                    "mode_bin": {
                        "low": summary.mode_low,
                        "high": summary.mode_high,
                    },
                    "error": Value::Null,
                }));
                println!(
                    "montecarlo: {slug}: mean {:.4}, 1%-99% range [{:.4}, {:.4}]",
                    summary.mean, summary.q01, summary.q99
                );
            }
            Err(e) => {
                // One prior's precondition failure must not silence the rest.
                prior_reports.push(json!({
                    "prior": slug,
                    "params": prior_params(prior),
                    "error": e.to_string(),
                }));
                eprintln!("montecarlo: {slug}: skipped: {e}");
            }
        }
    }

    let mut summary = report::summary_base(
        "montecarlo",
        Some(params.seed),
        args.config_sha256.as_deref(),
        input_sha256.as_deref(),
    );
    summary.insert(
        "params".into(),
        json!({"draws": params.draws, "bins": params.bins}),
    );
    summary.insert(
        "observed".into(),
        json!({
            "male": observed.n_male,
            "female": observed.n_female,
            "unknown": observed.n_unknown,
        }),
    );
    summary.insert(
        "reference".into(),
        json!({"known_only_skew": known_only_skew, "parity_target": report::PARITY_TARGET}),
    );
    summary.insert("priors".into(), Value::Array(prior_reports));
    summary.insert("notes".into(), json!(notes));
    report::write_json(
        &args.out_dir.join("montecarlo_summary.json"),
        &Value::Object(summary),
    )?;
    Ok(())
}

fn prior_params(prior: &PriorModel) -> Value {
    match prior {
        PriorModel::NormalInformative { sigma_p } => json!({"sigma_p": sigma_p}),
        PriorModel::BinomialSimilarWeb { p_fixed } | PriorModel::SimilarWebSolve { p_fixed } => {
            json!({"p_fixed": p_fixed})
        }
        _ => json!({}),
    }
}

/// Figure-ready histogram: one row per bin over [0, 1].
fn write_histogram_csv(path: &Path, summary: &DistributionSummary) -> CliResult<()> {
    report::ensure_parent(path)?;
    let file = std::fs::File::create(path).map_err(|e| CliError::io_at(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    writer.write_record(["bin_low", "bin_high", "count"])?;
    let width = 1.0 / summary.bins as f64;
    for (index, count) in summary.histogram.iter().enumerate() {
        writer.write_record([
            format!("{:.6}", index as f64 * width),
            format!("{:.6}", (index + 1) as f64 * width),
            count.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}
