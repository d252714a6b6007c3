//! `simulate`: run the all-users baseline plus each configured split variant
//! over the same market, seed, and horizon, and emit ledgers with
//! figure-ready skew and CPM tables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use adparity_core::deliverysim::run_horizon;
use adparity_core::intervention::{build_split, SplitPlan, SplitVariant};
use adparity_core::metrics::{skew_estimate, skew_series};
use adparity_core::{EngagementRecord, Error, Money, SkewMetric, Targeting};
use chrono::Days;
use serde_json::{json, Map, Value};

use crate::config::SimulateInputs;
use crate::csvio::{self, LedgerRow};
use crate::errors::{CliError, CliResult};
use crate::report;

pub struct SimulateArgs {
    pub inputs: SimulateInputs,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub config_sha256: String,
}

struct VariantRun {
    variant: SplitVariant,
    plan: SplitPlan,
    /// Full-horizon ledger, as emitted.
    ledger: Vec<EngagementRecord>,
    /// Post-warm-up subset used for every analysis table.
    analyzed: Vec<EngagementRecord>,
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    let inputs = &args.inputs;
    let run = inputs.run;
    let schedule = inputs.intervention.cycle.schedule_for(run.horizon_days)?;

    let mut variants = vec![SplitVariant::AllUsers];
    variants.extend(inputs.intervention.split_variants.iter().copied());

    let analysis_start = run
        .start_date
        .checked_add_days(Days::new(run.warm_up_days as u64))
        .ok_or_else(|| CliError::Validation("warm-up overflows the calendar".into()))?;

    let mut runs = Vec::new();
    for &variant in &variants {
        let plan = build_split(
            &inputs.original,
            variant,
            inputs.intervention.ratio,
            inputs.intervention.caps,
            Some(schedule.clone()),
        )?;
        let ledger = run_horizon(
            &plan.campaigns,
            &inputs.market,
            run.horizon_days,
            args.seed,
            run.start_date,
        )?;
        let analyzed: Vec<EngagementRecord> = ledger
            .iter()
            .filter(|record| record.date >= analysis_start)
            .cloned()
            .collect();
        runs.push(VariantRun {
            variant,
            plan,
            ledger,
            analyzed,
        });
    }

    let mut summary_variants = Map::new();
    let mut notes: Vec<String> = Vec::new();
    if run.warm_up_days > 0 {
        notes.push(format!(
            "first {} day(s) treated as warm-up: kept in ledgers, excluded from analyses",
            run.warm_up_days
        ));
    }
    for variant_run in &runs {
        let slug = variant_run.variant.as_str();
        let targeting_of: BTreeMap<&str, Targeting> = variant_run
            .plan
            .campaigns
            .iter()
            .map(|c| (c.campaign_id.as_str(), c.targeting))
            .collect();
        let rows: Vec<LedgerRow> = variant_run
            .ledger
            .iter()
            .map(|record| LedgerRow {
                record: record.clone(),
                targeting: targeting_of[record.campaign_id.as_str()],
            })
            .collect();
        csvio::emit_csv_file(&args.out_dir.join(format!("ledger_{slug}.csv")), &rows)?;

        let mut entry = Map::new();
        entry.insert(
            "campaigns".into(),
            json!(variant_run
                .plan
                .campaigns
                .iter()
                .map(|c| c.campaign_id.clone())
                .collect::<Vec<_>>()),
        );
        let (impressions, clicks, spend) = totals(&variant_run.analyzed);
        entry.insert("impressions".into(), json!(impressions));
        entry.insert("clicks".into(), json!(clicks));
        entry.insert("spend_usd".into(), json!(spend.dollars()));

        if variant_run.analyzed.is_empty() {
            notes.push(format!(
                "variant {slug}: no post-warm-up records; skew skipped"
            ));
            entry.insert("skew_impressions".into(), Value::Null);
            entry.insert("skew_spend".into(), Value::Null);
        } else {
            let series = skew_series(
                &variant_run.analyzed,
                inputs.audit.window,
                SkewMetric::Impressions,
                inputs.audit.focal,
                inputs.audit.level,
            )?;
            report::write_skew_series_csv(&args.out_dir.join(format!("skew_{slug}.csv")), &series)?;
            for (key, metric) in [
                ("skew_impressions", SkewMetric::Impressions),
                ("skew_spend", SkewMetric::Spend),
            ] {
                let value = match skew_estimate(
                    &variant_run.analyzed,
                    metric,
                    inputs.audit.focal,
                    inputs.audit.level,
                ) {
                    Ok(estimate) => report::estimate_json(&estimate),
                    Err(Error::UndefinedSkew) => {
                        notes.push(format!(
                            "variant {slug}: {} skew undefined",
                            metric.as_str()
                        ));
                        Value::Null
                    }
                    Err(e) => return Err(e.into()),
                };
                entry.insert(key.into(), value);
            }
        }
        summary_variants.insert(slug.into(), Value::Object(entry));
        println!(
            "simulate: {slug}: {} ledger rows over {} day(s)",
            variant_run.ledger.len(),
            run.horizon_days
        );
    }

    write_cpm_table(&args.out_dir.join("cpm_table.csv"), &runs)?;

    let mut summary =
        report::summary_base("simulate", Some(args.seed), Some(&args.config_sha256), None);
    summary.insert(
        "params".into(),
        json!({
            "start_date": run.start_date.format("%Y-%m-%d").to_string(),
            "horizon_days": run.horizon_days,
            "warm_up_days": run.warm_up_days,
            "level": inputs.audit.level,
            "window": super::audit::window_name(inputs.audit.window),
            "focal": inputs.audit.focal.as_str(),
            "desired_female_share": inputs.intervention.ratio.female_share(),
            "spend_ci_units": report::SPEND_CI_UNITS,
        }),
    );
    summary.insert("variants".into(), Value::Object(summary_variants));
    summary.insert("notes".into(), json!(notes));
    report::write_json(
        &args.out_dir.join("simulate_summary.json"),
        &Value::Object(summary),
    )?;
    Ok(())
}

fn totals(records: &[EngagementRecord]) -> (u64, u64, Money) {
    let mut impressions = 0;
    let mut clicks = 0;
    let mut spend = Money::ZERO;
    for record in records {
        impressions += record.impressions;
        clicks += record.clicks;
        spend += record.spend;
    }
    (impressions, clicks, spend)
}

/// CPM at every useful granularity: per campaign per label, per campaign,
/// per label across campaigns, and blended per variant. Aggregate cells use
/// the `(all)` marker; zero-impression groups leave the cpm cell empty.
fn write_cpm_table(path: &Path, runs: &[VariantRun]) -> CliResult<()> {
    report::ensure_parent(path)?;
    let file = std::fs::File::create(path).map_err(|e| CliError::io_at(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    writer.write_record([
        "variant",
        "campaign_id",
        "label",
        "impressions",
        "clicks",
        "spend",
        "cpm_usd",
    ])?;

    type Key = (String, String);
    for variant_run in runs {
        let slug = variant_run.variant.as_str();
        let mut cells: BTreeMap<Key, (u64, u64, Money)> = BTreeMap::new();
        for record in &variant_run.analyzed {
            let keys = [
                (
                    record.campaign_id.clone(),
                    record.label.as_str().to_string(),
                ),
                (record.campaign_id.clone(), "(all)".to_string()),
                ("(all)".to_string(), record.label.as_str().to_string()),
                ("(all)".to_string(), "(all)".to_string()),
            ];
            for key in keys {
                let cell = cells.entry(key).or_insert((0, 0, Money::ZERO));
                cell.0 += record.impressions;
                cell.1 += record.clicks;
                cell.2 += record.spend;
            }
        }
        // Campaigns that bought nothing still appear, with empty CPM cells.
        for campaign in &variant_run.plan.campaigns {
            cells
                .entry((campaign.campaign_id.clone(), "(all)".to_string()))
                .or_insert((0, 0, Money::ZERO));
        }
        for ((campaign_id, label), (impressions, clicks, spend)) in &cells {
            let cpm = if *impressions > 0 {
                format!("{:.4}", 1000.0 * spend.dollars() / *impressions as f64)
            } else {
                String::new()
            };
            writer.write_record([
                slug.to_string(),
                campaign_id.clone(),
                label.clone(),
                impressions.to_string(),
                clicks.to_string(),
                spend.to_string(),
                cpm,
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}
