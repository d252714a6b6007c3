//! `plan`: construct a budget-split intervention as a document a human
//! advertiser could transcribe into an ad platform.

use std::path::PathBuf;

use adparity_core::intervention::{
    allocate_budgets, build_split, reallocate, SplitPlan, SplitVariant,
};
use adparity_core::{Activation, Cycle};
use serde_json::{json, Value};

use crate::config::PlanInputs;
use crate::errors::CliResult;
use crate::report;

pub struct PlanArgs {
    pub inputs: PlanInputs,
    pub variant: SplitVariant,
    pub out_dir: PathBuf,
    pub config_sha256: String,
}

pub fn run(args: &PlanArgs) -> CliResult<()> {
    let inputs = &args.inputs;
    let schedule = match inputs.horizon_days {
        Some(horizon) => Some(inputs.intervention.cycle.schedule_for(horizon)?),
        None => None, // build_split falls back to daily alternation over six weeks
    };
    let mut plan = build_split(
        &inputs.original,
        args.variant,
        inputs.intervention.ratio,
        inputs.intervention.caps,
        schedule,
    )?;
    if let Some(cpms) = inputs.intervention.observed_cpms {
        if args.variant != SplitVariant::AllUsers {
            let sides = allocate_budgets(
                inputs.original.daily_budget,
                inputs.intervention.ratio,
                Some(cpms),
            )?;
            plan = reallocate(&plan, sides)?;
        }
    }

    print_table(&plan, args);
    let document = plan_json(&plan, args);
    report::write_json(&args.out_dir.join("plan.json"), &document)?;
    Ok(())
}

fn activation_name(activation: &Activation) -> &'static str {
    match activation {
        Activation::AlwaysOn => "always",
        Activation::InCycle {
            cycle: Cycle::A, ..
        } => "cycle A",
        Activation::InCycle {
            cycle: Cycle::B, ..
        } => "cycle B",
    }
}

fn print_table(plan: &SplitPlan, args: &PlanArgs) {
    let original = &args.inputs.original;
    println!(
        "plan: {} of campaign \"{}\" (${}/day)",
        plan.variant.as_str(),
        original.campaign_id,
        original.daily_budget
    );
    println!(
        "  {:<32} {:<16} {:>14}  {}",
        "campaign", "targeting", "daily budget", "active"
    );
    for campaign in &plan.campaigns {
        println!(
            "  {:<32} {:<16} {:>14}  {}",
            campaign.campaign_id,
            campaign.targeting.as_str(),
            format!("${}", plan.budgets[&campaign.campaign_id]),
            activation_name(&campaign.activation)
        );
    }
    if let Some(schedule) = &plan.schedule {
        println!(
            "  schedule: {} slots total, alternating every {} slot(s), {} slot(s)/day, {} first ({} A / {} B)",
            schedule.horizon(),
            schedule.period(),
            schedule.slots_per_day(),
            match schedule.phase() {
                adparity_core::CyclePhase::AFirst => "A",
                adparity_core::CyclePhase::BFirst => "B",
            },
            schedule.a_slots(),
            schedule.b_slots()
        );
    }
    println!("  total: ${}", plan.total_budget());
}

fn plan_json(plan: &SplitPlan, args: &PlanArgs) -> Value {
    let mut summary = report::summary_base("plan", None, Some(&args.config_sha256), None);
    summary.insert("variant".into(), json!(plan.variant.as_str()));
    summary.insert(
        "desired_female_share".into(),
        json!(args.inputs.intervention.ratio.female_share()),
    );
    summary.insert(
        "campaigns".into(),
        json!(plan
            .campaigns
            .iter()
            .map(|campaign| {
                json!({
                    "campaign_id": campaign.campaign_id,
                    "targeting": campaign.targeting.as_str(),
                    "daily_budget_usd": campaign.daily_budget.dollars(),
                    "active": activation_name(&campaign.activation),
                })
            })
            .collect::<Vec<_>>()),
    );
    summary.insert(
        "schedule".into(),
        match &plan.schedule {
            Some(schedule) => json!({
                "period_slots": schedule.period(),
                "horizon_slots": schedule.horizon(),
                "slots_per_day": schedule.slots_per_day(),
                "phase": match schedule.phase() {
                    adparity_core::CyclePhase::AFirst => "a_first",
                    adparity_core::CyclePhase::BFirst => "b_first",
                },
                "a_slots": schedule.a_slots(),
                "b_slots": schedule.b_slots(),
            }),
            None => Value::Null,
        },
    );
    summary.insert(
        "total_budget_usd".into(),
        json!(plan.total_budget().dollars()),
    );
    Value::Object(summary)
}
