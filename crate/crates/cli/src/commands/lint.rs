//! `lint`: advisory checklist over a scenario configuration, flagging
//! settings that are valid but likely to confound a skew experiment.

use adparity_core::deliverysim::MarketModel;
use adparity_core::intervention::SplitVariant;
use adparity_core::{BiddingStrategy, CampaignConfig, GroupLabel};

use crate::config::{
    validated_campaign, validated_intervention, validated_market, validated_run, Issues,
    ScenarioConfig,
};
use crate::errors::CliResult;

pub struct Advisory {
    pub kind: &'static str,
    pub message: String,
}

/// Validates whichever sections are present (fatal on invalid fields), then
/// returns the advisory list. An empty list means a clean config.
pub fn lint_config(config: &ScenarioConfig) -> CliResult<Vec<Advisory>> {
    let mut issues = Issues::default();
    let market = config
        .market
        .as_ref()
        .map(|section| validated_market(&mut issues, section));
    let campaigns: Vec<CampaignConfig> = config
        .campaigns
        .iter()
        .enumerate()
        .map(|(index, section)| validated_campaign(&mut issues, index, section))
        .collect();
    let intervention = validated_intervention(
        &mut issues,
        &config.intervention.clone().unwrap_or_default(),
    );
    let run = config
        .run
        .as_ref()
        .map(|section| validated_run(&mut issues, section));
    if !issues.is_empty() {
        return Err(issues.into_error());
    }

    let mut advisories = Vec::new();

    // A target CPA below what the market can possibly deliver starves the
    // campaign: no opportunity passes the expected-cost filter.
    if let Some(market) = &market {
        for campaign in &campaigns {
            if let BiddingStrategy::MaxConversions { target_cpa } = campaign.bidding {
                let implied = GroupLabel::ALL
                    .iter()
                    .filter(|&&label| campaign.targeting.contains(label))
                    .filter_map(|&label| implied_cost_per_conversion(market, label))
                    .fold(f64::INFINITY, f64::min);
                if implied.is_infinite() {
                    advisories.push(Advisory {
                        kind: "low_target_cpa",
                        message: format!(
                            "campaign {}: no targeted label has a positive conversion rate; \
                             the max-conversions strategy can never accept an opportunity",
                            campaign.campaign_id
                        ),
                    });
                } else if target_cpa.dollars() < implied {
                    advisories.push(Advisory {
                        kind: "low_target_cpa",
                        message: format!(
                            "campaign {}: target CPA ${} is below the market-implied minimum \
                             cost per conversion ${:.2}; delivery will be throttled",
                            campaign.campaign_id, target_cpa, implied
                        ),
                    });
                }
            }
        }
    }

    // Audit windows shorter than the warm-up carry no analyzable days.
    if let Some(run) = run {
        if run.horizon_days < run.warm_up_days {
            advisories.push(Advisory {
                kind: "cold_start",
                message: format!(
                    "horizon of {} day(s) is shorter than the {}-day warm-up; \
                     every day would be discarded as cold start",
                    run.horizon_days, run.warm_up_days
                ),
            });
        }
    }

    // Sibling campaigns bidding on the same labels at the same time raise
    // each other's costs; cycles exist precisely to avoid this.
    for (i, first) in campaigns.iter().enumerate() {
        for second in campaigns.iter().skip(i + 1) {
            let shared: Vec<&str> = GroupLabel::ALL
                .iter()
                .filter(|&&label| {
                    first.targeting.contains(label) && second.targeting.contains(label)
                })
                .map(|label| label.as_str())
                .collect();
            if !shared.is_empty() {
                advisories.push(Advisory {
                    kind: "self_competition",
                    message: format!(
                        "campaigns {} and {} are concurrently eligible for label(s) {}; \
                         they will bid against each other",
                        first.campaign_id,
                        second.campaign_id,
                        shared.join(", ")
                    ),
                });
            }
        }
    }

    // An unbalanced alternation biases delivery toward whichever cycle got
    // the extra slots.
    if intervention
        .split_variants
        .contains(&SplitVariant::UnknownAwareSplit)
    {
        if let Some(run) = run {
            let schedule = intervention.cycle.schedule_for(run.horizon_days)?;
            if !schedule.is_balanced() {
                advisories.push(Advisory {
                    kind: "uneven_cycle",
                    message: format!(
                        "cycle schedule gives {} slot(s) to A and {} to B over {} day(s); \
                         sides get unequal exposure",
                        schedule.a_slots(),
                        schedule.b_slots(),
                        run.horizon_days
                    ),
                });
            }
        }
    }

    Ok(advisories)
}

fn implied_cost_per_conversion(market: &MarketModel, label: GroupLabel) -> Option<f64> {
    let cvr = market.cvr_given_click.get(label);
    if cvr <= 0.0 {
        return None;
    }
    Some(market.cpc_base.dollars() * market.cpc_premium.get(label) / cvr)
}

pub fn run(config: &ScenarioConfig) -> CliResult<()> {
    for advisory in lint_config(config)? {
        println!("advisory[{}]: {}", advisory.kind, advisory.message);
    }
    Ok(())
}
