//! Budget-split interventions: rewriting one all-users campaign into
//! group-targeted campaigns whose budgets steer delivery toward a desired
//! gender ratio, including variants that keep unknown-labeled users
//! reachable, plus the iterative budget rebalancer.

use crate::error::{Error, Result};
use crate::money::Money;
use crate::schedule::{make_schedule, Cycle, CyclePhase, CycleSchedule};
use crate::types::{Activation, CampaignConfig, EngagementRecord, Side, Targeting};
use serde::Serialize;
use std::collections::BTreeMap;

/// Target male share of delivered impressions (female share is the rest).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DesiredRatio {
    male_share: f64,
}

impl DesiredRatio {
    pub fn new(male_share: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&male_share) {
            return Err(Error::InvalidArgument(format!(
                "desired male share must lie in [0, 1], got {male_share}"
            )));
        }
        Ok(DesiredRatio { male_share })
    }

    pub fn male_share(&self) -> f64 {
        self.male_share
    }

    pub fn female_share(&self) -> f64 {
        1.0 - self.male_share
    }
}

impl Default for DesiredRatio {
    fn default() -> Self {
        DesiredRatio { male_share: 0.5 }
    }
}

/// The three intervention structures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitVariant {
    /// The untouched original campaign.
    AllUsers,
    /// Two single-gender campaigns; unknown users become unreachable.
    DirectSplit,
    /// Four campaigns in two alternating cycles; each cycle pairs a
    /// single-gender campaign with the complementary gender-plus-unknown
    /// campaign, so unknown users stay reachable without sibling competition
    /// on any label.
    UnknownAwareSplit,
}

impl SplitVariant {
    pub const fn as_str(self) -> &'static str {
        match self {
            SplitVariant::AllUsers => "all_users",
            SplitVariant::DirectSplit => "direct_split",
            SplitVariant::UnknownAwareSplit => "unknown_aware_split",
        }
    }
}

/// What the ad platform supports. Unknown-aware splits need
/// exclude-targeting ("everyone except males"), which not every platform
/// offers; direct gender targeting is assumed universal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PlatformCaps {
    pub exclude_targeting: bool,
}

impl Default for PlatformCaps {
    fn default() -> Self {
        PlatformCaps {
            exclude_targeting: true,
        }
    }
}

/// Per-side observed cost per 1,000 impressions, in dollars.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SideCpms {
    pub male: f64,
    pub female: f64,
}

/// Per-side daily budgets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SideBudgets {
    pub male: Money,
    pub female: Money,
}

impl SideBudgets {
    pub fn get(&self, side: Side) -> Money {
        match side {
            Side::Male => self.male,
            Side::Female => self.female,
        }
    }

    pub fn total(&self) -> Money {
        self.male + self.female
    }
}

/// A constructed intervention: the campaign set, its per-campaign budgets,
/// and (for cycled variants) the activation schedule. Ready for a human to
/// transcribe into an ad platform.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitPlan {
    pub variant: SplitVariant,
    pub campaigns: Vec<CampaignConfig>,
    /// campaign_id → daily budget; always sums exactly to the original
    /// campaign's daily budget.
    pub budgets: BTreeMap<String, Money>,
    pub schedule: Option<CycleSchedule>,
}

impl SplitPlan {
    pub fn total_budget(&self) -> Money {
        self.budgets.values().copied().sum()
    }
}

/// Splits a daily budget between the gendered sides.
///
/// Without cost information each side receives its desired share. With
/// per-side CPMs the weights become share × CPM, which makes *purchased
/// impressions* (budget / CPM) proportional to the desired shares. Cents are
/// rounded with the remainder assigned deterministically to the male side.
pub fn allocate_budgets(
    total: Money,
    ratio: DesiredRatio,
    cpm_by_side: Option<SideCpms>,
) -> Result<SideBudgets> {
    if total.is_negative() {
        return Err(Error::InvalidArgument(format!(
            "total budget must be non-negative, got {total}"
        )));
    }
    let (weight_male, weight_female) = match cpm_by_side {
        None => (ratio.male_share(), ratio.female_share()),
        Some(cpms) => {
            for (side, cpm) in [("male", cpms.male), ("female", cpms.female)] {
                if !(cpm.is_finite() && cpm > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "{side}-side CPM must be positive, got {cpm}"
                    )));
                }
            }
            (
                ratio.male_share() * cpms.male,
                ratio.female_share() * cpms.female,
            )
        }
    };
    let weight_sum = weight_male + weight_female;
    if !(weight_sum.is_finite() && weight_sum > 0.0) {
        return Err(Error::InvalidArgument(
            "budget weights must have a positive sum".into(),
        ));
    }
    let female_cents = (total.cents() as f64 * weight_female / weight_sum).round() as i64;
    let female = Money::from_cents(female_cents.clamp(0, total.cents()));
    Ok(SideBudgets {
        male: total - female,
        female,
    })
}

/// Splits a side's budget between its two cycle campaigns: equal halves,
/// with an odd cent going to the single-gender campaign.
fn halve_toward_single_gender(side_total: Money) -> (Money, Money) {
    let single_gender = Money::from_cents((side_total.cents() + 1) / 2);
    (single_gender, side_total - single_gender)
}

/// The default six-week daily-alternation schedule used when an
/// unknown-aware split is built without an explicit schedule.
fn default_cycle_schedule() -> CycleSchedule {
    make_schedule(1, 42, CyclePhase::AFirst).expect("static parameters are valid")
}

/// Rewrites an all-users campaign into the requested split variant. Children
/// inherit the bidding strategy (including any target CPA) and the creative
/// label; initial budgets follow `allocate_budgets` with no cost priors.
///
/// `schedule` applies to the cycled (unknown-aware) variant and defaults to
/// daily alternation over six weeks.
pub fn build_split(
    original: &CampaignConfig,
    variant: SplitVariant,
    ratio: DesiredRatio,
    caps: PlatformCaps,
    schedule: Option<CycleSchedule>,
) -> Result<SplitPlan> {
    if original.targeting != Targeting::All {
        return Err(Error::InvalidArgument(format!(
            "budget splits start from an all-users campaign; {} targets {}",
            original.campaign_id, original.targeting
        )));
    }
    if original.daily_budget.is_negative() {
        return Err(Error::InvalidArgument(format!(
            "campaign {} has a negative daily budget",
            original.campaign_id
        )));
    }
    match variant {
        SplitVariant::AllUsers => {
            let campaign = original.clone();
            let mut budgets = BTreeMap::new();
            budgets.insert(campaign.campaign_id.clone(), campaign.daily_budget);
            Ok(SplitPlan {
                variant,
                campaigns: vec![campaign],
                budgets,
                schedule: None,
            })
        }
        SplitVariant::DirectSplit => {
            let sides = allocate_budgets(original.daily_budget, ratio, None)?;
            let child = |suffix: &str, targeting: Targeting, budget: Money| CampaignConfig {
                campaign_id: format!("{}-{suffix}", original.campaign_id),
                label: original.label.clone(),
                targeting,
                bidding: original.bidding,
                daily_budget: budget,
                activation: Activation::AlwaysOn,
            };
            let campaigns = vec![
                child("male", Targeting::Male, sides.male),
                child("female", Targeting::Female, sides.female),
            ];
            let budgets = campaigns
                .iter()
                .map(|c| (c.campaign_id.clone(), c.daily_budget))
                .collect();
            Ok(SplitPlan {
                variant,
                campaigns,
                budgets,
                schedule: None,
            })
        }
        SplitVariant::UnknownAwareSplit => {
            if !caps.exclude_targeting {
                return Err(Error::UnsupportedPlatform(
                    "unknown-aware splits require exclude-targeting (gender-plus-unknown audiences)"
                        .into(),
                ));
            }
            let schedule = schedule.unwrap_or_else(default_cycle_schedule);
            let sides = allocate_budgets(original.daily_budget, ratio, None)?;
            let (male_single, male_with_unknown) = halve_toward_single_gender(sides.male);
            let (female_single, female_with_unknown) = halve_toward_single_gender(sides.female);
            let child =
                |suffix: &str, targeting: Targeting, cycle: Cycle, budget: Money| CampaignConfig {
                    campaign_id: format!("{}-{suffix}", original.campaign_id),
                    label: original.label.clone(),
                    targeting,
                    bidding: original.bidding,
                    daily_budget: budget,
                    activation: Activation::InCycle {
                        cycle,
                        schedule: schedule.clone(),
                    },
                };
            let campaigns = vec![
                child("a-female", Targeting::Female, Cycle::A, female_single),
                child(
                    "a-male-unknown",
                    Targeting::MaleUnknown,
                    Cycle::A,
                    male_with_unknown,
                ),
                child("b-male", Targeting::Male, Cycle::B, male_single),
                child(
                    "b-female-unknown",
                    Targeting::FemaleUnknown,
                    Cycle::B,
                    female_with_unknown,
                ),
            ];
            let budgets = campaigns
                .iter()
                .map(|c| (c.campaign_id.clone(), c.daily_budget))
                .collect();
            Ok(SplitPlan {
                variant,
                campaigns,
                budgets,
                schedule: Some(schedule),
            })
        }
    }
}

/// Observed per-side CPMs for a plan's campaigns from a delivery ledger.
/// Engagement is attributed to the side of the campaign that bought it, so
/// unknown-labeled impressions inside a gender-plus-unknown campaign count
/// toward that campaign's side. Ledger rows from other campaigns are ignored.
pub fn side_cpms_from_ledger(plan: &SplitPlan, ledger: &[EngagementRecord]) -> Result<SideCpms> {
    let side_of: BTreeMap<&str, Side> = plan
        .campaigns
        .iter()
        .filter_map(|c| {
            c.targeting
                .side()
                .map(|side| (c.campaign_id.as_str(), side))
        })
        .collect();
    let mut impressions = BTreeMap::from([(Side::Male, 0u64), (Side::Female, 0u64)]);
    let mut spend = BTreeMap::from([(Side::Male, Money::ZERO), (Side::Female, Money::ZERO)]);
    for record in ledger {
        if let Some(&side) = side_of.get(record.campaign_id.as_str()) {
            *impressions.get_mut(&side).unwrap() += record.impressions;
            *spend.get_mut(&side).unwrap() += record.spend;
        }
    }
    let cpm_for = |side: Side| -> Result<f64> {
        let n = impressions[&side];
        if n == 0 {
            return Err(Error::InsufficientData(format!(
                "no impressions observed on the {} of the plan",
                side.as_str().replace('_', " ")
            )));
        }
        Ok(1000.0 * spend[&side].dollars() / n as f64)
    };
    Ok(SideCpms {
        male: cpm_for(Side::Male)?,
        female: cpm_for(Side::Female)?,
    })
}

/// Reallocates a split plan's budgets using CPMs observed in a delivery
/// ledger, preserving campaign structure and schedule. The total budget is
/// conserved exactly in cents.
pub fn rebalance(
    plan: &SplitPlan,
    ledger: &[EngagementRecord],
    ratio: DesiredRatio,
) -> Result<SplitPlan> {
    if plan.variant == SplitVariant::AllUsers {
        return Err(Error::InvalidArgument(
            "an all-users plan has no per-side budgets to rebalance".into(),
        ));
    }
    let cpms = side_cpms_from_ledger(plan, ledger)?;
    let sides = allocate_budgets(plan.total_budget(), ratio, Some(cpms))?;
    reallocate(plan, sides)
}

/// Applies new side totals to a split plan's campaigns (the unknown-aware
/// variant re-halves each side toward its single-gender campaign). Useful
/// when side budgets come from an external allocation, e.g. observed CPMs
/// without a ledger.
pub fn reallocate(plan: &SplitPlan, sides: SideBudgets) -> Result<SplitPlan> {
    let mut updated = plan.clone();
    match plan.variant {
        SplitVariant::AllUsers => {
            return Err(Error::InvalidArgument(
                "an all-users plan has no per-side budgets to reallocate".into(),
            ))
        }
        SplitVariant::DirectSplit => {
            for campaign in &mut updated.campaigns {
                let side = campaign.targeting.side().ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "campaign {} in a direct split has no gendered side",
                        campaign.campaign_id
                    ))
                })?;
                campaign.daily_budget = sides.get(side);
            }
        }
        SplitVariant::UnknownAwareSplit => {
            let (male_single, male_with_unknown) = halve_toward_single_gender(sides.male);
            let (female_single, female_with_unknown) = halve_toward_single_gender(sides.female);
            for campaign in &mut updated.campaigns {
                campaign.daily_budget = match campaign.targeting {
                    Targeting::Male => male_single,
                    Targeting::MaleUnknown => male_with_unknown,
                    Targeting::Female => female_single,
                    Targeting::FemaleUnknown => female_with_unknown,
                    Targeting::All => {
                        return Err(Error::InvalidArgument(format!(
                            "campaign {} in an unknown-aware split targets all users",
                            campaign.campaign_id
                        )))
                    }
                };
            }
        }
    }
    updated.budgets = updated
        .campaigns
        .iter()
        .map(|c| (c.campaign_id.clone(), c.daily_budget))
        .collect();
    Ok(updated)
}
