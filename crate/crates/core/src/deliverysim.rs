//! A stylized paid-search delivery simulator. Each day a stream of ad
//! opportunities arrives; the platform attaches a (possibly wrong, possibly
//! unknown) gender label to each, prices it with a label-keyed competition
//! premium, and the advertiser's automated bidding selects which opportunities
//! to serve within a daily budget.
//!
//! The three skew mechanisms modeled: per-label engagement-rate gaps (CTR and
//! CVR), per-label price premiums, and optimizing bid selection that chases
//! the cheapest engagement.

use crate::error::{Error, Result};
use crate::money::Money;
use crate::types::{
    Activation, BiddingStrategy, CampaignConfig, EngagementRecord, GroupLabel, LatentGender,
};
use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// A value per platform label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelMap<T> {
    pub male: T,
    pub female: T,
    pub unknown: T,
}

impl<T: Copy> LabelMap<T> {
    pub fn uniform(value: T) -> Self {
        LabelMap {
            male: value,
            female: value,
            unknown: value,
        }
    }

    pub fn get(&self, label: GroupLabel) -> T {
        match label {
            GroupLabel::Male => self.male,
            GroupLabel::Female => self.female,
            GroupLabel::Unknown => self.unknown,
        }
    }
}

/// A value per ground-truth gender.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatentMap<T> {
    pub male: T,
    pub female: T,
    pub other: T,
}

impl<T: Copy> LatentMap<T> {
    pub fn get(&self, latent: LatentGender) -> T {
        match latent {
            LatentGender::Male => self.male,
            LatentGender::Female => self.female,
            LatentGender::Other => self.other,
        }
    }
}

/// How the platform maps ground truth to labels: each latent group has a
/// chance of receiving no label (Unknown); when a binary-gendered user is
/// labeled, the label is correct with probability `p_correct_given_known`,
/// otherwise flipped. Latent Other users always surface as Unknown.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InferenceModel {
    pub p_unknown: LatentMap<f64>,
    pub p_correct_given_known: f64,
}

/// The market a campaign buys into: arrival volume, population mix, label
/// inference, and per-label prices and engagement rates.
///
/// Prices key off the platform *label*, not the latent gender — competition
/// operates on the segments bidders can actually see, which is what makes
/// unlabeled users cheap to reach.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarketModel {
    pub daily_opportunities: u64,
    pub latent_mix: LatentMap<f64>,
    pub inference: InferenceModel,
    pub cpc_base: Money,
    pub cpc_premium: LabelMap<f64>,
    pub ctr: LabelMap<f64>,
    pub cvr_given_click: LabelMap<f64>,
}

impl MarketModel {
    /// Checks every structural invariant, reporting the first violation.
    pub fn validate(&self) -> Result<()> {
        let mix = [
            ("latent_mix.male", self.latent_mix.male),
            ("latent_mix.female", self.latent_mix.female),
            ("latent_mix.other", self.latent_mix.other),
        ];
        for (name, value) in mix {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must lie in [0, 1], got {value}"
                )));
            }
        }
        let mix_sum = self.latent_mix.male + self.latent_mix.female + self.latent_mix.other;
        if (mix_sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "latent_mix must sum to 1, got {mix_sum}"
            )));
        }
        let probabilities = [
            ("p_unknown.male", self.inference.p_unknown.male),
            ("p_unknown.female", self.inference.p_unknown.female),
            ("p_unknown.other", self.inference.p_unknown.other),
            (
                "p_correct_given_known",
                self.inference.p_correct_given_known,
            ),
            ("ctr.male", self.ctr.male),
            ("ctr.female", self.ctr.female),
            ("ctr.unknown", self.ctr.unknown),
            ("cvr_given_click.male", self.cvr_given_click.male),
            ("cvr_given_click.female", self.cvr_given_click.female),
            ("cvr_given_click.unknown", self.cvr_given_click.unknown),
        ];
        for (name, value) in probabilities {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be a probability in [0, 1], got {value}"
                )));
            }
        }
        if self.inference.p_unknown.other != 1.0 {
            return Err(Error::InvalidArgument(format!(
                "latent other users can only surface as unknown; p_unknown.other must be 1.0, got {}",
                self.inference.p_unknown.other
            )));
        }
        let premiums = [
            ("cpc_premium.male", self.cpc_premium.male),
            ("cpc_premium.female", self.cpc_premium.female),
            ("cpc_premium.unknown", self.cpc_premium.unknown),
        ];
        for (name, value) in premiums {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be a non-negative finite multiplier, got {value}"
                )));
            }
        }
        if self.cpc_base.is_negative() {
            return Err(Error::InvalidArgument(format!(
                "cpc_base must be non-negative, got {}",
                self.cpc_base
            )));
        }
        Ok(())
    }
}

/// One pre-sampled ad opportunity: who the user really is, how the platform
/// labeled them, what a click costs, and whether they would click/convert if
/// shown the ad.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Opportunity {
    pub latent: LatentGender,
    pub label: GroupLabel,
    pub cpc_quote: Money,
    pub will_click: bool,
    pub will_convert: bool,
}

/// Samples one day of opportunities. Exactly five uniform variates are
/// consumed per opportunity regardless of branch outcomes, so the stream
/// position after `k` opportunities is independent of the sampled values.
pub fn generate_day<R: Rng + ?Sized>(market: &MarketModel, rng: &mut R) -> Vec<Opportunity> {
    let mut opportunities = Vec::with_capacity(market.daily_opportunities as usize);
    for _ in 0..market.daily_opportunities {
        let u_latent = rng.random::<f64>();
        let u_unknown = rng.random::<f64>();
        let u_correct = rng.random::<f64>();
        let u_click = rng.random::<f64>();
        let u_convert = rng.random::<f64>();

        let latent = if u_latent < market.latent_mix.male {
            LatentGender::Male
        } else if u_latent < market.latent_mix.male + market.latent_mix.female {
            LatentGender::Female
        } else {
            LatentGender::Other
        };

        let label = match latent {
            LatentGender::Other => GroupLabel::Unknown,
            known => {
                if u_unknown < market.inference.p_unknown.get(known) {
                    GroupLabel::Unknown
                } else {
                    let truthful = match known {
                        LatentGender::Male => GroupLabel::Male,
                        LatentGender::Female => GroupLabel::Female,
                        LatentGender::Other => unreachable!("handled above"),
                    };
                    if u_correct < market.inference.p_correct_given_known {
                        truthful
                    } else {
                        truthful.opposite().expect("binary label")
                    }
                }
            }
        };

        let will_click = u_click < market.ctr.get(label);
        let will_convert = will_click && u_convert < market.cvr_given_click.get(label);
        opportunities.push(Opportunity {
            latent,
            label,
            cpc_quote: market.cpc_base.scale(market.cpc_premium.get(label)),
            will_click,
            will_convert,
        });
    }
    opportunities
}

fn validate_campaigns(campaigns: &[CampaignConfig]) -> Result<()> {
    let mut seen = std::collections::BTreeSet::new();
    for campaign in campaigns {
        if campaign.daily_budget.is_negative() {
            return Err(Error::InvalidArgument(format!(
                "campaign {} has a negative daily budget",
                campaign.campaign_id
            )));
        }
        if let BiddingStrategy::MaxConversions { target_cpa } = campaign.bidding {
            if target_cpa.is_negative() {
                return Err(Error::InvalidArgument(format!(
                    "campaign {} has a negative target CPA",
                    campaign.campaign_id
                )));
            }
        }
        if !seen.insert(&campaign.campaign_id) {
            return Err(Error::InvalidArgument(format!(
                "duplicate campaign id {}",
                campaign.campaign_id
            )));
        }
    }
    Ok(())
}

fn campaign_active(campaign: &CampaignConfig, day_index: u32, half: u32) -> bool {
    match &campaign.activation {
        Activation::AlwaysOn => true,
        Activation::InCycle { cycle, schedule } => {
            schedule.cycle_for_slot(schedule.slot_for_day_part(day_index, half)) == *cycle
        }
    }
}

/// The bid-selection sort key: dollars per expected unit of the strategy's
/// objective (clicks for MaxClicks, conversions for MaxConversions). A zero
/// rate makes the opportunity rank last.
fn rank_key(campaign: &CampaignConfig, market: &MarketModel, op: &Opportunity) -> f64 {
    let rate = match campaign.bidding {
        BiddingStrategy::MaxClicks => market.ctr.get(op.label),
        BiddingStrategy::MaxConversions { .. } => market.cvr_given_click.get(op.label),
    };
    if rate <= 0.0 {
        f64::INFINITY
    } else {
        op.cpc_quote.dollars() / rate
    }
}

#[derive(Default, Clone, Copy)]
struct Tally {
    impressions: u64,
    clicks: u64,
    conversions: u64,
    spend: Money,
}

/// Runs one day of delivery for a set of sibling campaigns over a shared
/// opportunity stream.
///
/// Each opportunity is offered to at most one campaign: the first, in
/// campaign-id order, that targets its label, is active in its slot, and has
/// a positive budget. Each campaign then ranks its offered opportunities per
/// its bidding strategy and accepts greedily while spend remains below the
/// daily budget — so spend may overshoot the budget by at most one click's
/// cost. Spend accrues per click at the quoted CPC.
///
/// Returns one record per (campaign, label) with nonzero impressions,
/// ordered by campaign id then label.
pub fn run_day<R: Rng + ?Sized>(
    campaigns: &[CampaignConfig],
    market: &MarketModel,
    date: NaiveDate,
    day_index: u32,
    rng: &mut R,
) -> Result<Vec<EngagementRecord>> {
    market.validate()?;
    validate_campaigns(campaigns)?;
    let opportunities = generate_day(market, rng);
    Ok(deliver_day(
        campaigns,
        market,
        &opportunities,
        date,
        day_index,
    ))
}

/// Delivery stage of [`run_day`], exposed for tests that construct the
/// opportunity stream by hand. Preconditions: market and campaigns valid.
pub fn deliver_day(
    campaigns: &[CampaignConfig],
    market: &MarketModel,
    opportunities: &[Opportunity],
    date: NaiveDate,
    day_index: u32,
) -> Vec<EngagementRecord> {
    let mut order: Vec<&CampaignConfig> = campaigns.iter().collect();
    order.sort_by(|a, b| a.campaign_id.cmp(&b.campaign_id));

    // Offer each opportunity to the first eligible campaign in id order.
    let mut offered: Vec<Vec<usize>> = vec![Vec::new(); order.len()];
    let n = opportunities.len();
    for (j, op) in opportunities.iter().enumerate() {
        let half = if 2 * j < n { 0 } else { 1 };
        for (ci, campaign) in order.iter().enumerate() {
            if campaign.daily_budget > Money::ZERO
                && campaign.targeting.contains(op.label)
                && campaign_active(campaign, day_index, half)
            {
                offered[ci].push(j);
                break;
            }
        }
    }

    let mut records = Vec::new();
    for (ci, campaign) in order.iter().enumerate() {
        let mut ranked = offered[ci].clone();
        // Stable sort: equal keys keep arrival order.
        ranked.sort_by(|&a, &b| {
            rank_key(campaign, market, &opportunities[a]).total_cmp(&rank_key(
                campaign,
                market,
                &opportunities[b],
            ))
        });

        let mut tallies: BTreeMap<GroupLabel, Tally> = BTreeMap::new();
        let mut spend_total = Money::ZERO;
        for j in ranked {
            let op = &opportunities[j];
            if let BiddingStrategy::MaxConversions { target_cpa } = campaign.bidding {
                let cvr = market.cvr_given_click.get(op.label);
                let expected_cost_per_conversion = if cvr <= 0.0 {
                    f64::INFINITY
                } else {
                    op.cpc_quote.dollars() / cvr
                };
                if expected_cost_per_conversion > target_cpa.dollars() {
                    continue;
                }
            }
            if spend_total >= campaign.daily_budget {
                break;
            }
            let tally = tallies.entry(op.label).or_default();
            tally.impressions += 1;
            if op.will_click {
                tally.clicks += 1;
                tally.spend += op.cpc_quote;
                spend_total += op.cpc_quote;
                if op.will_convert {
                    tally.conversions += 1;
                }
            }
        }

        for (label, tally) in tallies {
            if tally.impressions > 0 {
                records.push(EngagementRecord {
                    campaign_id: campaign.campaign_id.clone(),
                    date,
                    label,
                    impressions: tally.impressions,
                    clicks: tally.clicks,
                    conversions: tally.conversions,
                    spend: tally.spend,
                });
            }
        }
    }
    records
}

/// Runs `days` consecutive days. Day `d` consumes an RNG stream derived from
/// `(seed, d)`, so ledgers are reproducible and day-parallelizable.
pub fn run_horizon(
    campaigns: &[CampaignConfig],
    market: &MarketModel,
    days: u32,
    seed: u64,
    start_date: NaiveDate,
) -> Result<Vec<EngagementRecord>> {
    if days == 0 {
        return Err(Error::InvalidArgument(
            "horizon must cover at least one day".into(),
        ));
    }
    market.validate()?;
    validate_campaigns(campaigns)?;
    let mut ledger = Vec::new();
    for day_index in 0..days {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(day_index as u64);
        let date = start_date + Days::new(day_index as u64);
        let opportunities = generate_day(market, &mut rng);
        ledger.extend(deliver_day(
            campaigns,
            market,
            &opportunities,
            date,
            day_index,
        ));
    }
    Ok(ledger)
}
