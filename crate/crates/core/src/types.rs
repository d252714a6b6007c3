use crate::error::Error;
use crate::money::Money;
use crate::schedule::{Cycle, CycleSchedule};
use chrono::NaiveDate;
use serde::Serialize;
use std::fmt;
use std::str::FromStr;

/// Platform-inferred gender label attached to delivered engagement.
///
/// `Unknown` is a first-class label — users the platform could not (or chose
/// not to) classify — never an absent value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupLabel {
    Male,
    Female,
    Unknown,
}

impl GroupLabel {
    pub const ALL: [GroupLabel; 3] = [GroupLabel::Male, GroupLabel::Female, GroupLabel::Unknown];

    pub const fn as_str(self) -> &'static str {
        match self {
            GroupLabel::Male => "male",
            GroupLabel::Female => "female",
            GroupLabel::Unknown => "unknown",
        }
    }

    /// The opposite binary label; `Unknown` has none.
    pub const fn opposite(self) -> Option<GroupLabel> {
        match self {
            GroupLabel::Male => Some(GroupLabel::Female),
            GroupLabel::Female => Some(GroupLabel::Male),
            GroupLabel::Unknown => None,
        }
    }
}

impl fmt::Display for GroupLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GroupLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "male" => Ok(GroupLabel::Male),
            "female" => Ok(GroupLabel::Female),
            "unknown" => Ok(GroupLabel::Unknown),
            other => Err(Error::InvalidArgument(format!(
                "unrecognized label {other:?} (expected male, female, or unknown)"
            ))),
        }
    }
}

/// Ground-truth gender of a simulated user. Only the delivery simulator sees
/// it; audit outputs carry [`GroupLabel`] exclusively.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LatentGender {
    Male,
    Female,
    Other,
}

/// Which gendered side of a budget split a campaign belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Male,
    Female,
}

impl Side {
    pub const fn as_str(self) -> &'static str {
        match self {
            Side::Male => "male_side",
            Side::Female => "female_side",
        }
    }
}

/// A campaign's audience restriction, limited to the combinations an ad
/// platform actually offers: unknown-labeled users can only be reached
/// together with a binary label (via exclusion), never targeted standalone.
///
/// The non-empty and no-standalone-unknown invariants hold by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Targeting {
    /// Male + female + unknown (no restriction).
    All,
    /// Male-labeled users only.
    Male,
    /// Female-labeled users only.
    Female,
    /// Male-labeled + unknown-labeled users (female excluded).
    MaleUnknown,
    /// Female-labeled + unknown-labeled users (male excluded).
    FemaleUnknown,
}

impl Targeting {
    pub fn contains(self, label: GroupLabel) -> bool {
        match self {
            Targeting::All => true,
            Targeting::Male => label == GroupLabel::Male,
            Targeting::Female => label == GroupLabel::Female,
            Targeting::MaleUnknown => label != GroupLabel::Female,
            Targeting::FemaleUnknown => label != GroupLabel::Male,
        }
    }

    /// True for the single-binary-label audiences (`male`, `female`).
    pub fn is_single_gender(self) -> bool {
        matches!(self, Targeting::Male | Targeting::Female)
    }

    /// True for the gender-plus-unknown audiences.
    pub fn includes_unknown(self) -> bool {
        matches!(
            self,
            Targeting::All | Targeting::MaleUnknown | Targeting::FemaleUnknown
        )
    }

    /// The gendered side this audience contributes budget to, if any.
    pub fn side(self) -> Option<Side> {
        match self {
            Targeting::Male | Targeting::MaleUnknown => Some(Side::Male),
            Targeting::Female | Targeting::FemaleUnknown => Some(Side::Female),
            Targeting::All => None,
        }
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            Targeting::All => "all",
            Targeting::Male => "male",
            Targeting::Female => "female",
            Targeting::MaleUnknown => "male_unknown",
            Targeting::FemaleUnknown => "female_unknown",
        }
    }
}

impl fmt::Display for Targeting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Targeting {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "all" => Ok(Targeting::All),
            "male" => Ok(Targeting::Male),
            "female" => Ok(Targeting::Female),
            "male_unknown" => Ok(Targeting::MaleUnknown),
            "female_unknown" => Ok(Targeting::FemaleUnknown),
            other => Err(Error::InvalidArgument(format!(
                "unrecognized targeting {other:?} (expected all, male, female, male_unknown, or female_unknown)"
            ))),
        }
    }
}

/// Automated bidding strategy. The per-conversion cap is part of the
/// `MaxConversions` variant, so "target CPA present iff the strategy is
/// maximize-conversions" holds by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum BiddingStrategy {
    MaxClicks,
    MaxConversions { target_cpa: Money },
}

impl BiddingStrategy {
    pub fn target_cpa(self) -> Option<Money> {
        match self {
            BiddingStrategy::MaxClicks => None,
            BiddingStrategy::MaxConversions { target_cpa } => Some(target_cpa),
        }
    }
}

/// When a campaign is eligible to serve: continuously, or only during its
/// cycle of an alternating schedule.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    AlwaysOn,
    InCycle {
        cycle: Cycle,
        schedule: CycleSchedule,
    },
}

impl Activation {
    /// Whether the campaign serves during `slot` (see
    /// [`CycleSchedule::cycle_for_slot`] for slot numbering).
    pub fn active_in_slot(&self, slot: u32) -> bool {
        match self {
            Activation::AlwaysOn => true,
            Activation::InCycle { cycle, schedule } => schedule.cycle_for_slot(slot) == *cycle,
        }
    }

    pub fn slots_per_day(&self) -> u32 {
        match self {
            Activation::AlwaysOn => 1,
            Activation::InCycle { schedule, .. } => schedule.slots_per_day(),
        }
    }
}

/// One configured campaign: the unit the budget-split intervention rewrites.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignConfig {
    pub campaign_id: String,
    /// Free-text description (creatives reference); carried through splits.
    pub label: String,
    pub targeting: Targeting,
    #[serde(flatten)]
    pub bidding: BiddingStrategy,
    pub daily_budget: Money,
    pub activation: Activation,
}

impl CampaignConfig {
    /// A continuously-active campaign with the given audience.
    pub fn always_on(
        campaign_id: impl Into<String>,
        label: impl Into<String>,
        targeting: Targeting,
        bidding: BiddingStrategy,
        daily_budget: Money,
    ) -> Self {
        CampaignConfig {
            campaign_id: campaign_id.into(),
            label: label.into(),
            targeting,
            bidding,
            daily_budget,
            activation: Activation::AlwaysOn,
        }
    }
}

/// One ledger row: aggregated engagement for a (campaign, date, label) cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EngagementRecord {
    pub campaign_id: String,
    pub date: NaiveDate,
    pub label: GroupLabel,
    pub impressions: u64,
    pub clicks: u64,
    pub conversions: u64,
    pub spend: Money,
}

/// A violation of the ledger-row invariants. Violations are data quality
/// findings, not failures: audits keep the row and report the finding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordViolation {
    /// Funnel order broken: more clicks than impressions.
    ClicksExceedImpressions,
    /// Funnel order broken: more conversions than clicks. Conversions are
    /// click-attributed (a conversion is a post-click action), so attribution
    /// lag in an export surfaces here rather than failing ingest.
    ConversionsExceedClicks,
    /// Positive spend with zero clicks, impossible under per-click billing.
    SpendWithoutClicks,
    /// Negative spend amount.
    NegativeSpend,
}

impl fmt::Display for RecordViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecordViolation::ClicksExceedImpressions => "clicks exceed impressions",
            RecordViolation::ConversionsExceedClicks => "conversions exceed clicks",
            RecordViolation::SpendWithoutClicks => "positive spend with zero clicks",
            RecordViolation::NegativeSpend => "negative spend",
        })
    }
}

/// Checks every ledger-row invariant and returns all violations found
/// (empty means the record is well formed). Total over all inputs.
pub fn validate_record(record: &EngagementRecord) -> Vec<RecordViolation> {
    let mut violations = Vec::new();
    if record.clicks > record.impressions {
        violations.push(RecordViolation::ClicksExceedImpressions);
    }
    if record.conversions > record.clicks {
        violations.push(RecordViolation::ConversionsExceedClicks);
    }
    if record.spend > Money::ZERO && record.clicks == 0 {
        violations.push(RecordViolation::SpendWithoutClicks);
    }
    if record.spend.is_negative() {
        violations.push(RecordViolation::NegativeSpend);
    }
    violations
}

/// Aggregate engagement rates for a group of records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateMetrics {
    /// Clicks per impression.
    pub ctr: f64,
    /// Conversions per impression.
    pub cvr: f64,
    /// Spend (dollars) per 1,000 impressions.
    pub cpm: f64,
}

/// Which engagement metric a skew share was computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SkewMetric {
    Impressions,
    Clicks,
    Conversions,
    Spend,
}

impl SkewMetric {
    pub const fn as_str(self) -> &'static str {
        match self {
            SkewMetric::Impressions => "impressions",
            SkewMetric::Clicks => "clicks",
            SkewMetric::Conversions => "conversions",
            SkewMetric::Spend => "spend",
        }
    }
}

impl fmt::Display for SkewMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A skew point estimate with its confidence interval: the carrier of every
/// parity verdict. `n_focal`/`n_total` are the focal-group and
/// focal-plus-complement unit counts the interval was computed from (counts
/// for count metrics, cents for spend).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SkewEstimate {
    pub metric: SkewMetric,
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
    pub n_focal: u64,
    pub n_total: u64,
}
