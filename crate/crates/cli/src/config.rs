//! Scenario configuration: a single TOML file with nested sections and
//! explicit units in key names. Unknown keys are fatal, and validation
//! reports every invalid field with its path and reason before any run.

use std::path::Path;
use std::str::FromStr;

use adparity_core::deliverysim::{InferenceModel, LabelMap, LatentMap, MarketModel};
use adparity_core::intervention::{DesiredRatio, PlatformCaps, SideCpms, SplitVariant};
use adparity_core::metrics::AggregationWindow;
use adparity_core::unknownsim::{ObservedCounts, PriorModel};
use adparity_core::{
    BiddingStrategy, CampaignConfig, CyclePhase, CycleSchedule, GroupLabel, Money, Targeting,
};
use chrono::NaiveDate;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::errors::{CliError, CliResult};

// ---------------------------------------------------------------------------
// Raw file shape (serde)
// ---------------------------------------------------------------------------

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub market: Option<MarketSection>,
    #[serde(default, rename = "campaign")]
    pub campaigns: Vec<CampaignSection>,
    pub intervention: Option<InterventionSection>,
    pub audit: Option<AuditSection>,
    pub montecarlo: Option<MonteCarloSection>,
    pub run: Option<RunSection>,
    pub output: Option<OutputSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketSection {
    pub daily_opportunities: u64,
    pub cpc_base_usd: f64,
    #[serde(default = "one")]
    pub p_correct_given_known: f64,
    pub latent_mix: LatentShares,
    pub unknown_rate: UnknownRates,
    #[serde(default)]
    pub cpc_premium: PremiumTable,
    pub ctr: RateTable,
    #[serde(default)]
    pub cvr_given_click: OptionalRateTable,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatentShares {
    pub male: f64,
    pub female: f64,
    #[serde(default)]
    pub other: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnknownRates {
    pub male: f64,
    pub female: f64,
    /// Users outside the binary have no label to surface; fixed at 1.0.
    #[serde(default = "one")]
    pub other: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PremiumTable {
    #[serde(default = "one")]
    pub male: f64,
    #[serde(default = "one")]
    pub female: f64,
    #[serde(default = "one")]
    pub unknown: f64,
}

impl Default for PremiumTable {
    fn default() -> Self {
        PremiumTable {
            male: 1.0,
            female: 1.0,
            unknown: 1.0,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateTable {
    pub male: f64,
    pub female: f64,
    pub unknown: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionalRateTable {
    #[serde(default)]
    pub male: f64,
    #[serde(default)]
    pub female: f64,
    #[serde(default)]
    pub unknown: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignSection {
    pub id: String,
    /// Creative description carried through splits; defaults to the id.
    pub label: Option<String>,
    pub targeting: String,
    pub strategy: String,
    pub target_cpa_usd: Option<f64>,
    pub daily_budget_usd: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterventionSection {
    #[serde(default = "default_variants")]
    pub variants: Vec<String>,
    #[serde(default = "half")]
    pub desired_female_share: f64,
    #[serde(default = "one_u32")]
    pub cycle_period_days: u32,
    #[serde(default = "default_phase")]
    pub cycle_phase: String,
    #[serde(default = "one_u32")]
    pub slots_per_day: u32,
    #[serde(default = "default_true")]
    pub platform_supports_exclude_targeting: bool,
    pub observed_cpms: Option<ObservedCpmsSection>,
}

impl Default for InterventionSection {
    fn default() -> Self {
        InterventionSection {
            variants: default_variants(),
            desired_female_share: half(),
            cycle_period_days: one_u32(),
            cycle_phase: default_phase(),
            slots_per_day: one_u32(),
            platform_supports_exclude_targeting: true,
            observed_cpms: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservedCpmsSection {
    pub male_usd: f64,
    pub female_usd: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSection {
    pub level: Option<f64>,
    pub window: Option<String>,
    pub focal: Option<String>,
    pub baseline_skew: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSection {
    #[serde(default = "default_draws")]
    pub draws: u64,
    #[serde(default = "default_mc_seed")]
    pub seed: u64,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_priors")]
    pub priors: Vec<String>,
    pub sigma_p: Option<f64>,
    pub similarweb_male_share: Option<f64>,
    pub observed: Option<ObservedSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservedSection {
    pub male: u64,
    pub female: u64,
    pub unknown: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub horizon_days: u32,
    #[serde(default)]
    pub warm_up_days: u32,
    #[serde(default = "default_start_date")]
    pub start_date: String,
    #[serde(default = "default_run_seed")]
    pub seed: u64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub directory: Option<String>,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn one_u32() -> u32 {
    1
}
fn default_true() -> bool {
    true
}
fn default_variants() -> Vec<String> {
    vec!["direct_split".into(), "unknown_aware_split".into()]
}
fn default_phase() -> String {
    "a_first".into()
}
fn default_draws() -> u64 {
    1_000
}
fn default_mc_seed() -> u64 {
    7
}
fn default_bins() -> usize {
    50
}
fn default_priors() -> Vec<String> {
    vec![
        "binomial_symmetric".into(),
        "binomial_informative".into(),
        "normal_informative".into(),
        "binomial_similarweb".into(),
        "symmetric_solve".into(),
        "similarweb_solve".into(),
    ]
}
fn default_start_date() -> String {
    "2024-04-01".into()
}
fn default_run_seed() -> u64 {
    42
}
fn default_formats() -> Vec<String> {
    vec!["csv".into(), "json".into()]
}

/// Reads and parses a config file, returning it with the SHA-256 hex digest
/// of the raw bytes (embedded in every report for provenance).
pub fn load_config(path: &Path) -> CliResult<(ScenarioConfig, String)> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io_at(path, e))?;
    let digest = hex_digest(&bytes);
    let text = String::from_utf8(bytes)
        .map_err(|e| CliError::Validation(format!("{}: not valid UTF-8: {e}", path.display())))?;
    let config: ScenarioConfig = toml::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    Ok((config, digest))
}

pub fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

// ---------------------------------------------------------------------------
// Validation: collect every problem, each with a field path and a reason.
// ---------------------------------------------------------------------------

#[derive(Debug, Default)]
pub struct Issues(Vec<String>);

impl Issues {
    pub fn push(&mut self, path: &str, reason: impl std::fmt::Display) {
        self.0.push(format!("{path}: {reason}"));
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The itemized list as one validation error.
    pub fn into_error(self) -> CliError {
        CliError::Validation(format!(
            "invalid configuration:\n  - {}",
            self.0.join("\n  - ")
        ))
    }

    /// Returns `value` if no issue was recorded, otherwise the itemized list.
    pub fn into_result<T>(self, value: T) -> CliResult<T> {
        if self.0.is_empty() {
            Ok(value)
        } else {
            Err(self.into_error())
        }
    }
}

fn check_probability(issues: &mut Issues, path: &str, value: f64) {
    if !(value.is_finite() && (0.0..=1.0).contains(&value)) {
        issues.push(
            path,
            format!("must be a probability in [0, 1], got {value}"),
        );
    }
}

/// Parses a dollar amount that must be non-negative with at most two
/// decimal places (cents are the ledger unit).
fn check_usd(issues: &mut Issues, path: &str, value: f64) -> Money {
    if !value.is_finite() || value < 0.0 {
        issues.push(path, format!("must be a non-negative amount, got {value}"));
        return Money::ZERO;
    }
    let cents = value * 100.0;
    if (cents - cents.round()).abs() > 1e-6 {
        issues.push(
            path,
            format!("must have at most two decimal places, got {value}"),
        );
    }
    Money::from_dollars(value)
}

pub fn validated_market(issues: &mut Issues, section: &MarketSection) -> MarketModel {
    if section.daily_opportunities == 0 {
        issues.push("market.daily_opportunities", "must be at least 1");
    }
    let cpc_base = check_usd(issues, "market.cpc_base_usd", section.cpc_base_usd);
    check_probability(
        issues,
        "market.p_correct_given_known",
        section.p_correct_given_known,
    );
    for (path, value) in [
        ("market.latent_mix.male", section.latent_mix.male),
        ("market.latent_mix.female", section.latent_mix.female),
        ("market.latent_mix.other", section.latent_mix.other),
        ("market.unknown_rate.male", section.unknown_rate.male),
        ("market.unknown_rate.female", section.unknown_rate.female),
        ("market.unknown_rate.other", section.unknown_rate.other),
        ("market.ctr.male", section.ctr.male),
        ("market.ctr.female", section.ctr.female),
        ("market.ctr.unknown", section.ctr.unknown),
        ("market.cvr_given_click.male", section.cvr_given_click.male),
        (
            "market.cvr_given_click.female",
            section.cvr_given_click.female,
        ),
        (
            "market.cvr_given_click.unknown",
            section.cvr_given_click.unknown,
        ),
    ] {
        check_probability(issues, path, value);
    }
    let mix_sum = section.latent_mix.male + section.latent_mix.female + section.latent_mix.other;
    if (mix_sum - 1.0).abs() > 1e-9 {
        issues.push(
            "market.latent_mix",
            format!("shares must sum to 1, got {mix_sum}"),
        );
    }
    if section.unknown_rate.other != 1.0 {
        issues.push(
            "market.unknown_rate.other",
            "users outside the binary always surface unlabeled; must be 1.0",
        );
    }
    for (path, value) in [
        ("market.cpc_premium.male", section.cpc_premium.male),
        ("market.cpc_premium.female", section.cpc_premium.female),
        ("market.cpc_premium.unknown", section.cpc_premium.unknown),
    ] {
        if !(value.is_finite() && value >= 0.0) {
            issues.push(
                path,
                format!("must be a non-negative multiplier, got {value}"),
            );
        }
    }
    MarketModel {
        daily_opportunities: section.daily_opportunities,
        latent_mix: LatentMap {
            male: section.latent_mix.male,
            female: section.latent_mix.female,
            other: section.latent_mix.other,
        },
        inference: InferenceModel {
            p_unknown: LatentMap {
                male: section.unknown_rate.male,
                female: section.unknown_rate.female,
                other: section.unknown_rate.other,
            },
            p_correct_given_known: section.p_correct_given_known,
        },
        cpc_base,
        cpc_premium: LabelMap {
            male: section.cpc_premium.male,
            female: section.cpc_premium.female,
            unknown: section.cpc_premium.unknown,
        },
        ctr: LabelMap {
            male: section.ctr.male,
            female: section.ctr.female,
            unknown: section.ctr.unknown,
        },
        cvr_given_click: LabelMap {
            male: section.cvr_given_click.male,
            female: section.cvr_given_click.female,
            unknown: section.cvr_given_click.unknown,
        },
    }
}

pub fn validated_campaign(
    issues: &mut Issues,
    index: usize,
    section: &CampaignSection,
) -> CampaignConfig {
    let path = |field: &str| format!("campaign[{index}].{field}");
    if section.id.is_empty() {
        issues.push(&path("id"), "must not be empty");
    }
    let targeting = match Targeting::from_str(&section.targeting) {
        Ok(t) => t,
        Err(e) => {
            issues.push(&path("targeting"), e);
            Targeting::All
        }
    };
    let bidding = match section.strategy.as_str() {
        "max_clicks" => {
            if section.target_cpa_usd.is_some() {
                issues.push(
                    &path("target_cpa_usd"),
                    "only valid with strategy = \"max_conversions\"",
                );
            }
            BiddingStrategy::MaxClicks
        }
        "max_conversions" => match section.target_cpa_usd {
            Some(value) => BiddingStrategy::MaxConversions {
                target_cpa: check_usd(issues, &path("target_cpa_usd"), value),
            },
            None => {
                issues.push(
                    &path("target_cpa_usd"),
                    "required with strategy = \"max_conversions\"",
                );
                BiddingStrategy::MaxClicks
            }
        },
        other => {
            issues.push(
                &path("strategy"),
                format!("must be \"max_clicks\" or \"max_conversions\", got \"{other}\""),
            );
            BiddingStrategy::MaxClicks
        }
    };
    let daily_budget = check_usd(issues, &path("daily_budget_usd"), section.daily_budget_usd);
    CampaignConfig::always_on(
        section.id.clone(),
        section.label.clone().unwrap_or_else(|| section.id.clone()),
        targeting,
        bidding,
        daily_budget,
    )
}

/// Cycle parameters in days; conversion to slots happens against a horizon.
#[derive(Debug, Clone, Copy)]
pub struct CycleParams {
    pub period_days: u32,
    pub phase: CyclePhase,
    pub slots_per_day: u32,
}

impl CycleParams {
    pub fn schedule_for(&self, horizon_days: u32) -> CliResult<CycleSchedule> {
        Ok(CycleSchedule::new(
            self.period_days * self.slots_per_day,
            horizon_days * self.slots_per_day,
            self.phase,
            self.slots_per_day,
        )?)
    }
}

#[derive(Debug, Clone)]
pub struct InterventionParams {
    /// Deduplicated, in listed order, never containing `AllUsers`.
    pub split_variants: Vec<SplitVariant>,
    pub ratio: DesiredRatio,
    pub caps: PlatformCaps,
    pub cycle: CycleParams,
    pub observed_cpms: Option<SideCpms>,
}

pub fn parse_variant(name: &str) -> Result<SplitVariant, String> {
    match name {
        "all_users" => Ok(SplitVariant::AllUsers),
        "direct_split" => Ok(SplitVariant::DirectSplit),
        "unknown_aware_split" => Ok(SplitVariant::UnknownAwareSplit),
        other => Err(format!(
            "must be one of all_users, direct_split, unknown_aware_split; got \"{other}\""
        )),
    }
}

pub fn validated_intervention(
    issues: &mut Issues,
    section: &InterventionSection,
) -> InterventionParams {
    let mut split_variants = Vec::new();
    for (i, name) in section.variants.iter().enumerate() {
        match parse_variant(name) {
            Ok(SplitVariant::AllUsers) => {} // the baseline always runs anyway
            Ok(v) if split_variants.contains(&v) => {
                issues.push(&format!("intervention.variants[{i}]"), "duplicate variant");
            }
            Ok(v) => split_variants.push(v),
            Err(e) => issues.push(&format!("intervention.variants[{i}]"), e),
        }
    }
    check_probability(
        issues,
        "intervention.desired_female_share",
        section.desired_female_share,
    );
    let ratio = DesiredRatio::new(1.0 - section.desired_female_share.clamp(0.0, 1.0))
        .expect("clamped share is always valid");
    if section.cycle_period_days == 0 {
        issues.push("intervention.cycle_period_days", "must be at least 1");
    }
    let phase = match section.cycle_phase.as_str() {
        "a_first" => CyclePhase::AFirst,
        "b_first" => CyclePhase::BFirst,
        other => {
            issues.push(
                "intervention.cycle_phase",
                format!("must be \"a_first\" or \"b_first\", got \"{other}\""),
            );
            CyclePhase::AFirst
        }
    };
    if !(section.slots_per_day == 1 || section.slots_per_day == 2) {
        issues.push(
            "intervention.slots_per_day",
            format!("must be 1 or 2, got {}", section.slots_per_day),
        );
    }
    let observed_cpms = section.observed_cpms.as_ref().map(|cpms| {
        for (path, value) in [
            ("intervention.observed_cpms.male_usd", cpms.male_usd),
            ("intervention.observed_cpms.female_usd", cpms.female_usd),
        ] {
            if !(value.is_finite() && value > 0.0) {
                issues.push(path, format!("must be a positive amount, got {value}"));
            }
        }
        SideCpms {
            male: cpms.male_usd,
            female: cpms.female_usd,
        }
    });
    InterventionParams {
        split_variants,
        ratio,
        caps: PlatformCaps {
            exclude_targeting: section.platform_supports_exclude_targeting,
        },
        cycle: CycleParams {
            period_days: section.cycle_period_days.max(1),
            phase,
            slots_per_day: section.slots_per_day.clamp(1, 2),
        },
        observed_cpms,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RunParams {
    pub horizon_days: u32,
    pub warm_up_days: u32,
    pub start_date: NaiveDate,
    pub seed: u64,
}

pub fn validated_run(issues: &mut Issues, section: &RunSection) -> RunParams {
    if section.horizon_days == 0 {
        issues.push("run.horizon_days", "must cover at least one day");
    }
    let start_date = match NaiveDate::parse_from_str(&section.start_date, "%Y-%m-%d") {
        Ok(date) => date,
        Err(e) => {
            issues.push(
                "run.start_date",
                format!("must be an ISO date (YYYY-MM-DD): {e}"),
            );
            NaiveDate::from_ymd_opt(2024, 4, 1).unwrap()
        }
    };
    RunParams {
        horizon_days: section.horizon_days,
        warm_up_days: section.warm_up_days,
        start_date,
        seed: section.seed,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AuditParams {
    pub level: f64,
    pub window: AggregationWindow,
    pub focal: GroupLabel,
    pub baseline_skew: Option<f64>,
}

impl Default for AuditParams {
    fn default() -> Self {
        AuditParams {
            level: 0.99,
            window: AggregationWindow::Weekly,
            focal: GroupLabel::Male,
            baseline_skew: None,
        }
    }
}

pub fn parse_window(name: &str) -> Result<AggregationWindow, String> {
    match name {
        "daily" => Ok(AggregationWindow::Daily),
        "weekly" => Ok(AggregationWindow::Weekly),
        "whole" => Ok(AggregationWindow::Whole),
        other => Err(format!(
            "must be one of daily, weekly, whole; got \"{other}\""
        )),
    }
}

pub fn validated_audit(issues: &mut Issues, section: &AuditSection) -> AuditParams {
    let defaults = AuditParams::default();
    let level = section.level.unwrap_or(defaults.level);
    if !(level > 0.0 && level < 1.0) {
        issues.push(
            "audit.level",
            format!("must lie strictly inside (0, 1), got {level}"),
        );
    }
    let window = match section.window.as_deref() {
        None => defaults.window,
        Some(name) => parse_window(name).unwrap_or_else(|e| {
            issues.push("audit.window", e);
            defaults.window
        }),
    };
    let focal = match section.focal.as_deref() {
        None => defaults.focal,
        Some("male") => GroupLabel::Male,
        Some("female") => GroupLabel::Female,
        Some(other) => {
            issues.push(
                "audit.focal",
                format!("must be \"male\" or \"female\", got \"{other}\""),
            );
            defaults.focal
        }
    };
    if let Some(baseline) = section.baseline_skew {
        check_probability(issues, "audit.baseline_skew", baseline);
    }
    AuditParams {
        level,
        window,
        focal,
        baseline_skew: section.baseline_skew,
    }
}

#[derive(Debug, Clone)]
pub struct MonteCarloParams {
    pub draws: u64,
    pub seed: u64,
    pub bins: usize,
    pub priors: Vec<PriorModel>,
    pub observed: Option<ObservedCounts>,
}

pub fn validated_montecarlo(issues: &mut Issues, section: &MonteCarloSection) -> MonteCarloParams {
    if section.draws == 0 {
        issues.push("montecarlo.draws", "must be at least 1");
    }
    if section.bins == 0 {
        issues.push("montecarlo.bins", "must be at least 1");
    }
    if let Some(sigma) = section.sigma_p {
        if !(sigma.is_finite() && sigma >= 0.0) {
            issues.push(
                "montecarlo.sigma_p",
                format!("must be non-negative, got {sigma}"),
            );
        }
    }
    if let Some(share) = section.similarweb_male_share {
        check_probability(issues, "montecarlo.similarweb_male_share", share);
    }
    let mut priors = Vec::new();
    let mut seen = Vec::new();
    for (i, name) in section.priors.iter().enumerate() {
        let path = format!("montecarlo.priors[{i}]");
        if seen.contains(name) {
            issues.push(&path, format!("duplicate prior \"{name}\""));
            continue;
        }
        seen.push(name.clone());
        let prior = match name.as_str() {
            "binomial_symmetric" => PriorModel::BinomialSymmetric,
            "binomial_informative" => PriorModel::BinomialInformative,
            "normal_informative" => PriorModel::NormalInformative {
                sigma_p: section.sigma_p,
            },
            "binomial_similarweb" => PriorModel::BinomialSimilarWeb {
                p_fixed: section.similarweb_male_share,
            },
            "symmetric_solve" => PriorModel::SymmetricSolve,
            "similarweb_solve" => PriorModel::SimilarWebSolve {
                p_fixed: section.similarweb_male_share,
            },
            other => {
                issues.push(
                    &path,
                    format!(
                        "unknown prior \"{other}\"; valid: binomial_symmetric, \
                         binomial_informative, normal_informative, binomial_similarweb, \
                         symmetric_solve, similarweb_solve"
                    ),
                );
                continue;
            }
        };
        priors.push(prior);
    }
    if priors.is_empty() && issues.is_empty() {
        issues.push("montecarlo.priors", "must list at least one prior");
    }
    let observed = section.observed.as_ref().map(|counts| {
        if counts.male + counts.female + counts.unknown == 0 {
            issues.push("montecarlo.observed", "counts must not all be zero");
        }
        ObservedCounts::new(counts.male, counts.female, counts.unknown)
    });
    MonteCarloParams {
        draws: section.draws,
        seed: section.seed,
        bins: section.bins,
        priors,
        observed,
    }
}

pub fn validated_output(issues: &mut Issues, section: &OutputSection) -> Option<String> {
    for (i, format) in section.formats.iter().enumerate() {
        if format != "csv" && format != "json" {
            issues.push(
                &format!("output.formats[{i}]"),
                format!("must be \"csv\" or \"json\", got \"{format}\""),
            );
        }
    }
    section.directory.clone()
}

// ---------------------------------------------------------------------------
// Per-command input assembly
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct SimulateInputs {
    pub market: MarketModel,
    pub original: CampaignConfig,
    pub intervention: InterventionParams,
    pub run: RunParams,
    pub audit: AuditParams,
    pub output_dir: Option<String>,
}

pub fn simulate_inputs(config: &ScenarioConfig) -> CliResult<SimulateInputs> {
    let mut issues = Issues::default();
    let market = match &config.market {
        Some(section) => Some(validated_market(&mut issues, section)),
        None => {
            issues.push("market", "section required by `simulate`");
            None
        }
    };
    let original = match config.campaigns.len() {
        1 => {
            let campaign = validated_campaign(&mut issues, 0, &config.campaigns[0]);
            if campaign.targeting != Targeting::All {
                issues.push(
                    "campaign[0].targeting",
                    "the original campaign must target \"all\" (splits derive from it)",
                );
            }
            Some(campaign)
        }
        0 => {
            issues.push(
                "campaign",
                "exactly one [[campaign]] (the original) is required",
            );
            None
        }
        n => {
            issues.push(
                "campaign",
                format!("exactly one [[campaign]] (the original) is required, found {n}"),
            );
            None
        }
    };
    let intervention = validated_intervention(
        &mut issues,
        &config.intervention.clone().unwrap_or_default(),
    );
    let run = match &config.run {
        Some(section) => Some(validated_run(&mut issues, section)),
        None => {
            issues.push("run", "section required by `simulate` (horizon_days)");
            None
        }
    };
    let audit = validated_audit(&mut issues, &config.audit.clone().unwrap_or_default());
    let output_dir = config
        .output
        .as_ref()
        .and_then(|section| validated_output(&mut issues, section));
    if !issues.is_empty() {
        return Err(issues.into_error());
    }
    Ok(SimulateInputs {
        market: market.expect("validated"),
        original: original.expect("validated"),
        intervention,
        run: run.expect("validated"),
        audit,
        output_dir,
    })
}

#[derive(Debug)]
pub struct PlanInputs {
    pub original: CampaignConfig,
    pub intervention: InterventionParams,
    pub horizon_days: Option<u32>,
    pub output_dir: Option<String>,
}

pub fn plan_inputs(config: &ScenarioConfig) -> CliResult<PlanInputs> {
    let mut issues = Issues::default();
    let original = match config.campaigns.len() {
        1 => Some(validated_campaign(&mut issues, 0, &config.campaigns[0])),
        0 => {
            issues.push(
                "campaign",
                "exactly one [[campaign]] (the original) is required",
            );
            None
        }
        n => {
            issues.push(
                "campaign",
                format!("exactly one [[campaign]] (the original) is required, found {n}"),
            );
            None
        }
    };
    let intervention = validated_intervention(
        &mut issues,
        &config.intervention.clone().unwrap_or_default(),
    );
    let horizon_days = match &config.run {
        Some(section) => Some(validated_run(&mut issues, section).horizon_days),
        None => None,
    };
    let output_dir = config
        .output
        .as_ref()
        .and_then(|section| validated_output(&mut issues, section));
    if !issues.is_empty() {
        return Err(issues.into_error());
    }
    Ok(PlanInputs {
        original: original.expect("validated"),
        intervention,
        horizon_days,
        output_dir,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL_SIMULATE: &str = r#"
        [market]
        daily_opportunities = 100
        cpc_base_usd = 0.50
        [market.latent_mix]
        male = 0.5
        female = 0.5
        [market.unknown_rate]
        male = 0.15
        female = 0.25
        [market.ctr]
        male = 0.05
        female = 0.04
        unknown = 0.042

        [[campaign]]
        id = "c1"
        targeting = "all"
        strategy = "max_clicks"
        daily_budget_usd = 65.00

        [run]
        horizon_days = 7
    "#;

    #[test]
    fn minimal_simulate_config_validates() {
        let config: ScenarioConfig = toml::from_str(MINIMAL_SIMULATE).unwrap();
        let inputs = simulate_inputs(&config).unwrap();
        assert_eq!(inputs.market.daily_opportunities, 100);
        assert_eq!(inputs.original.daily_budget, Money::from_cents(6_500));
        assert_eq!(inputs.run.horizon_days, 7);
        assert_eq!(inputs.run.seed, 42);
        assert_eq!(
            inputs.intervention.split_variants,
            vec![SplitVariant::DirectSplit, SplitVariant::UnknownAwareSplit]
        );
        assert_eq!(inputs.audit.level, 0.99);
        // Defaulted premium is cost-neutral.
        assert_eq!(inputs.market.cpc_premium.male, 1.0);
        assert_eq!(inputs.market.cvr_given_click.female, 0.0);
    }

    #[test]
    fn unknown_keys_are_fatal() {
        let bad = MINIMAL_SIMULATE.replace("daily_opportunities", "daily_oportunities");
        let err = toml::from_str::<ScenarioConfig>(&bad).unwrap_err();
        assert!(err.to_string().contains("daily_oportunities"), "{err}");
    }

    #[test]
    fn zero_day_horizon_is_rejected() {
        let bad = MINIMAL_SIMULATE.replace("horizon_days = 7", "horizon_days = 0");
        let config: ScenarioConfig = toml::from_str(&bad).unwrap();
        let err = simulate_inputs(&config).unwrap_err();
        assert!(err.to_string().contains("run.horizon_days"), "{err}");
    }

    #[test]
    fn validation_collects_every_issue_with_paths() {
        let bad = MINIMAL_SIMULATE
            .replace("cpc_base_usd = 0.50", "cpc_base_usd = 0.505")
            .replace("male = 0.05", "male = 1.5")
            .replace("horizon_days = 7", "horizon_days = 0");
        let config: ScenarioConfig = toml::from_str(&bad).unwrap();
        let message = simulate_inputs(&config).unwrap_err().to_string();
        for needle in ["market.cpc_base_usd", "market.ctr.male", "run.horizon_days"] {
            assert!(message.contains(needle), "missing {needle} in {message}");
        }
    }

    #[test]
    fn non_all_original_campaign_is_rejected_for_simulate() {
        let bad = MINIMAL_SIMULATE.replace("targeting = \"all\"", "targeting = \"male\"");
        let config: ScenarioConfig = toml::from_str(&bad).unwrap();
        let err = simulate_inputs(&config).unwrap_err();
        assert!(err.to_string().contains("campaign[0].targeting"), "{err}");
    }

    #[test]
    fn max_conversions_requires_target_cpa() {
        let bad = MINIMAL_SIMULATE.replace(
            "strategy = \"max_clicks\"",
            "strategy = \"max_conversions\"",
        );
        let config: ScenarioConfig = toml::from_str(&bad).unwrap();
        let err = simulate_inputs(&config).unwrap_err();
        assert!(err.to_string().contains("target_cpa_usd"), "{err}");
    }

    #[test]
    fn montecarlo_defaults_fill_in() {
        let config: ScenarioConfig = toml::from_str(
            r#"
            [montecarlo]
            [montecarlo.observed]
            male = 10
            female = 10
            unknown = 5
            "#,
        )
        .unwrap();
        let mut issues = Issues::default();
        let params = validated_montecarlo(&mut issues, config.montecarlo.as_ref().unwrap());
        assert!(issues.is_empty());
        assert_eq!(params.draws, 1_000);
        assert_eq!(params.seed, 7);
        assert_eq!(params.bins, 50);
        assert_eq!(params.priors.len(), 6);
        assert_eq!(params.observed.unwrap().n_unknown, 5);
    }

    #[test]
    fn unknown_prior_slug_is_an_issue() {
        let config: ScenarioConfig = toml::from_str(
            r#"
            [montecarlo]
            priors = ["binomial_symmetric", "beta_binomial"]
            "#,
        )
        .unwrap();
        let mut issues = Issues::default();
        validated_montecarlo(&mut issues, config.montecarlo.as_ref().unwrap());
        let err = issues.into_result(()).unwrap_err();
        assert!(err.to_string().contains("beta_binomial"), "{err}");
    }

    #[test]
    fn digest_is_stable_hex() {
        assert_eq!(
            hex_digest(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
