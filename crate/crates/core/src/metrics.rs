//! The audit pipeline: skew shares over labeled users, Agresti–Coull
//! confidence intervals, parity verdicts, engagement rates, and time-series
//! aggregation.
//!
//! All operations here are pure and deterministic, and their results do not
//! depend on the order of the input records.

use crate::error::{Error, Result};
use crate::money::Money;
use crate::stats;
use crate::types::{EngagementRecord, GroupLabel, RateMetrics, SkewEstimate, SkewMetric};
use chrono::{Days, NaiveDate};
use serde::Serialize;
use std::collections::BTreeMap;

/// How records are grouped along the time axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationWindow {
    Daily,
    /// Consecutive 7-day blocks anchored at the first record's date.
    Weekly,
    Whole,
}

/// Per-label unit counts for one metric (spend is counted in cents).
pub fn counts_by_label(
    records: &[EngagementRecord],
    metric: SkewMetric,
) -> BTreeMap<GroupLabel, u64> {
    let mut counts = BTreeMap::new();
    for record in records {
        *counts.entry(record.label).or_insert(0u64) += metric_units(record, metric);
    }
    counts
}

fn metric_units(record: &EngagementRecord, metric: SkewMetric) -> u64 {
    match metric {
        SkewMetric::Impressions => record.impressions,
        SkewMetric::Clicks => record.clicks,
        SkewMetric::Conversions => record.conversions,
        SkewMetric::Spend => record.spend.cents().max(0) as u64,
    }
}

/// Share of the focal group among male- plus female-labeled units. Unknown
/// units are excluded from both numerator and denominator.
pub fn skew(counts_by_label: &BTreeMap<GroupLabel, u64>, focal: GroupLabel) -> Result<f64> {
    if focal == GroupLabel::Unknown {
        return Err(Error::InvalidArgument(
            "skew is defined for a binary focal group (male or female), not unknown".into(),
        ));
    }
    let male = counts_by_label.get(&GroupLabel::Male).copied().unwrap_or(0);
    let female = counts_by_label
        .get(&GroupLabel::Female)
        .copied()
        .unwrap_or(0);
    let total = male + female;
    if total == 0 {
        return Err(Error::UndefinedSkew);
    }
    let focal_count = if focal == GroupLabel::Male {
        male
    } else {
        female
    };
    Ok(focal_count as f64 / total as f64)
}

/// Agresti–Coull interval for a binomial proportion: with z the two-sided
/// normal quantile for `level`, ñ = trials + z² and p̃ = (successes + z²/2)/ñ,
/// the interval is p̃ ± z·sqrt(p̃(1−p̃)/ñ), clamped to [0, 1].
pub fn agresti_coull_ci(successes: u64, trials: u64, level: f64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::InvalidArgument(
            "confidence interval requires at least one trial".into(),
        ));
    }
    if successes > trials {
        return Err(Error::InvalidArgument(format!(
            "successes ({successes}) exceed trials ({trials})"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "confidence level must lie strictly inside (0, 1), got {level}"
        )));
    }
    let z = stats::normal_quantile(0.5 * (1.0 + level))?;
    let z2 = z * z;
    let n_tilde = trials as f64 + z2;
    let p_tilde = (successes as f64 + 0.5 * z2) / n_tilde;
    let half_width = z * (p_tilde * (1.0 - p_tilde) / n_tilde).sqrt();
    Ok((
        (p_tilde - half_width).max(0.0),
        (p_tilde + half_width).min(1.0),
    ))
}

/// Skew point estimate plus Agresti–Coull interval for one metric over a
/// group of records. For the spend metric the interval treats cents as
/// trials, a documented heuristic since spend is not a true count of
/// independent units.
pub fn skew_estimate(
    records: &[EngagementRecord],
    metric: SkewMetric,
    focal: GroupLabel,
    level: f64,
) -> Result<SkewEstimate> {
    let counts = counts_by_label(records, metric);
    estimate_from_counts(&counts, metric, focal, level)
}

fn estimate_from_counts(
    counts: &BTreeMap<GroupLabel, u64>,
    metric: SkewMetric,
    focal: GroupLabel,
    level: f64,
) -> Result<SkewEstimate> {
    let point = skew(counts, focal)?;
    let male = counts.get(&GroupLabel::Male).copied().unwrap_or(0);
    let female = counts.get(&GroupLabel::Female).copied().unwrap_or(0);
    let n_total = male + female;
    let n_focal = if focal == GroupLabel::Male {
        male
    } else {
        female
    };
    let (ci_low, ci_high) = agresti_coull_ci(n_focal, n_total, level)?;
    Ok(SkewEstimate {
        metric,
        point,
        ci_low,
        ci_high,
        level,
        n_focal,
        n_total,
    })
}

/// Parity verdict: does the estimate's confidence interval contain `target`?
pub fn parity_test(estimate: &SkewEstimate, target: f64) -> bool {
    estimate.ci_low <= target && target <= estimate.ci_high
}

/// Aggregate rates over all records as one group.
///
/// Errors with an undefined-rate when total impressions are zero.
pub fn rates(records: &[EngagementRecord]) -> Result<RateMetrics> {
    rates_over(records.iter(), "overall")
}

/// Aggregate rates per label, for the labels present in the records.
///
/// Errors when any present label has zero impressions; callers that want to
/// skip such labels should filter first.
pub fn rates_by_label(records: &[EngagementRecord]) -> Result<BTreeMap<GroupLabel, RateMetrics>> {
    let mut by_label: BTreeMap<GroupLabel, Vec<&EngagementRecord>> = BTreeMap::new();
    for record in records {
        by_label.entry(record.label).or_default().push(record);
    }
    by_label
        .into_iter()
        .map(|(label, group)| Ok((label, rates_over(group.into_iter(), label.as_str())?)))
        .collect()
}

fn rates_over<'a>(
    records: impl Iterator<Item = &'a EngagementRecord>,
    group_name: &str,
) -> Result<RateMetrics> {
    let (mut impressions, mut clicks, mut conversions) = (0u64, 0u64, 0u64);
    let mut spend = Money::ZERO;
    for record in records {
        impressions += record.impressions;
        clicks += record.clicks;
        conversions += record.conversions;
        spend += record.spend;
    }
    if impressions == 0 {
        return Err(Error::UndefinedRate(group_name.to_string()));
    }
    Ok(RateMetrics {
        ctr: clicks as f64 / impressions as f64,
        cvr: conversions as f64 / impressions as f64,
        cpm: 1000.0 * spend.dollars() / impressions as f64,
    })
}

/// One time window of a skew series. `estimate` is `None` when the window
/// has zero male-plus-female units (skew undefined there); `partial` marks a
/// trailing window not fully covered by the record date range.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowSkew {
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub partial: bool,
    pub estimate: Option<SkewEstimate>,
}

/// Skew estimates over consecutive time windows tiling the record date range.
/// Daily windows cover every calendar day from the first to the last record
/// date (days without records yield undefined markers); weekly windows are
/// 7-day blocks anchored at the first record date.
pub fn skew_series(
    records: &[EngagementRecord],
    window: AggregationWindow,
    metric: SkewMetric,
    focal: GroupLabel,
    level: f64,
) -> Result<Vec<WindowSkew>> {
    if records.is_empty() {
        return Err(Error::InvalidArgument(
            "skew series requires at least one record".into(),
        ));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "confidence level must lie strictly inside (0, 1), got {level}"
        )));
    }
    let first = records.iter().map(|r| r.date).min().expect("non-empty");
    let last = records.iter().map(|r| r.date).max().expect("non-empty");

    let mut daily: BTreeMap<NaiveDate, BTreeMap<GroupLabel, u64>> = BTreeMap::new();
    for record in records {
        *daily
            .entry(record.date)
            .or_default()
            .entry(record.label)
            .or_insert(0) += metric_units(record, metric);
    }

    let spans: Vec<(NaiveDate, NaiveDate)> = match window {
        AggregationWindow::Whole => vec![(first, last)],
        AggregationWindow::Daily => {
            let mut spans = Vec::new();
            let mut day = first;
            while day <= last {
                spans.push((day, day));
                day = day + Days::new(1);
            }
            spans
        }
        AggregationWindow::Weekly => {
            let mut spans = Vec::new();
            let mut start = first;
            while start <= last {
                spans.push((start, start + Days::new(6)));
                start = start + Days::new(7);
            }
            spans
        }
    };

    let mut series = Vec::with_capacity(spans.len());
    for (start, end) in spans {
        let mut counts: BTreeMap<GroupLabel, u64> = BTreeMap::new();
        for (_, day_counts) in daily.range(start..=end) {
            for (&label, &units) in day_counts {
                *counts.entry(label).or_insert(0) += units;
            }
        }
        let estimate = match estimate_from_counts(&counts, metric, focal, level) {
            Ok(estimate) => Some(estimate),
            Err(Error::UndefinedSkew) => None,
            Err(other) => return Err(other),
        };
        series.push(WindowSkew {
            start,
            end,
            partial: end > last,
            estimate,
        });
    }
    Ok(series)
}

/// How many complement-group units a skew shift corresponds to at a given
/// labeled reach: round((skew_before − skew_after) · n_mf). Positive means
/// the focal share fell, i.e. additional complement-group units.
pub fn scaled_reach_delta(skew_before: f64, skew_after: f64, n_mf: u64) -> Result<i64> {
    if n_mf == 0 {
        return Err(Error::InvalidArgument(
            "scaled reach delta requires a positive labeled-unit count".into(),
        ));
    }
    for (name, value) in [("skew_before", skew_before), ("skew_after", skew_after)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidArgument(format!(
                "{name} must lie in [0, 1], got {value}"
            )));
        }
    }
    Ok(((skew_before - skew_after) * n_mf as f64).round() as i64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(male: u64, female: u64, unknown: u64) -> BTreeMap<GroupLabel, u64> {
        let mut map = BTreeMap::new();
        map.insert(GroupLabel::Male, male);
        map.insert(GroupLabel::Female, female);
        map.insert(GroupLabel::Unknown, unknown);
        map
    }

    fn record(
        date: NaiveDate,
        label: GroupLabel,
        impressions: u64,
        clicks: u64,
        conversions: u64,
        spend_cents: i64,
    ) -> EngagementRecord {
        EngagementRecord {
            campaign_id: "c1".into(),
            date,
            label,
            impressions,
            clicks,
            conversions,
            spend: Money::from_cents(spend_cents),
        }
    }

    fn day(offset: u64) -> NaiveDate {
        NaiveDate::from_ymd_opt(2024, 4, 1).unwrap() + Days::new(offset)
    }

    #[test]
    fn skew_excludes_unknown_and_divides_directly() {
        assert_eq!(
            skew(&counts(563, 437, 900), GroupLabel::Male).unwrap(),
            0.563
        );
        assert_eq!(skew(&counts(500, 500, 0), GroupLabel::Male).unwrap(), 0.5);
        assert_eq!(skew(&counts(0, 100, 0), GroupLabel::Male).unwrap(), 0.0);
    }

    #[test]
    fn skew_error_cases() {
        assert!(matches!(
            skew(&counts(0, 0, 50), GroupLabel::Male),
            Err(Error::UndefinedSkew)
        ));
        assert!(skew(&counts(10, 10, 0), GroupLabel::Unknown).is_err());
    }

    #[test]
    fn skew_shares_sum_to_one_exactly() {
        for (m, f) in [(563u64, 437u64), (1, 2), (999_983, 17), (7, 7)] {
            let c = counts(m, f, 3);
            let male = skew(&c, GroupLabel::Male).unwrap();
            let female = skew(&c, GroupLabel::Female).unwrap();
            assert_eq!(male + female, 1.0);
        }
    }

    #[test]
    fn agresti_coull_matches_worked_examples() {
        let (low, high) = agresti_coull_ci(50, 100, 0.99).unwrap();
        assert!((low - 0.375).abs() < 1e-3, "low {low}");
        assert!((high - 0.625).abs() < 1e-3, "high {high}");
        assert!((low + high - 1.0).abs() < 1e-12, "symmetric about 1/2");

        let (low, high) = agresti_coull_ci(550, 1000, 0.99).unwrap();
        assert!((low - 0.509).abs() < 1e-3, "low {low}");
        assert!((high - 0.590).abs() < 1e-3, "high {high}");

        let (low, _) = agresti_coull_ci(0, 10, 0.99).unwrap();
        assert_eq!(low, 0.0, "clamped at the boundary");
    }

    #[test]
    fn agresti_coull_rejects_bad_arguments() {
        assert!(agresti_coull_ci(0, 0, 0.99).is_err());
        assert!(agresti_coull_ci(11, 10, 0.99).is_err());
        assert!(agresti_coull_ci(5, 10, 0.0).is_err());
        assert!(agresti_coull_ci(5, 10, 1.0).is_err());
    }

    #[test]
    fn agresti_coull_width_shrinks_like_inverse_sqrt_trials() {
        let width = |trials: u64| {
            let (low, high) = agresti_coull_ci(trials / 2, trials, 0.99).unwrap();
            high - low
        };
        let ratio = width(1_000) / width(100_000);
        assert!(
            (ratio - 10.0).abs() < 1.0,
            "width ratio {ratio} should be within 10% of sqrt(100) = 10"
        );
        // Monotone non-increasing at fixed success fraction.
        let mut previous = width(10);
        for trials in [100, 1_000, 10_000, 100_000] {
            let current = width(trials);
            assert!(current <= previous);
            previous = current;
        }
    }

    #[test]
    fn parity_matches_published_interval_verdicts() {
        let make = |ci_low: f64, ci_high: f64| SkewEstimate {
            metric: SkewMetric::Impressions,
            point: 0.5 * (ci_low + ci_high),
            ci_low,
            ci_high,
            level: 0.99,
            n_focal: 0,
            n_total: 0,
        };
        assert!(!parity_test(&make(0.550, 0.576), 0.5));
        assert!(parity_test(&make(0.495, 0.568), 0.5));
        assert!(parity_test(&make(0.5, 0.5), 0.5));
    }

    #[test]
    fn parity_is_invariant_under_reflection_about_target() {
        let cases = [(0.495, 0.568), (0.550, 0.576), (0.2, 0.3), (0.48, 0.52)];
        for (low, high) in cases {
            let direct = SkewEstimate {
                metric: SkewMetric::Impressions,
                point: 0.5 * (low + high),
                ci_low: low,
                ci_high: high,
                level: 0.99,
                n_focal: 0,
                n_total: 0,
            };
            let reflected = SkewEstimate {
                ci_low: 1.0 - high,
                ci_high: 1.0 - low,
                point: 1.0 - direct.point,
                ..direct
            };
            assert_eq!(parity_test(&direct, 0.5), parity_test(&reflected, 0.5));
        }
    }

    #[test]
    fn rates_match_definitions() {
        let records = vec![
            record(day(0), GroupLabel::Male, 400, 20, 0, 0),
            record(day(0), GroupLabel::Female, 600, 0, 0, 500),
        ];
        let overall = rates(&records).unwrap();
        assert_eq!(overall.ctr, 0.02);
        assert_eq!(overall.cvr, 0.0);
        assert_eq!(overall.cpm, 5.0);

        let per_label = rates_by_label(&records).unwrap();
        assert_eq!(per_label[&GroupLabel::Male].ctr, 0.05);
        assert_eq!(
            per_label[&GroupLabel::Female].cpm,
            500.0 * 0.01 / 600.0 * 1000.0
        );
        assert!(!per_label.contains_key(&GroupLabel::Unknown));
    }

    #[test]
    fn rates_error_on_zero_impressions() {
        assert!(matches!(rates(&[]), Err(Error::UndefinedRate(_))));
        let zero_impr = vec![record(day(0), GroupLabel::Male, 0, 0, 0, 0)];
        assert!(matches!(
            rates_by_label(&zero_impr),
            Err(Error::UndefinedRate(_))
        ));
    }

    #[test]
    fn weekly_series_splits_fourteen_days_into_two_full_windows() {
        let mut records = Vec::new();
        for offset in 0..14 {
            records.push(record(day(offset), GroupLabel::Male, 60, 0, 0, 0));
            records.push(record(day(offset), GroupLabel::Female, 40, 0, 0, 0));
        }
        let series = skew_series(
            &records,
            AggregationWindow::Weekly,
            SkewMetric::Impressions,
            GroupLabel::Male,
            0.99,
        )
        .unwrap();
        assert_eq!(series.len(), 2);
        for window in &series {
            assert!(!window.partial);
            let estimate = window.estimate.as_ref().unwrap();
            assert_eq!(estimate.point, 0.6);
            assert_eq!(estimate.n_total, 700);
        }
        assert_eq!(series[0].start, day(0));
        assert_eq!(series[0].end, day(6));
        assert_eq!(series[1].start, day(7));
    }

    #[test]
    fn whole_window_equals_skew_over_summed_counts() {
        let records = vec![
            record(day(0), GroupLabel::Male, 563, 0, 0, 0),
            record(day(3), GroupLabel::Female, 437, 0, 0, 0),
            record(day(5), GroupLabel::Unknown, 900, 0, 0, 0),
        ];
        let series = skew_series(
            &records,
            AggregationWindow::Whole,
            SkewMetric::Impressions,
            GroupLabel::Male,
            0.99,
        )
        .unwrap();
        assert_eq!(series.len(), 1);
        let estimate = series[0].estimate.as_ref().unwrap();
        assert_eq!(
            estimate.point,
            skew(
                &counts_by_label(&records, SkewMetric::Impressions),
                GroupLabel::Male
            )
            .unwrap()
        );
        assert_eq!(estimate.point, 0.563);
    }

    #[test]
    fn undefined_windows_are_marked_not_fatal() {
        // Week 1 has labeled traffic, week 2 only unknown-labeled traffic.
        let records = vec![
            record(day(0), GroupLabel::Male, 80, 0, 0, 0),
            record(day(1), GroupLabel::Female, 20, 0, 0, 0),
            record(day(7), GroupLabel::Unknown, 500, 0, 0, 0),
        ];
        let series = skew_series(
            &records,
            AggregationWindow::Weekly,
            SkewMetric::Impressions,
            GroupLabel::Male,
            0.99,
        )
        .unwrap();
        assert_eq!(series.len(), 2);
        assert!(series[0].estimate.is_some());
        assert!(series[1].estimate.is_none());
        assert!(series[1].partial, "second week covers only one record day");
    }

    #[test]
    fn daily_series_tiles_gaps_with_undefined_markers() {
        let records = vec![
            record(day(0), GroupLabel::Male, 10, 0, 0, 0),
            record(day(2), GroupLabel::Female, 10, 0, 0, 0),
        ];
        let series = skew_series(
            &records,
            AggregationWindow::Daily,
            SkewMetric::Impressions,
            GroupLabel::Male,
            0.99,
        )
        .unwrap();
        assert_eq!(series.len(), 3);
        assert!(series[0].estimate.is_some());
        assert!(series[1].estimate.is_none());
        assert!(series[2].estimate.is_some());
    }

    #[test]
    fn series_is_order_independent() {
        let mut records = Vec::new();
        for offset in 0..10 {
            records.push(record(
                day(offset),
                GroupLabel::Male,
                30 + offset,
                3,
                1,
                150,
            ));
            records.push(record(day(offset), GroupLabel::Female, 25, 2, 1, 140));
        }
        let forward = skew_series(
            &records,
            AggregationWindow::Weekly,
            SkewMetric::Impressions,
            GroupLabel::Male,
            0.99,
        )
        .unwrap();
        records.reverse();
        let reversed = skew_series(
            &records,
            AggregationWindow::Weekly,
            SkewMetric::Impressions,
            GroupLabel::Male,
            0.99,
        )
        .unwrap();
        assert_eq!(forward, reversed);
    }

    #[test]
    fn spend_skew_uses_cents_as_units() {
        let records = vec![
            record(day(0), GroupLabel::Male, 10, 5, 0, 563),
            record(day(0), GroupLabel::Female, 10, 5, 0, 437),
        ];
        let estimate = skew_estimate(&records, SkewMetric::Spend, GroupLabel::Male, 0.99).unwrap();
        assert_eq!(estimate.point, 0.563);
        assert_eq!(estimate.n_focal, 563);
        assert_eq!(estimate.n_total, 1000);
    }

    #[test]
    fn empty_series_input_is_rejected() {
        assert!(skew_series(
            &[],
            AggregationWindow::Whole,
            SkewMetric::Impressions,
            GroupLabel::Male,
            0.99
        )
        .is_err());
    }

    #[test]
    fn scaled_reach_delta_examples() {
        assert_eq!(scaled_reach_delta(0.55, 0.52, 100_000).unwrap(), 3_000);
        assert_eq!(scaled_reach_delta(0.5, 0.5, 10_000).unwrap(), 0);
        assert_eq!(scaled_reach_delta(0.48, 0.50, 10_000).unwrap(), -200);
        assert!(scaled_reach_delta(0.5, 0.5, 0).is_err());
        assert!(scaled_reach_delta(1.2, 0.5, 10).is_err());
    }

    #[test]
    fn estimate_point_always_inside_its_interval() {
        for (successes, trials) in [(0u64, 10u64), (10, 10), (1, 2), (550, 1000), (3, 97)] {
            let (low, high) = agresti_coull_ci(successes, trials, 0.99).unwrap();
            let p_hat = successes as f64 / trials as f64;
            assert!(
                low <= p_hat && p_hat <= high,
                "raw share {p_hat} outside [{low}, {high}]"
            );
        }
    }
}
