//! Monte Carlo analysis of how unknown-labeled users could shift delivery
//! skew: each prior model proposes a gender distribution for the unknown
//! group, and repeated draws yield a distribution of "what the skew would be
//! if unknowns were labeled".

use crate::error::{Error, Result};
use crate::stats;
use crate::types::{EngagementRecord, GroupLabel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// External market-research estimate of the male share among search users,
/// used by the SimilarWeb-flavored priors unless overridden.
pub const SIMILARWEB_MALE_SHARE: f64 = 0.58;

/// Observed per-label impression counts the priors condition on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ObservedCounts {
    pub n_male: u64,
    pub n_female: u64,
    pub n_unknown: u64,
}

impl ObservedCounts {
    pub fn new(n_male: u64, n_female: u64, n_unknown: u64) -> Self {
        ObservedCounts {
            n_male,
            n_female,
            n_unknown,
        }
    }

    /// Sums impressions per label from a ledger.
    pub fn from_records(records: &[EngagementRecord]) -> Self {
        let mut counts = ObservedCounts::new(0, 0, 0);
        for record in records {
            match record.label {
                GroupLabel::Male => counts.n_male += record.impressions,
                GroupLabel::Female => counts.n_female += record.impressions,
                GroupLabel::Unknown => counts.n_unknown += record.impressions,
            }
        }
        counts
    }

    pub fn n_known(&self) -> u64 {
        self.n_male + self.n_female
    }

    pub fn n_total(&self) -> u64 {
        self.n_male + self.n_female + self.n_unknown
    }
}

/// A prior over the male share `p` among unknown users. Each draw samples
/// the number of male unknowns as Binomial(p, N_U).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "prior", rename_all = "snake_case")]
pub enum PriorModel {
    /// p = 0.5: unknowns split evenly.
    BinomialSymmetric,
    /// p equals the observed male share among known users.
    BinomialInformative,
    /// p drawn per replicate from Normal(observed share, sigma_p) truncated
    /// to [0, 1]; `sigma_p` defaults to the standard error of the observed
    /// share, sqrt(p(1-p)/(N_M+N_F)).
    NormalInformative { sigma_p: Option<f64> },
    /// p fixed to an external market estimate (default 0.58).
    BinomialSimilarWeb { p_fixed: Option<f64> },
    /// p solved so the expected overall skew equals 0.5, clamped to [0, 1].
    SymmetricSolve,
    /// p solved so the expected overall skew equals the external estimate
    /// (default 0.58), clamped to [0, 1].
    SimilarWebSolve { p_fixed: Option<f64> },
}

impl PriorModel {
    /// Stable identifier used in reports and file names.
    pub fn name(&self) -> &'static str {
        match self {
            PriorModel::BinomialSymmetric => "binomial_symmetric",
            PriorModel::BinomialInformative => "binomial_informative",
            PriorModel::NormalInformative { .. } => "normal_informative",
            PriorModel::BinomialSimilarWeb { .. } => "binomial_similarweb",
            PriorModel::SymmetricSolve => "symmetric_solve",
            PriorModel::SimilarWebSolve { .. } => "similarweb_solve",
        }
    }
}

fn validated_fixed_p(p_fixed: Option<f64>, default: f64) -> Result<f64> {
    let p = p_fixed.unwrap_or(default);
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "fixed prior probability must lie in [0, 1], got {p}"
        )));
    }
    Ok(p)
}

fn observed_male_share(observed: &ObservedCounts) -> Result<f64> {
    if observed.n_known() == 0 {
        return Err(Error::InvalidArgument(
            "informative priors require at least one known-labeled unit".into(),
        ));
    }
    Ok(observed.n_male as f64 / observed.n_known() as f64)
}

fn solved_p(observed: &ObservedCounts, target: f64) -> Result<f64> {
    if observed.n_unknown == 0 {
        return Err(Error::InvalidArgument(
            "solve priors require at least one unknown-labeled unit".into(),
        ));
    }
    let raw =
        (target * observed.n_total() as f64 - observed.n_male as f64) / observed.n_unknown as f64;
    Ok(raw.clamp(0.0, 1.0))
}

/// The (mean) success probability the prior assigns to an unknown user being
/// male. For `NormalInformative` this is the mean of the per-draw normal.
pub fn prior_p(prior: &PriorModel, observed: &ObservedCounts) -> Result<f64> {
    match prior {
        PriorModel::BinomialSymmetric => Ok(0.5),
        PriorModel::BinomialInformative => observed_male_share(observed),
        PriorModel::NormalInformative { sigma_p } => {
            if let Some(sigma) = sigma_p {
                if !(sigma.is_finite() && *sigma >= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "sigma_p must be a non-negative finite number, got {sigma}"
                    )));
                }
            }
            observed_male_share(observed)
        }
        PriorModel::BinomialSimilarWeb { p_fixed } => {
            validated_fixed_p(*p_fixed, SIMILARWEB_MALE_SHARE)
        }
        PriorModel::SymmetricSolve => solved_p(observed, 0.5),
        PriorModel::SimilarWebSolve { p_fixed } => {
            let target = validated_fixed_p(*p_fixed, SIMILARWEB_MALE_SHARE)?;
            solved_p(observed, target)
        }
    }
}

/// Default sigma for the normal-informative prior: the standard error of the
/// observed male share.
pub fn default_sigma_p(observed: &ObservedCounts) -> Result<f64> {
    let p = observed_male_share(observed)?;
    Ok((p * (1.0 - p) / observed.n_known() as f64).sqrt())
}

/// The draws of one Monte Carlo run, with the inputs that produced them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkewDistribution {
    pub prior: PriorModel,
    pub observed: ObservedCounts,
    pub seed: u64,
    pub draws: Vec<f64>,
}

/// Simulates the skew that would be observed if unknown users carried labels
/// drawn from the prior: per draw, U_M ~ Binomial(p, N_U) and
/// skew = (N_M + U_M) / (N_M + N_F + N_U).
///
/// Deterministic given `seed`: draw `i` consumes an independent RNG stream
/// derived from `(seed, i)`, so results are identical no matter how draws are
/// scheduled. With `N_U = 0` every prior degenerates to a point mass at the
/// observed known-only skew.
pub fn simulate_unknown_skew(
    observed: &ObservedCounts,
    prior: &PriorModel,
    draws: u64,
    seed: u64,
) -> Result<SkewDistribution> {
    if draws == 0 {
        return Err(Error::InvalidArgument(
            "at least one draw is required".into(),
        ));
    }
    if observed.n_total() == 0 {
        return Err(Error::InvalidArgument(
            "cannot simulate skew over zero observed units".into(),
        ));
    }
    let n_total = observed.n_total() as f64;

    // With no unknown units there is nothing to sample; the result is the
    // observed skew for every prior, including the solve variants whose
    // derived p would otherwise be undefined.
    if observed.n_unknown == 0 {
        let point = observed.n_male as f64 / n_total;
        return Ok(SkewDistribution {
            prior: *prior,
            observed: *observed,
            seed,
            draws: vec![point; draws as usize],
        });
    }

    let p_mean = prior_p(prior, observed)?;
    let sigma = match prior {
        PriorModel::NormalInformative { sigma_p } => {
            Some(sigma_p.map_or_else(|| default_sigma_p(observed), Ok)?)
        }
        _ => None,
    };

    let mut samples = Vec::with_capacity(draws as usize);
    for draw_index in 0..draws {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(draw_index);
        let p = match sigma {
            Some(sd) => stats::sample_truncated_normal(&mut rng, p_mean, sd, 0.0, 1.0)?,
            None => p_mean,
        };
        let u = rng.random::<f64>();
        let unknown_males = stats::sample_binomial(observed.n_unknown, p, u)?;
        samples.push((observed.n_male + unknown_males) as f64 / n_total);
    }
    Ok(SkewDistribution {
        prior: *prior,
        observed: *observed,
        seed,
        draws: samples,
    })
}

/// Histogram-and-quantile summary of a simulated skew distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionSummary {
    /// Counts over `bins` equal-width bins spanning [0, 1]; sums to the
    /// number of draws.
    pub histogram: Vec<u64>,
    pub bins: usize,
    /// Index of the fullest bin (lowest index on ties).
    pub mode_bin: usize,
    /// The mode bin's [low, high) range.
    pub mode_low: f64,
    pub mode_high: f64,
    pub mean: f64,
    pub q01: f64,
    pub q50: f64,
    pub q99: f64,
}

/// Summarizes draws into a histogram over [0, 1], the mode bin, the mean,
/// and the 1%/50%/99% quantiles.
pub fn summarize_distribution(dist: &SkewDistribution, bins: usize) -> Result<DistributionSummary> {
    if dist.draws.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot summarize an empty distribution".into(),
        ));
    }
    if bins == 0 {
        return Err(Error::InvalidArgument(
            "summary needs at least one histogram bin".into(),
        ));
    }
    let histogram = stats::histogram(&dist.draws, 0.0, 1.0, bins)?;
    let mut mode_bin = 0usize;
    for (idx, &count) in histogram.iter().enumerate() {
        if count > histogram[mode_bin] {
            mode_bin = idx;
        }
    }
    let mean = dist.draws.iter().sum::<f64>() / dist.draws.len() as f64;
    Ok(DistributionSummary {
        bins,
        mode_bin,
        mode_low: mode_bin as f64 / bins as f64,
        mode_high: (mode_bin + 1) as f64 / bins as f64,
        mean,
        q01: stats::quantile(&dist.draws, 0.01)?,
        q50: stats::quantile(&dist.draws, 0.50)?,
        q99: stats::quantile(&dist.draws, 0.99)?,
        histogram,
    })
}
