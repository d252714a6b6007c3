//! Core library for auditing demographic skew in ad delivery and planning
//! budget-split interventions.
//!
//! The crate is organized around a single ledger unit — [`EngagementRecord`],
//! one row of impressions/clicks/conversions/spend per (campaign, date,
//! platform gender label) — and four functional areas:
//!
//! * [`metrics`] — skew shares, Agresti–Coull confidence intervals, parity
//!   tests, CTR/CVR/CPM rates, and windowed skew time series.
//! * [`unknownsim`] — Monte Carlo simulation of what delivery skew would look
//!   like under different assumptions about users whose gender label is
//!   unknown.
//! * [`deliverysim`] — a stylized paid-search delivery simulator (label
//!   inference, per-label cost premiums and engagement gaps, automated
//!   bidding under daily budgets) that emits engagement ledgers.
//! * [`intervention`] — budget-split campaign construction (direct splits and
//!   unknown-aware four-campaign splits on alternating cycles), budget
//!   allocation, and iterative rebalancing toward a desired delivery ratio.
//!
//! All randomized routines are driven by an explicit `u64` seed and a
//! fixed, portable generator (ChaCha), so identical inputs produce
//! byte-identical outputs on every platform.

pub mod deliverysim;
mod error;
pub mod metrics;
mod money;
mod schedule;
pub mod stats;
mod types;
pub mod unknownsim;

pub mod intervention;

pub use error::{Error, Result};
pub use money::Money;
pub use types::{
    validate_record, Activation, BiddingStrategy, CampaignConfig, EngagementRecord, GroupLabel,
    LatentGender, RateMetrics, RecordViolation, Side, SkewEstimate, SkewMetric, Targeting,
};

pub use schedule::{make_schedule, Cycle, CyclePhase, CycleSchedule};
