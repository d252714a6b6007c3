//! Alternating A/B activation schedules for split campaigns that must not
//! compete with each other in the same auction slots.

use serde::Serialize;

/// One of the two alternating cycles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Cycle {
    A,
    B,
}

impl Cycle {
    pub const fn other(self) -> Cycle {
        match self {
            Cycle::A => Cycle::B,
            Cycle::B => Cycle::A,
        }
    }
}

/// Which cycle occupies slot 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CyclePhase {
    #[default]
    AFirst,
    BFirst,
}

/// A periodic alternation of cycles A and B over a fixed horizon.
///
/// Time is divided into consecutive slots; `period` consecutive slots form a
/// block and blocks alternate between the cycles, starting with the phase
/// cycle. With `slots_per_day == 1` a slot is a day; with `2` each day is a
/// morning/afternoon pair, which lets the alternation complete within a day.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleSchedule {
    period: u32,
    horizon: u32,
    phase: CyclePhase,
    slots_per_day: u32,
}

impl CycleSchedule {
    /// Builds a schedule. `period` and `horizon` are in slots; `slots_per_day`
    /// must be 1 or 2.
    pub fn new(
        period: u32,
        horizon: u32,
        phase: CyclePhase,
        slots_per_day: u32,
    ) -> crate::Result<Self> {
        if period == 0 {
            return Err(crate::Error::InvalidArgument(
                "schedule period must be at least one slot".into(),
            ));
        }
        if horizon == 0 {
            return Err(crate::Error::InvalidArgument(
                "schedule horizon must be at least one slot".into(),
            ));
        }
        if !(slots_per_day == 1 || slots_per_day == 2) {
            return Err(crate::Error::InvalidArgument(format!(
                "slots_per_day must be 1 or 2, got {slots_per_day}"
            )));
        }
        Ok(CycleSchedule {
            period,
            horizon,
            phase,
            slots_per_day,
        })
    }

    pub fn period(&self) -> u32 {
        self.period
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn phase(&self) -> CyclePhase {
        self.phase
    }

    pub fn slots_per_day(&self) -> u32 {
        self.slots_per_day
    }

    /// The cycle occupying `slot` (0-based). Defined for all slot numbers so
    /// callers may extend a schedule past its nominal horizon.
    pub fn cycle_for_slot(&self, slot: u32) -> Cycle {
        let block_is_even = (slot / self.period) % 2 == 0;
        match (self.phase, block_is_even) {
            (CyclePhase::AFirst, true) | (CyclePhase::BFirst, false) => Cycle::A,
            (CyclePhase::AFirst, false) | (CyclePhase::BFirst, true) => Cycle::B,
        }
    }

    /// Number of slots within the horizon assigned to cycle A.
    pub fn a_slots(&self) -> u32 {
        (0..self.horizon)
            .filter(|&s| self.cycle_for_slot(s) == Cycle::A)
            .count() as u32
    }

    /// Number of slots within the horizon assigned to cycle B.
    pub fn b_slots(&self) -> u32 {
        self.horizon - self.a_slots()
    }

    /// Whether both cycles get equal time within the horizon. An unbalanced
    /// schedule biases the comparison between the two cycles' campaigns.
    pub fn is_balanced(&self) -> bool {
        self.a_slots() == self.b_slots()
    }

    /// The slot covering `(day, index_in_day)` for a day split into
    /// `slots_per_day` equal parts.
    pub fn slot_for_day_part(&self, day: u32, part: u32) -> u32 {
        day * self.slots_per_day + part.min(self.slots_per_day - 1)
    }
}

/// Builds a whole-day alternating schedule (one slot per day): `period` days
/// of the phase cycle, then `period` days of the other, repeating across
/// `horizon_days`.
pub fn make_schedule(
    period_days: u32,
    horizon_days: u32,
    phase: CyclePhase,
) -> crate::Result<CycleSchedule> {
    CycleSchedule::new(period_days, horizon_days, phase, 1)
}
