//! Predictable primary-beacon and sub-beacon schedules.
//!
//! A cycle runs from one primary beacon `B_i` to the next. Its length is drawn
//! from the primary LCG. The cycle is cut into fixed sub-slots of length
//! `mean_cycle / n_sub_slots`; each slot gets a probability from the
//! sub-beacon LCG (reseeded at every primary beacon) and fires only when that
//! probability is strictly above `1 - (f - 1) / n_sub_slots`. Raising `f`
//! therefore only ever adds sub-beacons.

use std::collections::VecDeque;

use thiserror::Error;

use crate::energy::SpeedFactor;
use crate::prng::{LcgState, PrngError, ENCODED_LEN};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("invalid schedule parameters: {0}")]
    InvalidParams(String),
    #[error("speeding factor {f} outside [1, {max}]")]
    FactorOutOfRange { f: f64, max: f64 },
    #[error("prediction horizon must be positive, got {0}")]
    NonPositiveHorizon(f64),
    #[error("beacon frame must be {BEACON_FIELDS_LEN} bytes, got {0}")]
    BadFrameLength(usize),
    #[error(transparent)]
    Lcg(#[from] PrngError),
}

/// Cycle-length distribution and sub-slot layout. Durations in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleParams {
    pub mean_cycle: f64,
    pub min_cycle: f64,
    pub max_cycle: f64,
    pub n_sub_slots: u32,
    pub min_sub_spacing: f64,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        Self {
            mean_cycle: 1000.0,
            min_cycle: 500.0,
            max_cycle: 1500.0,
            n_sub_slots: 10,
            min_sub_spacing: 100.0,
        }
    }
}

impl ScheduleParams {
    pub fn validate(&self) -> Result<(), ScheduleError> {
        let bad = |m: &str| Err(ScheduleError::InvalidParams(m.to_string()));
        if !(self.min_cycle > 0.0 && self.min_cycle <= self.max_cycle) {
            return bad("need 0 < min_cycle <= max_cycle");
        }
        if (self.mean_cycle - 0.5 * (self.min_cycle + self.max_cycle)).abs() > 1e-9 * self.mean_cycle {
            return bad("mean_cycle must be the midpoint of [min_cycle, max_cycle]");
        }
        if self.n_sub_slots == 0 {
            return bad("n_sub_slots must be at least 1");
        }
        if self.slot_spacing() < self.min_sub_spacing {
            return bad("sub-slot spacing is below the configured minimum");
        }
        Ok(())
    }

    pub fn slot_spacing(&self) -> f64 {
        self.mean_cycle / self.n_sub_slots as f64
    }

    pub fn max_factor(&self) -> f64 {
        SpeedFactor::max_for(self.n_sub_slots)
    }

    /// Cycle length for a primary-LCG draw `u` in `[0, 1)`.
    pub fn cycle_length(&self, u: f64) -> f64 {
        self.min_cycle + (self.max_cycle - self.min_cycle) * u
    }
}

/// `1 - (f - 1) / n_b`.
pub fn sub_beacon_threshold(f: f64, n_sub_slots: u32) -> Result<f64, ScheduleError> {
    let max = SpeedFactor::max_for(n_sub_slots);
    if n_sub_slots == 0 || !(1.0..=max).contains(&f) {
        return Err(ScheduleError::FactorOutOfRange { f, max });
    }
    Ok(1.0 - (f - 1.0) / n_sub_slots as f64)
}

/// Candidate sub-beacon instants `B_i + j * spacing` strictly before `next`.
pub fn sub_slot_times(start: f64, next: f64, params: &ScheduleParams) -> Vec<f64> {
    let spacing = params.slot_spacing();
    (1..)
        .map(|j| start + j as f64 * spacing)
        .take_while(|&t| t < next)
        .collect()
}

/// State of one receiver's beacon schedule for the current cycle.
///
/// `primary_lcg` holds the value whose draw produced `next_primary`, and
/// `sub_lcg` is the sub-beacon generator reseeded with that same value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleState {
    pub primary_lcg: LcgState,
    pub sub_lcg: LcgState,
    pub last_primary: f64,
    pub next_primary: f64,
    pub factor: f64,
    pub params: ScheduleParams,
}

impl ScheduleState {
    /// Starts a schedule whose first primary beacon is at `first_beacon`.
    pub fn new(seed: LcgState, first_beacon: f64, factor: f64, params: ScheduleParams) -> Self {
        let (u, primary) = seed.next();
        Self {
            primary_lcg: primary,
            sub_lcg: LcgState::sub(primary.state),
            last_primary: first_beacon,
            next_primary: first_beacon + params.cycle_length(u),
            factor,
            params,
        }
    }

    /// Rebuilds the schedule of a cycle from the fields of any beacon sent in it.
    pub fn from_fields(fields: &BeaconFields, params: ScheduleParams) -> Self {
        let u = fields.primary.state as f64 / fields.primary.modulus as f64;
        Self {
            primary_lcg: fields.primary,
            sub_lcg: fields.sub,
            last_primary: fields.cycle_start,
            next_primary: fields.cycle_start + params.cycle_length(u),
            factor: fields.factor,
            params,
        }
    }

    /// Moves to the following cycle. Returns the primary beacon time after the
    /// new cycle's start together with the new state.
    pub fn next_primary(&self) -> (f64, ScheduleState) {
        let (u, primary) = self.primary_lcg.next();
        let start = self.next_primary;
        let next = Self {
            primary_lcg: primary,
            sub_lcg: LcgState::sub(primary.state),
            last_primary: start,
            next_primary: start + self.params.cycle_length(u),
            factor: self.factor,
            params: self.params,
        };
        (next.next_primary, next)
    }

    pub fn advance(&self) -> ScheduleState {
        self.next_primary().1
    }

    pub fn with_factor(mut self, factor: f64) -> Self {
        self.factor = factor;
        self
    }

    pub fn threshold(&self) -> f64 {
        sub_beacon_threshold(self.factor, self.params.n_sub_slots)
            .expect("schedule factor is kept within [1, n_b + 1]")
    }

    /// Sub-slot times of the current cycle paired with their drawn probabilities.
    pub fn slot_draws(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        sub_slot_times(self.last_primary, self.next_primary, &self.params)
            .into_iter()
            .zip(self.sub_lcg.uniforms())
    }

    /// Sub-beacons actually sent in the current cycle.
    pub fn realized_sub_beacons(&self) -> Vec<f64> {
        let th = self.threshold();
        self.slot_draws().filter(|&(_, p)| p > th).map(|(t, _)| t).collect()
    }

    /// Beacon fields announced during the current cycle.
    pub fn fields(&self) -> BeaconFields {
        BeaconFields {
            primary: self.primary_lcg,
            sub: self.sub_lcg,
            factor: self.factor,
            cycle_start: self.last_primary,
        }
    }

    /// Every beacon (sub and primary) strictly after the current cycle start.
    pub fn beacon_times(self) -> BeaconTimes {
        BeaconTimes::new(self)
    }
}

/// Iterator over successive beacon times of a schedule, cycle after cycle,
/// with the factor held fixed.
#[derive(Debug, Clone)]
pub struct BeaconTimes {
    state: ScheduleState,
    pending: VecDeque<f64>,
}

impl BeaconTimes {
    fn new(state: ScheduleState) -> Self {
        let mut pending: VecDeque<f64> = state.realized_sub_beacons().into();
        pending.push_back(state.next_primary);
        Self { state, pending }
    }
}

impl Iterator for BeaconTimes {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        if self.pending.is_empty() {
            *self = BeaconTimes::new(self.state.advance());
        }
        self.pending.pop_front()
    }
}

/// Replays a heard beacon's schedule forward: all beacon times in
/// `(cycle_start, cycle_start + horizon]`, assuming the announced factor stays.
pub fn predict_schedule(
    fields: &BeaconFields,
    params: ScheduleParams,
    horizon: f64,
) -> Result<Vec<f64>, ScheduleError> {
    if horizon.is_nan() || horizon <= 0.0 {
        return Err(ScheduleError::NonPositiveHorizon(horizon));
    }
    let end = fields.cycle_start + horizon;
    Ok(ScheduleState::from_fields(fields, params)
        .beacon_times()
        .take_while(|&t| t <= end)
        .collect())
}

/// Sender-side cache of a neighbour's schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborSchedule {
    state: ScheduleState,
}

impl NeighborSchedule {
    pub fn new(fields: &BeaconFields, params: ScheduleParams) -> Self {
        Self { state: ScheduleState::from_fields(fields, params) }
    }

    pub fn factor(&self) -> f64 {
        self.state.factor
    }

    /// Predicted beacon times strictly after `t`.
    pub fn beacons_after(&mut self, t: f64) -> impl Iterator<Item = f64> {
        while self.state.next_primary <= t {
            self.state = self.state.advance();
        }
        self.state.beacon_times().filter(move |&b| b > t)
    }
}

pub const BEACON_FIELDS_LEN: usize = 2 * ENCODED_LEN + 1 + 4;

/// Logical content of a beacon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeaconFields {
    pub primary: LcgState,
    pub sub: LcgState,
    pub factor: f64,
    /// `B_i`, the start of the cycle this beacon belongs to (ms).
    pub cycle_start: f64,
}

/// Factor as carried in the one-byte beacon field: nearest integer, at least 1.
pub fn announce_factor(f: f64) -> u8 {
    f.round().clamp(1.0, u8::MAX as f64) as u8
}

impl BeaconFields {
    /// Wire layout: primary state (6, LE), sub state (6, LE), factor (1),
    /// cycle start in whole milliseconds (4, LE).
    pub fn encode(&self) -> [u8; BEACON_FIELDS_LEN] {
        let mut out = [0u8; BEACON_FIELDS_LEN];
        out[..6].copy_from_slice(&self.primary.encode_state());
        out[6..12].copy_from_slice(&self.sub.encode_state());
        out[12] = announce_factor(self.factor);
        let ms = self.cycle_start.round().clamp(0.0, u32::MAX as f64) as u32;
        out[13..].copy_from_slice(&ms.to_le_bytes());
        out
    }

    /// Inverse of [`encode`](Self::encode); the timestamp comes back rounded
    /// to the millisecond.
    pub fn decode(bytes: &[u8]) -> Result<Self, ScheduleError> {
        if bytes.len() != BEACON_FIELDS_LEN {
            return Err(ScheduleError::BadFrameLength(bytes.len()));
        }
        let primary = LcgState::decode_state(&bytes[..6], &LcgState::primary(0))?;
        let sub = LcgState::decode_state(&bytes[6..12], &LcgState::sub(0))?;
        let ms = u32::from_le_bytes(bytes[13..].try_into().expect("4 bytes"));
        Ok(Self {
            primary,
            sub,
            factor: bytes[12].max(1) as f64,
            cycle_start: ms as f64,
        })
    }
}

/// Moving window of the last inter-arrival times seen by a receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct RateWindow {
    samples: VecDeque<f64>,
    capacity: usize,
}

impl Default for RateWindow {
    fn default() -> Self {
        Self::new(Self::CAPACITY)
    }
}

impl RateWindow {
    pub const CAPACITY: usize = 15;

    pub fn new(capacity: usize) -> Self {
        Self { samples: VecDeque::with_capacity(capacity), capacity: capacity.max(1) }
    }

    /// Adds one sample, evicting the oldest when full. Non-positive samples
    /// are ignored.
    pub fn push(&mut self, sample: f64) {
        if !(sample > 0.0) {
            return;
        }
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
        }
        self.samples.push_back(sample);
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean(&self) -> Option<f64> {
        if self.samples.is_empty() {
            None
        } else {
            Some(self.samples.iter().sum::<f64>() / self.samples.len() as f64)
        }
    }
}

/// Incoming rate in packets per mean cycle; zero until two samples exist.
pub fn estimate_lambda(window: &RateWindow, mean_cycle: f64) -> f64 {
    match window.mean() {
        Some(m) if window.len() >= 2 => mean_cycle / m,
        _ => 0.0,
    }
}
