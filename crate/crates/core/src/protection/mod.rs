//! Protection chain: inverse-time overcurrent relays, definite-time voltage
//! and frequency elements, and breakers with operate delays.
//!
//! Every element is a pure step function over explicit state, evaluated once
//! per step on the latest network solution.

pub mod breaker;
pub mod overcurrent;
pub mod voltage;

pub use breaker::{breaker_step, BreakerAction, BreakerCommand, BreakerState};
pub use overcurrent::{oc_step, trip_time, Curve, OvercurrentRelaySpec};
pub use voltage::{
    threshold_step, uv_step, Direction, FrequencyRelaySpec, VoltageRelaySpec,
};

use serde::{Deserialize, Serialize};

/// Slack on timer/integral comparisons so that a trip due exactly on a step
/// boundary is not pushed to the next step by rounding.
pub(crate) const TIME_EPS: f64 = 1e-9;

/// What a relay acts on when it trips.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelayTarget {
    Breaker(String),
    /// Disconnects a source directly (inverter self-protection).
    Source(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripCommand {
    pub relay: String,
    pub target: RelayTarget,
    pub time_s: f64,
}

/// Timer and latch state shared by every relay element.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RelayState {
    /// Inverse-time trip integral, in [0, 1].
    pub integral: f64,
    /// Time the definite-time condition has held continuously.
    pub timer_s: f64,
    /// Whether the element is currently picked up.
    pub picked_up: bool,
    pub latched: bool,
    pub last_trip_s: Option<f64>,
}

impl RelayState {
    pub(crate) fn dropout(&mut self) {
        self.integral = 0.0;
        self.timer_s = 0.0;
        self.picked_up = false;
    }

    pub(crate) fn latch(&mut self, relay: &str, target: &RelayTarget, now: f64) -> TripCommand {
        self.latched = true;
        self.last_trip_s = Some(now);
        TripCommand {
            relay: relay.to_string(),
            target: target.clone(),
            time_s: now,
        }
    }
}
