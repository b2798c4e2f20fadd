use serde::{Deserialize, Serialize};

use super::{RelayState, RelayTarget, TripCommand, TIME_EPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    #[default]
    Under,
    Over,
}

impl Direction {
    fn violated(self, value: f64, threshold: f64) -> bool {
        match self {
            Direction::Under => value < threshold,
            Direction::Over => value > threshold,
        }
    }
}

/// Definite-time voltage element on a bus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoltageRelaySpec {
    pub bus: String,
    pub threshold_pu: f64,
    pub delay_s: f64,
    #[serde(default)]
    pub direction: Direction,
    pub target: RelayTarget,
}

impl VoltageRelaySpec {
    /// Fast under-voltage element: below 0.45 pu for 0.16 s.
    pub fn uv2(bus: impl Into<String>, target: RelayTarget) -> Self {
        Self {
            bus: bus.into(),
            threshold_pu: 0.45,
            delay_s: 0.16,
            direction: Direction::Under,
            target,
        }
    }

    /// Slow under-voltage element: below 0.70 pu for 2 s.
    pub fn uv1(bus: impl Into<String>, target: RelayTarget) -> Self {
        Self {
            threshold_pu: 0.70,
            delay_s: 2.0,
            ..Self::uv2(bus, target)
        }
    }
}

/// Definite-time frequency element on the system frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyRelaySpec {
    pub threshold_hz: f64,
    pub delay_s: f64,
    #[serde(default)]
    pub direction: Direction,
    pub target: RelayTarget,
    #[serde(default)]
    pub enabled: bool,
}

/// Generic definite-time step: the timer measures how long the condition
/// has held since the first violating sample, and the element trips once it
/// reaches `delay_s`. Any compliant sample resets the timer.
pub fn threshold_step(
    id: &str,
    state: &mut RelayState,
    violated: bool,
    delay_s: f64,
    target: &RelayTarget,
    dt: f64,
    now: f64,
) -> Option<TripCommand> {
    if state.latched {
        return None;
    }
    if !violated {
        state.dropout();
        return None;
    }
    if state.picked_up {
        state.timer_s += dt;
    } else {
        state.picked_up = true;
        state.timer_s = 0.0;
    }
    (state.timer_s >= delay_s - TIME_EPS).then(|| state.latch(id, target, now))
}

pub fn uv_step(
    id: &str,
    spec: &VoltageRelaySpec,
    state: &mut RelayState,
    v_pu: f64,
    dt: f64,
    now: f64,
) -> Option<TripCommand> {
    let violated = spec.direction.violated(v_pu, spec.threshold_pu);
    threshold_step(id, state, violated, spec.delay_s, &spec.target, dt, now)
}

impl FrequencyRelaySpec {
    pub fn step(&self, id: &str, state: &mut RelayState, hz: f64, dt: f64, now: f64) -> Option<TripCommand> {
        if !self.enabled {
            return None;
        }
        let violated = self.direction.violated(hz, self.threshold_hz);
        threshold_step(id, state, violated, self.delay_s, &self.target, dt, now)
    }
}
