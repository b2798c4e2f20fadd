use serde::{Deserialize, Serialize};

use super::{RelayState, RelayTarget, TripCommand, TIME_EPS};

/// Inverse-time characteristic `t(M) = TDS·(A/(M^p − 1) + B)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Curve {
    #[default]
    ModeratelyInverse,
    VeryInverse,
    ExtremelyInverse,
    Custom { a: f64, b: f64, p: f64 },
}

impl Curve {
    /// `(A, B, p)` per IEEE C37.112.
    pub fn constants(self) -> (f64, f64, f64) {
        match self {
            Curve::ModeratelyInverse => (0.0515, 0.1140, 0.02),
            Curve::VeryInverse => (19.61, 0.491, 2.0),
            Curve::ExtremelyInverse => (28.2, 0.1217, 2.0),
            Curve::Custom { a, b, p } => (a, b, p),
        }
    }
}

/// Operate time at multiple of pickup `m`; `None` at or below pickup.
pub fn trip_time(curve: Curve, tds: f64, m: f64) -> Option<f64> {
    if m <= 1.0 {
        return None;
    }
    let (a, b, p) = curve.constants();
    Some(tds * (a / (m.powf(p) - 1.0) + b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OvercurrentRelaySpec {
    /// Branch whose current is measured.
    pub branch: String,
    pub breaker: String,
    /// Pickup current, pu of the CT rating.
    pub pickup_pu: f64,
    pub tds: f64,
    #[serde(default)]
    pub curve: Curve,
    /// CT rating in kVA at nominal voltage; defaults to the system base.
    #[serde(default)]
    pub ct_rating_kva: Option<f64>,
}

impl OvercurrentRelaySpec {
    pub fn new(branch: impl Into<String>, breaker: impl Into<String>, pickup_pu: f64, tds: f64) -> Self {
        Self {
            branch: branch.into(),
            breaker: breaker.into(),
            pickup_pu,
            tds,
            curve: Curve::default(),
            ct_rating_kva: None,
        }
    }
}

/// Advances an overcurrent element by one step on current `i_pu` (pu of CT
/// rating).
///
/// The element picks up on the first sample with `M = I/Ip > 1`; each
/// later sample still above pickup adds `dt / t(M)` to the trip integral,
/// which trips at 1. Dropping to `M ≤ 1` resets the integral instantly.
pub fn oc_step(
    id: &str,
    spec: &OvercurrentRelaySpec,
    state: &mut RelayState,
    i_pu: f64,
    dt: f64,
    now: f64,
) -> Option<TripCommand> {
    if state.latched {
        return None;
    }
    let Some(t) = trip_time(spec.curve, spec.tds, i_pu / spec.pickup_pu) else {
        state.dropout();
        return None;
    };
    if !state.picked_up {
        state.picked_up = true;
        return None;
    }
    state.integral += dt / t;
    if state.integral >= 1.0 - TIME_EPS {
        state.integral = 1.0;
        return Some(state.latch(id, &RelayTarget::Breaker(spec.breaker.clone()), now));
    }
    None
}
