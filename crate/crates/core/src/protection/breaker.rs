use super::TIME_EPS;
use crate::grid::model::Breaker;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BreakerAction {
    Open,
    Close,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BreakerCommand {
    pub action: BreakerAction,
    pub issued_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendingOperation {
    pub action: BreakerAction,
    pub due_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BreakerState {
    pub closed: bool,
    pub pending: Option<PendingOperation>,
    /// Extra operate delay injected by an attack.
    pub attack_delay_s: f64,
}

impl BreakerState {
    pub fn new(closed: bool) -> Self {
        Self {
            closed,
            pending: None,
            attack_delay_s: 0.0,
        }
    }
}

/// Advances a breaker to `now`.
///
/// A command schedules the operation at issue time + mechanical delay +
/// attack delay; commands arriving while one is pending are ignored. Returns
/// the action when the position actually changes.
pub fn breaker_step(
    spec: &Breaker,
    state: &mut BreakerState,
    now: f64,
    command: Option<BreakerCommand>,
) -> Option<BreakerAction> {
    if let (Some(cmd), None) = (command, state.pending) {
        state.pending = Some(PendingOperation {
            action: cmd.action,
            due_s: cmd.issued_s + spec.operate_delay_s + state.attack_delay_s.max(0.0),
        });
    }
    let op = state.pending.filter(|p| p.due_s <= now + TIME_EPS)?;
    state.pending = None;
    let close = op.action == BreakerAction::Close;
    (state.closed != close).then(|| {
        state.closed = close;
        op.action
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn brk() -> Breaker {
        Breaker {
            id: "B".into(),
            operate_delay_s: 0.05,
            initially_closed: true,
        }
    }

    /// Steps at `dt` with trip commands at `issues`; returns opening times.
    fn openings(dt: f64, attack: f64, issues: &[f64]) -> Vec<f64> {
        let b = brk();
        let mut st = BreakerState::new(true);
        st.attack_delay_s = attack;
        let mut out = Vec::new();
        let mut next = 0;
        for k in 0..(5.0 / dt) as usize {
            let t = k as f64 * dt;
            let cmd = (next < issues.len() && issues[next] <= t + 1e-12).then(|| {
                next += 1;
                BreakerCommand {
                    action: BreakerAction::Open,
                    issued_s: issues[next - 1],
                }
            });
            if breaker_step(&b, &mut st, t, cmd).is_some() {
                out.push(t);
            }
        }
        out
    }

    #[test]
    fn opens_after_mechanical_delay() {
        let o = openings(1e-3, 0.0, &[1.0]);
        assert_eq!(o.len(), 1);
        assert!((o[0] - 1.05).abs() < 1e-9);
    }

    #[test]
    fn attack_delay_adds_on() {
        let o = openings(1e-3, 2.0, &[1.0]);
        assert!((o[0] - 3.05).abs() < 1e-9);
    }

    #[test]
    fn duplicate_commands_are_idempotent() {
        let o = openings(1e-3, 0.0, &[1.0, 1.02]);
        assert_eq!(o.len(), 1);
        assert!((o[0] - 1.05).abs() < 1e-9);
        // A second trip after the breaker already opened changes nothing.
        assert_eq!(openings(1e-3, 0.0, &[1.0, 1.2]).len(), 1);
    }

    proptest! {
        #[test]
        fn opening_time_independent_of_dt(issue_ms in 0u32..3000, attack_ms in 0u32..2000) {
            let issue = issue_ms as f64 * 1e-3;
            let attack = attack_ms as f64 * 1e-3;
            let coarse = openings(1e-3, attack, &[issue]);
            let fine = openings(5e-4, attack, &[issue]);
            prop_assert_eq!(coarse.len(), 1);
            prop_assert!((coarse[0] - fine[0]).abs() <= 1e-3 + 1e-9);
        }
    }
}
