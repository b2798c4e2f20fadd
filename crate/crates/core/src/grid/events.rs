use num_complex::Complex64;

use super::model::{GridModel, SourceKind};
use super::network::source_connected;
use super::state::{ActiveFault, DynamicState};
use super::GridError;
use crate::event_log::{EventKind, EventLog};

/// Default shunt impedance standing in for a bolted fault.
pub const BOLTED_FAULT_PU: f64 = 1e-4;

/// A discrete change applied to the electrical layer at a step boundary.
#[derive(Debug, Clone, PartialEq)]
pub enum GridEvent {
    Fault { bus: String, impedance: Complex64 },
    ClearFault { bus: String },
    BreakerOpen(String),
    BreakerClose(String),
    LoadShed(String),
    LoadRestore(String),
    SetpointChange {
        source: String,
        p_kw: Option<f64>,
        q_kvar: Option<f64>,
    },
    /// Disconnection of a source by its own protection.
    SourceTrip { source: String, relay: String },
}

/// Whether the reference genset is cut off from every utility source.
pub fn islanded_now(model: &GridModel, state: &DynamicState) -> bool {
    let Some(gen) = model.reference_genset() else {
        return false;
    };
    let n = model.buses.len();
    let mut adj = vec![Vec::new(); n];
    for br in &model.branches {
        if br.breaker.is_none_or(|b| state.breaker_closed[b]) {
            adj[br.from].push(br.to);
            adj[br.to].push(br.from);
        }
    }
    let mut seen = vec![false; n];
    let mut stack = vec![model.sources[gen].bus];
    seen[model.sources[gen].bus] = true;
    while let Some(b) = stack.pop() {
        for &m in &adj[b] {
            if !std::mem::replace(&mut seen[m], true) {
                stack.push(m);
            }
        }
    }
    !model.sources.iter().enumerate().any(|(i, s)| {
        matches!(s.kind, SourceKind::Utility(_)) && seen[s.bus] && source_connected(model, state, i)
    })
}

fn unknown(what: &str, id: &str) -> GridError {
    GridError::UnknownTarget(format!("{what} `{id}`"))
}

/// Applies `event` at `state.time_s`, logging it.
pub fn apply_event(
    model: &GridModel,
    state: &mut DynamicState,
    event: &GridEvent,
    log: &mut EventLog,
) -> Result<(), GridError> {
    let t = state.time_s;
    let was_islanded = islanded_now(model, state);
    match event {
        GridEvent::Fault { bus, impedance } => {
            let b = model.bus_index(bus).ok_or_else(|| unknown("bus", bus))?;
            if impedance.norm() <= 0.0 {
                return Err(GridError::InvalidParameter {
                    element: bus.clone(),
                    field: "impedance",
                    reason: "fault shunt impedance must be positive",
                });
            }
            state.faults.retain(|f| f.bus != b);
            state.faults.push(ActiveFault {
                bus: b,
                impedance: *impedance,
            });
            log.push(t, EventKind::FaultApplied { bus: bus.clone() });
        }
        GridEvent::ClearFault { bus } => {
            let b = model.bus_index(bus).ok_or_else(|| unknown("bus", bus))?;
            state.faults.retain(|f| f.bus != b);
            log.push(t, EventKind::FaultCleared { bus: bus.clone() });
        }
        GridEvent::BreakerOpen(id) | GridEvent::BreakerClose(id) => {
            let b = model.breaker_index(id).ok_or_else(|| unknown("breaker", id))?;
            let close = matches!(event, GridEvent::BreakerClose(_));
            if state.breaker_closed[b] != close {
                state.breaker_closed[b] = close;
                log.push(
                    t,
                    if close {
                        EventKind::BreakerClosed { breaker: id.clone() }
                    } else {
                        EventKind::BreakerOpened { breaker: id.clone() }
                    },
                );
            }
        }
        GridEvent::LoadShed(id) | GridEvent::LoadRestore(id) => {
            let l = model.load_index(id).ok_or_else(|| unknown("load", id))?;
            let restore = matches!(event, GridEvent::LoadRestore(_));
            let ls = &mut state.loads[l];
            if ls.connected != restore {
                ls.connected = restore;
                if !restore {
                    ls.p_kw = 0.0;
                    ls.q_kvar = 0.0;
                }
                log.push(
                    t,
                    if restore {
                        EventKind::LoadRestored { load: id.clone() }
                    } else {
                        EventKind::LoadShed { load: id.clone() }
                    },
                );
            }
        }
        GridEvent::SetpointChange { source, p_kw, q_kvar } => {
            let s = model.source_index(source).ok_or_else(|| unknown("source", source))?;
            let (p, q) = match &model.sources[s].kind {
                SourceKind::Inverter(_) => {
                    let inv = state.inverter_mut(s).expect("inverter state");
                    if let Some(p) = p_kw {
                        inv.p_set_kw = *p;
                    }
                    if let Some(q) = q_kvar {
                        inv.q_set_kvar = *q;
                    }
                    (inv.p_set_kw, inv.q_set_kvar)
                }
                SourceKind::Genset(spec) => {
                    let rated = spec.rated_kw;
                    let g = state.genset_mut(s).expect("genset state");
                    if let Some(p) = p_kw {
                        g.power_ref_pu = p / rated;
                    }
                    (g.power_ref_pu * rated, 0.0)
                }
                SourceKind::Utility(_) => {
                    return Err(GridError::UnknownTarget(format!(
                        "utility `{source}` has no setpoint"
                    )))
                }
            };
            log.push(
                t,
                EventKind::SetpointChanged {
                    source: source.clone(),
                    p_kw: p,
                    q_kvar: q,
                },
            );
        }
        GridEvent::SourceTrip { source, relay } => {
            let s = model.source_index(source).ok_or_else(|| unknown("source", source))?;
            if state.sources[s].online {
                state.sources[s].online = false;
                log.push(
                    t,
                    EventKind::SourceTripped {
                        source: source.clone(),
                        relay: relay.clone(),
                    },
                );
            }
        }
    }
    let islanded = islanded_now(model, state);
    if islanded != was_islanded {
        log.push(t, if islanded { EventKind::Islanded } else { EventKind::Reconnected });
    }
    state.islanded = islanded;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::fixtures::*;
    use crate::grid::model::*;
    use crate::grid::network::NetworkSolver;
    use crate::grid::dynamics::initialize;

    fn microgrid() -> GridModel {
        let mut ut = UtilitySpec::new("PCC");
        ut.breaker = Some("PCC".into());
        let mut g = GensetSpec::new("PCC", 1000.0);
        g.p_ref_kw = 800.0;
        let mut spec = network(
            &["PCC", "RES"],
            vec![line("L", "PCC", "RES", 0.01, 0.05)],
            vec![
                ("gen", SourceSpec::Genset(g)),
                ("grid", SourceSpec::Utility(ut)),
                ("pv", SourceSpec::Inverter(InverterSpec::new("RES", 1000.0, 200.0, 0.0))),
            ],
            vec![("res", load("RES", 300.0, 0.0))],
        );
        spec.breakers.insert("PCC".into(), BreakerSpec::default());
        build_network(&spec).unwrap()
    }

    #[test]
    fn opening_pcc_islands() {
        let m = microgrid();
        let (mut st, _) = initialize(&m, &mut NetworkSolver::new()).unwrap();
        let mut log = EventLog::new();
        st.time_s = 10.0;
        apply_event(&m, &mut st, &GridEvent::BreakerOpen("PCC".into()), &mut log).unwrap();
        assert!(st.islanded);
        assert_eq!(log.first_time(|k| matches!(k, EventKind::Islanded)), Some(10.0));
        let sol = NetworkSolver::new().solve(&m, &st).unwrap();
        assert!(!sol.source_connected[1]);
        assert_eq!(sol.source_power[1], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn shedding_drops_served_load_in_one_step() {
        let m = microgrid();
        let (mut st, _) = initialize(&m, &mut NetworkSolver::new()).unwrap();
        assert!((st.loads[0].p_kw - 300.0).abs() < 1e-6);
        apply_event(&m, &mut st, &GridEvent::LoadShed("res".into()), &mut EventLog::new()).unwrap();
        let sol = NetworkSolver::new().solve(&m, &st).unwrap();
        st.absorb(&m, &sol);
        assert_eq!(st.loads[0].p_kw, 0.0);
    }

    #[test]
    fn doubled_setpoint_raises_inverter_current() {
        let m = microgrid();
        let mut solver = NetworkSolver::new();
        let (mut st, sol0) = initialize(&m, &mut solver).unwrap();
        let i0 = sol0.source_current[2].norm();
        apply_event(
            &m,
            &mut st,
            &GridEvent::SetpointChange { source: "pv".into(), p_kw: Some(400.0), q_kvar: None },
            &mut EventLog::new(),
        )
        .unwrap();
        for _ in 0..300 {
            st = crate::grid::step_dynamics_with(&m, &st, 1e-3, &mut solver, None).unwrap();
        }
        let i1 = solver.solve(&m, &st).unwrap().source_current[2].norm();
        assert!((i1 / i0 - 2.0).abs() < 0.02, "{i0} → {i1}");
    }

    #[test]
    fn unknown_target_is_rejected() {
        let m = microgrid();
        let (mut st, _) = initialize(&m, &mut NetworkSolver::new()).unwrap();
        let err = apply_event(&m, &mut st, &GridEvent::BreakerOpen("nope".into()), &mut EventLog::new());
        assert!(matches!(err, Err(GridError::UnknownTarget(_))));
    }
}
