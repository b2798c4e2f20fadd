//! Fixed-step co-simulation of the electrical, protection, control and
//! communication layers.

mod compare;
mod summary;

pub use compare::{compare_runs, ChannelDiff, CompareError, DiffReport};
pub use summary::{summarize, Crossings, Summary, SummaryError, TripRecord, CROSSING_THRESHOLDS_HZ};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::control::{Mgc, Observations, Outstation, PhysicalAction, PointBinding, PointKind};
use crate::cybernet::{
    receive, CommandCode, CyberNet, CyberTopology, DosMode, MitmRule, NetError, NodeSpec, TraceEntry, Window,
};
use crate::event_log::{EventKind, EventLog};
use crate::grid::model::GridModel;
use crate::grid::{
    apply_event, build_network, initialize, step_dynamics_with, DynamicState, GridError, GridEvent, NetworkSolution,
    NetworkSolver, SourceKind,
};
use crate::protection::{
    breaker_step, oc_step, uv_step, BreakerAction, BreakerCommand, BreakerState, RelayState, RelayTarget, TripCommand,
};
use crate::scenario::{AttackSpec, EventAction, RelayElement, Scenario, ScenarioError, TripPath};

/// Slack for "due at or before now" comparisons on the time grid.
const STEP_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    Blackout { time_s: f64, reason: String },
    SolverFailure { time_s: f64, message: String },
}

/// Recorded time series and event log of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub scenario: String,
    pub dt_s: f64,
    pub duration_s: f64,
    pub time_s: Vec<f64>,
    /// Channel names, in CSV column order after `time_s`.
    pub columns: Vec<String>,
    /// One series per column, each as long as `time_s`.
    pub data: Vec<Vec<f64>>,
    pub log: EventLog,
    pub status: Termination,
    pub trace: Vec<TraceEntry>,
}

impl SimResult {
    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().position(|c| c == name).map(|i| self.data[i].as_slice())
    }

    pub fn frequency(&self) -> &[f64] {
        self.channel("freq_hz").expect("frequency is always recorded")
    }

    pub fn len(&self) -> usize {
        self.time_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time_s.is_empty()
    }

    /// Sample index at or after `t`.
    pub fn index_at(&self, t: f64) -> Option<usize> {
        self.time_s.iter().position(|&x| x >= t - STEP_EPS)
    }

    pub fn is_blackout(&self) -> bool {
        matches!(self.status, Termination::Blackout { .. })
    }
}

#[derive(Debug, Clone)]
enum Measure {
    Branch { branch: usize, scale: f64 },
    Bus(usize),
    Frequency,
}

#[derive(Debug, Clone)]
struct Relay {
    id: String,
    element: RelayElement,
    measure: Measure,
    path: TripPath,
    /// Outstation and point that own the target breaker, for networked trips.
    remote: Option<(String, u16)>,
}

#[derive(Debug, Clone)]
struct Scripted {
    at_s: f64,
    action: EventAction,
}

#[derive(Debug, Clone)]
struct BreakerDelay {
    breaker: usize,
    start_s: f64,
    end_s: f64,
    delay_s: f64,
}

#[derive(Debug, Clone)]
struct Cyber {
    net: CyberNet,
    outstations: Vec<Outstation>,
    mgc: Mgc,
    pcc: Option<usize>,
}

/// A scenario resolved into run-time components.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub name: String,
    pub model: GridModel,
    pub dt_s: f64,
    pub duration_s: f64,
    relays: Vec<Relay>,
    events: Vec<Scripted>,
    breaker_delays: Vec<BreakerDelay>,
    cyber: Option<Cyber>,
}

fn invalid(key: &str, message: impl std::fmt::Display) -> ScenarioError {
    ScenarioError::validation(key, message.to_string())
}

fn net_err(key: &str) -> impl Fn(NetError) -> ScenarioError + '_ {
    move |e| invalid(key, e)
}

/// Builds every run-time component of a scenario, validating cross
/// references between sections.
pub fn prepare(s: &Scenario) -> Result<Prepared, ScenarioError> {
    let model = build_network(&s.network).map_err(|e| invalid("network", e))?;

    let mut cyber = None;
    if let Some(c) = &s.cyber {
        let topology = CyberTopology {
            master: c.master.clone(),
            outstations: c
                .outstations
                .iter()
                .map(|o| NodeSpec {
                    name: o.name.clone(),
                    address: o.address,
                })
                .collect(),
            link_defaults: c.link_defaults,
            link_overrides: c.links.clone(),
        };
        let mut net = CyberNet::new(&topology).map_err(net_err("cyber"))?;
        let outstations: Vec<Outstation> = c
            .outstations
            .iter()
            .map(|o| Outstation {
                name: o.name.clone(),
                address: o.address,
                points: o.points.clone(),
            })
            .collect();
        let mgc = Mgc::new(s.policy.clone(), c.master.address, &model, &outstations).map_err(|e| invalid("policy", e))?;
        for (i, a) in s.attacks.iter().enumerate() {
            let key = format!("attacks.{i}");
            match a {
                AttackSpec::DosFixedDelay { link, start_s, end_s, delay_s } => {
                    let w = Window::new(*start_s, *end_s).map_err(net_err(&key))?;
                    net.inject_dos(link, w, DosMode::FixedDelay { delay_s: *delay_s }).map_err(net_err(&key))?;
                }
                AttackSpec::DosFlood { link, start_s, end_s, rate_fps } => {
                    let w = Window::new(*start_s, *end_s).map_err(net_err(&key))?;
                    net.inject_dos(link, w, DosMode::Flood { rate_fps: *rate_fps }).map_err(net_err(&key))?;
                }
                AttackSpec::MitmRewrite { link, start_s, end_s, function, point, code, new_code, new_value } => {
                    let rule = MitmRule {
                        window: Window::new(*start_s, *end_s).map_err(net_err(&key))?,
                        function: (*function).into(),
                        point: *point,
                        code: code.map(CommandCode::from),
                        new_code: new_code.map(CommandCode::from),
                        new_value: *new_value,
                    };
                    net.mitm_rewrite(link, rule).map_err(net_err(&key))?;
                }
                AttackSpec::BreakerDelay { .. } => {}
            }
        }
        let pcc = s.policy.pcc_breaker.as_ref().and_then(|b| model.breaker_index(b));
        cyber = Some(Cyber { net, outstations, mgc, pcc });
    } else if let Some(i) = s.attacks.iter().position(|a| !matches!(a, AttackSpec::BreakerDelay { .. })) {
        return Err(invalid(&format!("attacks.{i}"), "network attacks need a [cyber] section"));
    }

    let breaker_delays = s
        .attacks
        .iter()
        .filter_map(|a| match a {
            AttackSpec::BreakerDelay { breaker, start_s, end_s, delay_s } => Some(BreakerDelay {
                breaker: model.breaker_index(breaker)?,
                start_s: *start_s,
                end_s: end_s.unwrap_or(f64::INFINITY),
                delay_s: *delay_s,
            }),
            _ => None,
        })
        .collect();

    let mut relays = Vec::new();
    for (id, r) in &s.relays {
        let key = format!("relays.{id}");
        let measure = match &r.element {
            RelayElement::Overcurrent(oc) => Measure::Branch {
                branch: model.branch_index(&oc.branch).ok_or_else(|| invalid(&key, "unknown branch"))?,
                scale: oc.ct_rating_kva.map_or(1.0, |ct| model.base_mva * 1000.0 / ct),
            },
            RelayElement::Voltage(v) => Measure::Bus(model.bus_index(&v.bus).ok_or_else(|| invalid(&key, "unknown bus"))?),
            RelayElement::Frequency(_) => Measure::Frequency,
        };
        let remote = match (r.trip_path, target_of(&r.element)) {
            (TripPath::Networked, RelayTarget::Breaker(b)) => cyber.as_ref().and_then(|c| {
                c.outstations.iter().find_map(|o| {
                    o.points
                        .iter()
                        .find(|p| p.kind == PointKind::Breaker && p.target == b)
                        .map(|p| (o.name.clone(), p.index))
                })
            }),
            _ => None,
        };
        if r.trip_path == TripPath::Networked && remote.is_none() {
            return Err(invalid(&format!("{key}.trip_path"), "target breaker is not bound to an outstation"));
        }
        relays.push(Relay {
            id: id.clone(),
            element: r.element.clone(),
            measure,
            path: r.trip_path,
            remote,
        });
    }

    let mut events = Vec::new();
    for e in &s.events {
        if matches!(e.action, EventAction::Command { .. }) && cyber.is_none() {
            return Err(invalid("events", "command events need a [cyber] section"));
        }
        events.push(Scripted {
            at_s: e.at_s,
            action: e.action.clone(),
        });
        if let EventAction::Fault { bus, clear_at_s: Some(c), .. } = &e.action {
            events.push(Scripted {
                at_s: *c,
                action: EventAction::ClearFault { bus: bus.clone() },
            });
        }
    }
    events.sort_by(|a, b| a.at_s.total_cmp(&b.at_s));

    Ok(Prepared {
        name: s.scenario.name.clone(),
        model,
        dt_s: s.scenario.dt_s,
        duration_s: s.scenario.duration_s,
        relays,
        events,
        breaker_delays,
        cyber,
    })
}

fn target_of(e: &RelayElement) -> RelayTarget {
    match e {
        RelayElement::Overcurrent(oc) => RelayTarget::Breaker(oc.breaker.clone()),
        RelayElement::Voltage(v) => v.target.clone(),
        RelayElement::Frequency(f) => f.target.clone(),
    }
}

fn element_name(e: &RelayElement) -> &'static str {
    match e {
        RelayElement::Overcurrent(_) => "overcurrent",
        RelayElement::Voltage(_) => "voltage",
        RelayElement::Frequency(_) => "frequency",
    }
}

/// Names of the recorded channels, in CSV order after `time_s`.
pub fn channel_names(model: &GridModel) -> Vec<String> {
    let mut cols = vec!["freq_hz".to_string()];
    cols.extend(model.buses.iter().map(|b| format!("v_{}_pu", b.id)));
    for s in &model.sources {
        cols.push(format!("p_{}_kw", s.id));
        cols.push(format!("q_{}_kvar", s.id));
    }
    cols.push("genset_loading_pu".to_string());
    cols
}

enum Stop {
    Blackout(String),
    Failure(String),
}

impl From<GridError> for Stop {
    fn from(e: GridError) -> Self {
        match e {
            GridError::NoConvergence { .. } => Stop::Blackout(format!("network collapse: {e}")),
            other => Stop::Failure(other.to_string()),
        }
    }
}

struct Run<'a> {
    p: &'a Prepared,
    state: DynamicState,
    solver: NetworkSolver,
    log: EventLog,
    breakers: Vec<BreakerState>,
    relay_states: Vec<RelayState>,
    cyber: Option<Cyber>,
    next_event: usize,
    /// Source trips decided by relays, applied at the next step boundary.
    pending_source_trips: Vec<TripCommand>,
    overload_since: Vec<Option<f64>>,
    /// Whether anything changed after the last network solution.
    dirty: bool,
}

impl Run<'_> {
    fn apply(&mut self, event: GridEvent) -> Result<(), Stop> {
        apply_event(&self.p.model, &mut self.state, &event, &mut self.log)?;
        self.dirty = true;
        Ok(())
    }

    fn set_breaker_position(&mut self, b: usize, action: BreakerAction) -> Result<(), Stop> {
        let id = self.p.model.breakers[b].id.clone();
        self.apply(match action {
            BreakerAction::Open => GridEvent::BreakerOpen(id),
            BreakerAction::Close => GridEvent::BreakerClose(id),
        })
    }

    /// Hands a command to breaker `b`, issued at `now`.
    fn command_breaker(&mut self, b: usize, action: BreakerAction, now: f64) -> Result<(), Stop> {
        let attack: f64 = self
            .p
            .breaker_delays
            .iter()
            .filter(|d| d.breaker == b && now >= d.start_s - STEP_EPS && now < d.end_s - STEP_EPS)
            .map(|d| d.delay_s)
            .sum();
        let st = &mut self.breakers[b];
        let accepted = st.pending.is_none();
        st.attack_delay_s = attack;
        let changed = breaker_step(&self.p.model.breakers[b], st, now, Some(BreakerCommand { action, issued_s: now }));
        if accepted {
            let due_s = self.breakers[b].pending.map_or(now, |p| p.due_s);
            self.log.push(
                now,
                EventKind::BreakerCommand {
                    breaker: self.p.model.breakers[b].id.clone(),
                    action: match action {
                        BreakerAction::Open => "open",
                        BreakerAction::Close => "close",
                    }
                    .into(),
                    due_s,
                },
            );
        }
        if let Some(a) = changed {
            self.set_breaker_position(b, a)?;
        }
        Ok(())
    }

    fn apply_physical(&mut self, action: PhysicalAction, now: f64) -> Result<(), Stop> {
        match action {
            PhysicalAction::ShedLoad(l) => self.apply(GridEvent::LoadShed(l)),
            PhysicalAction::RestoreLoad(l) => self.apply(GridEvent::LoadRestore(l)),
            PhysicalAction::Setpoint { source, p_kw, q_kvar } => {
                self.apply(GridEvent::SetpointChange { source, p_kw, q_kvar })
            }
            PhysicalAction::Breaker { breaker, action } => {
                let b = self.p.model.breaker_index(&breaker).expect("bindings validated");
                self.command_breaker(b, action, now)
            }
        }
    }

    fn measure(&self, binding: &PointBinding) -> f64 {
        let m = &self.p.model;
        match binding.kind {
            PointKind::Load => m.load_index(&binding.target).map_or(f64::NAN, |i| self.state.loads[i].p_kw),
            PointKind::Breaker => m
                .breaker_index(&binding.target)
                .map_or(f64::NAN, |i| f64::from(u8::from(self.state.breaker_closed[i]))),
            PointKind::Source => m.source_index(&binding.target).map_or(f64::NAN, |i| self.state.sources[i].p_kw),
        }
    }

    /// Phase 1: frames due by `now` reach their receivers.
    fn deliver(&mut self, now: f64) -> Result<(), Stop> {
        let Some(mut cyber) = self.cyber.take() else { return Ok(()) };
        let result = (|| {
            for d in cyber.net.deliver_due(now) {
                let Some(frame) = receive(&d, &mut self.log, now) else { continue };
                if d.dst == cyber.net.master().name {
                    cyber.mgc.on_frame(&frame);
                    continue;
                }
                let Some(os) = cyber.outstations.iter().find(|o| o.name == d.dst).cloned() else { continue };
                if frame.dst != os.address {
                    self.log.push(
                        now,
                        EventKind::FrameRejected {
                            link: d.link.clone(),
                            reason: format!("addressed to {}, not {}", frame.dst, os.address),
                        },
                    );
                    continue;
                }
                let mut log = std::mem::take(&mut self.log);
                let applied = os.apply(&frame, now, |b| self.measure(b), &mut log);
                self.log = log;
                for a in applied.actions {
                    self.apply_physical(a, now)?;
                }
                if let Some(resp) = applied.response {
                    let master = cyber.net.master().name.clone();
                    send(&mut cyber.net, &os.name, &master, resp, now, &mut self.log)?;
                }
            }
            Ok(())
        })();
        self.cyber = Some(cyber);
        result
    }

    /// Phase 2: scripted events and source trips decided last step.
    fn scripted(&mut self, now: f64) -> Result<(), Stop> {
        for trip in std::mem::take(&mut self.pending_source_trips) {
            if let RelayTarget::Source(source) = trip.target {
                self.apply(GridEvent::SourceTrip { source, relay: trip.relay })?;
            }
        }
        while let Some(e) = self.p.events.get(self.next_event).filter(|e| e.at_s <= now + STEP_EPS) {
            self.next_event += 1;
            let event = match e.action.clone() {
                EventAction::Fault { bus, impedance_pu, .. } => GridEvent::Fault {
                    bus,
                    impedance: Complex64::new(impedance_pu, 0.0),
                },
                EventAction::ClearFault { bus } => GridEvent::ClearFault { bus },
                EventAction::BreakerOpen { breaker } | EventAction::BreakerClose { breaker } => {
                    let b = self.p.model.breaker_index(&breaker).expect("validated");
                    let close = matches!(e.action, EventAction::BreakerClose { .. });
                    self.breakers[b].closed = close;
                    self.breakers[b].pending = None;
                    if close {
                        GridEvent::BreakerClose(breaker)
                    } else {
                        GridEvent::BreakerOpen(breaker)
                    }
                }
                EventAction::LoadShed { load } => GridEvent::LoadShed(load),
                EventAction::LoadRestore { load } => GridEvent::LoadRestore(load),
                EventAction::Setpoint { source, p_kw, q_kvar } => GridEvent::SetpointChange { source, p_kw, q_kvar },
                EventAction::Command { outstation, point, code, value } => {
                    let cyber = self.cyber.as_mut().expect("validated");
                    cyber
                        .mgc
                        .queue_command(&outstation, point, code.into(), value)
                        .map_err(|e| Stop::Failure(e.to_string()))?;
                    continue;
                }
            };
            self.apply(event)?;
        }
        Ok(())
    }

    /// Phase 3: breaker operations falling due.
    fn breakers_due(&mut self, now: f64) -> Result<(), Stop> {
        for b in 0..self.breakers.len() {
            if let Some(a) = breaker_step(&self.p.model.breakers[b], &mut self.breakers[b], now, None) {
                self.set_breaker_position(b, a)?;
            }
        }
        Ok(())
    }

    /// Phase 5: relays on the fresh solution; trips routed to their targets.
    fn relays(&mut self, sol: &NetworkSolution, now: f64) -> Result<(), Stop> {
        let dt = self.p.dt_s;
        let hz = self.state.frequency_hz(&self.p.model);
        for (i, r) in self.p.relays.iter().enumerate() {
            let st = &mut self.relay_states[i];
            let trip = match (&r.element, &r.measure) {
                (RelayElement::Overcurrent(spec), Measure::Branch { branch, scale }) => {
                    oc_step(&r.id, spec, st, sol.branch_current[*branch].norm() * scale, dt, now)
                }
                (RelayElement::Voltage(spec), Measure::Bus(bus)) => {
                    uv_step(&r.id, spec, st, sol.voltages[*bus].norm(), dt, now)
                }
                (RelayElement::Frequency(spec), Measure::Frequency) => spec.step(&r.id, st, hz, dt, now),
                _ => unreachable!("measure matches element"),
            };
            let Some(trip) = trip else { continue };
            self.log.push(
                now,
                EventKind::RelayTrip {
                    relay: r.id.clone(),
                    element: element_name(&r.element).into(),
                },
            );
            match (&trip.target, &r.remote) {
                (RelayTarget::Breaker(_), Some((os, point))) if r.path == TripPath::Networked => {
                    let cyber = self.cyber.as_mut().expect("networked trips need the cyber layer");
                    cyber
                        .mgc
                        .queue_command(os, *point, CommandCode::Trip, 0.0)
                        .map_err(|e| Stop::Failure(e.to_string()))?;
                }
                (RelayTarget::Breaker(b), _) => {
                    let b = self.p.model.breaker_index(b).expect("validated");
                    self.command_breaker(b, BreakerAction::Open, now)?;
                }
                (RelayTarget::Source(_), _) => self.pending_source_trips.push(trip),
            }
        }
        Ok(())
    }

    /// Phase 6: the controller's step, with its frames handed to the network.
    fn control(&mut self, now: f64) -> Result<(), Stop> {
        let Some(mut cyber) = self.cyber.take() else { return Ok(()) };
        let m = &self.p.model;
        let obs = Observations {
            pcc_closed: cyber.pcc.is_none_or(|b| self.state.breaker_closed[b]),
            generation_kw: m
                .sources
                .iter()
                .zip(&self.state.sources)
                .filter(|(_, s)| s.online)
                .map(|(spec, _)| spec.capacity_kw())
                .sum(),
            frequency_hz: self.state.frequency_hz(m),
        };
        let out = cyber.mgc.step(&obs, now, &mut self.log);
        let master = cyber.net.master().name.clone();
        let result = out
            .into_iter()
            .try_for_each(|o| send(&mut cyber.net, &master, &o.dst, o.frame, now, &mut self.log));
        self.cyber = Some(cyber);
        result
    }

    /// Overload supervision; returns a blackout reason when tripped.
    fn overload(&mut self, now: f64) -> Option<String> {
        for (i, src) in self.p.model.sources.iter().enumerate() {
            let SourceKind::Genset(g) = &src.kind else { continue };
            let s = &self.state.sources[i];
            let loading = if s.online { s.p_kw / g.rated_kw } else { 0.0 };
            if loading > g.overload_limit_pu {
                let since = *self.overload_since[i].get_or_insert(now);
                if now - since > g.overload_duration_s + STEP_EPS {
                    return Some(format!(
                        "genset `{}` above {:.2} pu of rating for more than {} s",
                        src.id, g.overload_limit_pu, g.overload_duration_s
                    ));
                }
            } else {
                self.overload_since[i] = None;
            }
        }
        None
    }
}

fn send(net: &mut CyberNet, src: &str, dst: &str, frame: crate::cybernet::Frame, now: f64, log: &mut EventLog) -> Result<(), Stop> {
    match net.send(src, dst, frame, now, log) {
        Ok(_) | Err(NetError::QueueOverflow(_)) => Ok(()),
        Err(e) => Err(Stop::Failure(e.to_string())),
    }
}

fn record(model: &GridModel, state: &DynamicState, data: &mut [Vec<f64>]) {
    let mut c = 0;
    let mut push = |v: f64| {
        data[c].push(v);
        c += 1;
    };
    push(state.frequency_hz(model));
    for v in &state.bus_voltage {
        push(v.norm());
    }
    for s in &state.sources {
        push(s.p_kw);
        push(s.q_kvar);
    }
    push(state.genset_loading_pu(model));
}

/// Runs a validated scenario to completion, blackout or solver failure.
pub fn run_scenario(scenario: &Scenario) -> Result<SimResult, ScenarioError> {
    Ok(run_prepared(&prepare(scenario)?))
}

pub fn run_prepared(p: &Prepared) -> SimResult {
    let columns = channel_names(&p.model);
    let steps = (p.duration_s / p.dt_s + STEP_EPS).floor() as usize;
    let mut result = SimResult {
        scenario: p.name.clone(),
        dt_s: p.dt_s,
        duration_s: p.duration_s,
        time_s: Vec::with_capacity(steps + 1),
        data: vec![Vec::with_capacity(steps + 1); columns.len()],
        columns,
        log: EventLog::new(),
        status: Termination::Completed,
        trace: Vec::new(),
    };

    let mut solver = NetworkSolver::new();
    let state = match initialize(&p.model, &mut solver) {
        Ok((state, _)) => state,
        Err(e) => {
            result.status = Termination::SolverFailure {
                time_s: 0.0,
                message: e.to_string(),
            };
            return result;
        }
    };
    let mut run = Run {
        p,
        breakers: state.breaker_closed.iter().map(|&c| BreakerState::new(c)).collect(),
        state,
        solver,
        log: EventLog::new(),
        relay_states: vec![RelayState::default(); p.relays.len()],
        cyber: p.cyber.clone(),
        next_event: 0,
        pending_source_trips: Vec::new(),
        overload_since: vec![None; p.model.sources.len()],
        dirty: false,
    };

    let stop = (|| -> Result<(), (f64, Stop)> {
        for k in 0..=steps {
            let now = k as f64 * p.dt_s;
            run.state.time_s = now;
            let at = |s: Stop| (now, s);
            run.deliver(now).map_err(at)?;
            run.scripted(now).map_err(at)?;
            run.breakers_due(now).map_err(at)?;

            let sol = run.solver.solve(&p.model, &run.state).map_err(|e| at(e.into()))?;
            run.state.absorb(&p.model, &sol);
            run.dirty = false;

            run.relays(&sol, now).map_err(at)?;
            run.control(now).map_err(at)?;

            result.time_s.push(now);
            record(&p.model, &run.state, &mut result.data);

            if let Some(reason) = run.overload(now) {
                return Err((now, Stop::Blackout(reason)));
            }
            if k == steps {
                break;
            }
            let start = (!run.dirty).then_some(&sol);
            run.state =
                step_dynamics_with(&p.model, &run.state, p.dt_s, &mut run.solver, start).map_err(|e| at(e.into()))?;
        }
        Ok(())
    })();

    if let Err((t, stop)) = stop {
        result.status = match stop {
            Stop::Blackout(reason) => {
                run.log.push(t, EventKind::Blackout { reason: reason.clone() });
                Termination::Blackout { time_s: t, reason }
            }
            Stop::Failure(message) => Termination::SolverFailure { time_s: t, message },
        };
    }
    result.log = run.log;
    result.trace = run.cyber.map(|c| c.net.trace().to_vec()).unwrap_or_default();
    result
}
