use std::collections::BTreeSet;

use super::{AttackSpec, EventAction, RelayElement, Scenario, ScenarioError, TripPath};
use crate::cybernet::link_name;
use crate::grid::model::LoadClass;
use crate::protection::{Curve, RelayTarget};

fn check(ok: bool, key: impl Into<String>, message: &str) -> Result<(), ScenarioError> {
    if ok {
        Ok(())
    } else {
        Err(ScenarioError::validation(key, message))
    }
}

/// Semantic checks beyond what the schema enforces, followed by a trial
/// construction of every run-time component.
pub fn validate(s: &Scenario) -> Result<(), ScenarioError> {
    let meta = &s.scenario;
    check(meta.duration_s > 0.0 && meta.duration_s.is_finite(), "scenario.duration_s", "must be positive")?;
    check(meta.dt_s > 0.0 && meta.dt_s <= meta.duration_s, "scenario.dt_s", "must be positive and at most duration_s")?;

    let net = &s.network;
    let mut buses = BTreeSet::new();
    for (i, b) in net.buses.iter().enumerate() {
        check(buses.insert(b.id.as_str()), format!("network.buses.{i}.id"), &format!("duplicate bus id `{}`", b.id))?;
    }
    for (id, l) in &net.loads {
        check(
            !(l.class == LoadClass::Critical && l.sheddable),
            format!("network.loads.{id}.sheddable"),
            "critical loads cannot be sheddable",
        )?;
        check(l.p_kw >= 0.0, format!("network.loads.{id}.p_kw"), "must be non-negative")?;
    }
    for (id, src) in &net.sources {
        if let crate::grid::SourceSpec::Genset(g) = src {
            check(g.overload_limit_pu >= 1.0, format!("network.sources.{id}.overload_limit_pu"), "must be at least 1")?;
            check(g.overload_duration_s >= 0.0, format!("network.sources.{id}.overload_duration_s"), "must be non-negative")?;
        }
        if let crate::grid::SourceSpec::Inverter(inv) = src {
            check(inv.current_limit >= 1.0, format!("network.sources.{id}.current_limit"), "must be at least 1")?;
            check(inv.filter_tc_s > 0.0, format!("network.sources.{id}.filter_tc_s"), "must be positive")?;
            for r in &inv.ride_through {
                check(s.relays.contains_key(r), format!("network.sources.{id}.ride_through"), &format!("unknown relay `{r}`"))?;
            }
        }
    }

    let breakers: BTreeSet<&str> = net.breakers.keys().map(String::as_str).collect();
    let known_breaker = |b: &str| breakers.contains(b);
    for (id, r) in &s.relays {
        let key = |f: &str| format!("relays.{id}.{f}");
        let target = match &r.element {
            RelayElement::Overcurrent(oc) => {
                check(net.branches.iter().any(|b| b.id == oc.branch), key("branch"), "unknown branch")?;
                check(oc.pickup_pu > 0.0, key("pickup_pu"), "must be positive")?;
                check(oc.tds > 0.0, key("tds"), "must be positive")?;
                if let Curve::Custom { p, .. } = oc.curve {
                    check(p > 0.0, key("curve"), "exponent must be positive")?;
                }
                check(oc.ct_rating_kva.is_none_or(|c| c > 0.0), key("ct_rating_kva"), "must be positive")?;
                RelayTarget::Breaker(oc.breaker.clone())
            }
            RelayElement::Voltage(v) => {
                check(buses.contains(v.bus.as_str()), key("bus"), "unknown bus")?;
                check(v.threshold_pu > 0.0, key("threshold_pu"), "must be positive")?;
                check(v.delay_s >= 0.0, key("delay_s"), "must be non-negative")?;
                v.target.clone()
            }
            RelayElement::Frequency(f) => {
                check(f.threshold_hz > 0.0, key("threshold_hz"), "must be positive")?;
                check(f.delay_s >= 0.0, key("delay_s"), "must be non-negative")?;
                f.target.clone()
            }
        };
        match &target {
            RelayTarget::Breaker(b) => check(known_breaker(b), key("target"), &format!("unknown breaker `{b}`"))?,
            RelayTarget::Source(src) => check(net.sources.contains_key(src), key("target"), &format!("unknown source `{src}`"))?,
        }
        if r.trip_path == TripPath::Networked {
            let RelayTarget::Breaker(b) = &target else {
                return Err(ScenarioError::validation(key("trip_path"), "only breaker trips can be networked"));
            };
            let bound = s.cyber.as_ref().is_some_and(|c| {
                c.outstations.iter().any(|o| {
                    o.points
                        .iter()
                        .any(|p| p.kind == crate::control::PointKind::Breaker && &p.target == b)
                })
            });
            check(bound, key("trip_path"), &format!("no outstation point is bound to breaker `{b}`"))?;
        }
    }

    let mut links = BTreeSet::new();
    if let Some(c) = &s.cyber {
        for o in &c.outstations {
            links.insert(link_name(&c.master.name, &o.name));
            links.insert(link_name(&o.name, &c.master.name));
        }
        for l in c.links.keys() {
            check(links.contains(l), format!("cyber.links.{l}"), "no such link")?;
        }
    }

    let horizon = meta.duration_s;
    for (i, e) in s.events.iter().enumerate() {
        let key = |f: &str| format!("events.{i}.{f}");
        check(e.at_s >= 0.0 && e.at_s < horizon, key("at_s"), "must lie in [0, duration_s)")?;
        match &e.action {
            EventAction::Fault { bus, impedance_pu, clear_at_s } => {
                check(buses.contains(bus.as_str()), key("bus"), "unknown bus")?;
                check(*impedance_pu > 0.0, key("impedance_pu"), "must be positive")?;
                if let Some(c) = clear_at_s {
                    check(*c > e.at_s, key("clear_at_s"), "must follow at_s")?;
                }
            }
            EventAction::ClearFault { bus } => check(buses.contains(bus.as_str()), key("bus"), "unknown bus")?,
            EventAction::BreakerOpen { breaker } | EventAction::BreakerClose { breaker } => {
                check(known_breaker(breaker), key("breaker"), "unknown breaker")?
            }
            EventAction::LoadShed { load } | EventAction::LoadRestore { load } => {
                check(net.loads.contains_key(load), key("load"), "unknown load")?
            }
            EventAction::Setpoint { source, p_kw, q_kvar } => {
                check(
                    matches!(net.sources.get(source), Some(crate::grid::SourceSpec::Inverter(_) | crate::grid::SourceSpec::Genset(_))),
                    key("source"),
                    "unknown or non-dispatchable source",
                )?;
                check(p_kw.is_some() || q_kvar.is_some(), key("p_kw"), "setpoint needs p_kw or q_kvar")?;
            }
            EventAction::Command { outstation, .. } => check(
                s.cyber.as_ref().is_some_and(|c| c.outstations.iter().any(|o| &o.name == outstation)),
                key("outstation"),
                "unknown outstation",
            )?,
        }
    }

    for (i, a) in s.attacks.iter().enumerate() {
        let key = |f: &str| format!("attacks.{i}.{f}");
        let window = |start: f64, end: f64| check(start >= 0.0 && end > start, key("end_s"), "window must satisfy 0 <= start_s < end_s");
        match a {
            AttackSpec::DosFixedDelay { link, start_s, end_s, delay_s } => {
                check(links.contains(link), key("link"), "unknown link")?;
                window(*start_s, *end_s)?;
                check(*delay_s >= 0.0, key("delay_s"), "must be non-negative")?;
            }
            AttackSpec::DosFlood { link, start_s, end_s, rate_fps } => {
                check(links.contains(link), key("link"), "unknown link")?;
                window(*start_s, *end_s)?;
                check(*rate_fps > 0.0, key("rate_fps"), "must be positive")?;
            }
            AttackSpec::MitmRewrite { link, start_s, end_s, new_code, new_value, .. } => {
                check(links.contains(link), key("link"), "unknown link")?;
                window(*start_s, *end_s)?;
                check(new_code.is_some() || new_value.is_some(), key("new_value"), "rewrite needs new_code or new_value")?;
            }
            AttackSpec::BreakerDelay { breaker, start_s, end_s, delay_s } => {
                check(known_breaker(breaker), key("breaker"), "unknown breaker")?;
                window(*start_s, end_s.unwrap_or(f64::INFINITY))?;
                check(*delay_s >= 0.0, key("delay_s"), "must be non-negative")?;
            }
        }
    }

    crate::engine::prepare(s).map(|_| ())
}
