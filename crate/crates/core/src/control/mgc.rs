use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::outstation::{Outstation, PointKind};
use super::ControlError;
use crate::cybernet::{CommandCode, Frame, FunctionCode, Record};
use crate::event_log::{EventKind, EventLog};
use crate::grid::model::{GridModel, LoadClass};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetryPolicy {
    pub timeout_s: f64,
    pub max_attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MgcPolicy {
    /// Load classes in shedding order.
    #[serde(default = "default_priority")]
    pub shed_priority: Vec<LoadClass>,
    #[serde(default = "default_threshold")]
    pub frequency_threshold_hz: f64,
    #[serde(default = "default_poll")]
    pub poll_period_s: f64,
    /// Breaker whose opening signals islanding.
    #[serde(default)]
    pub pcc_breaker: Option<String>,
    /// Command retry; off by default so a lost command stays lost.
    #[serde(default)]
    pub retry: Option<RetryPolicy>,
}

fn default_priority() -> Vec<LoadClass> {
    vec![LoadClass::Residential, LoadClass::Commercial]
}
fn default_threshold() -> f64 {
    59.5
}
fn default_poll() -> f64 {
    1.0
}

impl Default for MgcPolicy {
    fn default() -> Self {
        Self {
            shed_priority: default_priority(),
            frequency_threshold_hz: default_threshold(),
            poll_period_s: default_poll(),
            pcc_breaker: None,
            retry: None,
        }
    }
}

/// What the controller sees directly at the PCC each step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observations {
    pub pcc_closed: bool,
    /// Nameplate capacity of the microgrid's own online sources.
    pub generation_kw: f64,
    pub frequency_hz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outgoing {
    pub dst: String,
    pub frame: Frame,
}

#[derive(Debug, Clone)]
struct SheddableLoad {
    id: String,
    class: LoadClass,
    nominal_kw: f64,
    outstation: usize,
    point: u16,
}

#[derive(Debug, Clone)]
struct Outstanding {
    outstation: usize,
    record: Record,
    sent_s: f64,
    attempts: u32,
}

/// Microgrid central controller acting as the DNP3 master.
#[derive(Debug, Clone)]
pub struct Mgc {
    policy: MgcPolicy,
    address: u16,
    /// (name, address) of each outstation.
    outstations: Vec<(String, u16)>,
    loads: Vec<SheddableLoad>,
    /// Every load: nominal kW and its telemetry point, if bound.
    demand: Vec<(f64, Option<(u16, u16)>)>,
    /// Latest telemetry per (outstation address, point).
    telemetry: BTreeMap<(u16, u16), f64>,
    pcc_was_closed: Option<bool>,
    shed: BTreeSet<String>,
    queued: Vec<(usize, Record)>,
    outstanding: Vec<Outstanding>,
    next_poll_s: f64,
    alarmed: bool,
}

impl Mgc {
    pub fn new(policy: MgcPolicy, address: u16, model: &GridModel, outstations: &[Outstation]) -> Result<Self, ControlError> {
        if policy.shed_priority.contains(&LoadClass::Critical) {
            return Err(ControlError::InvalidPolicy("critical loads cannot be in the shed order".into()));
        }
        if !(policy.poll_period_s > 0.0) {
            return Err(ControlError::InvalidPolicy("poll period must be positive".into()));
        }
        if let Some(b) = &policy.pcc_breaker {
            if model.breaker_index(b).is_none() {
                return Err(ControlError::UnknownElement(format!("breaker `{b}`")));
            }
        }
        let mut loads = Vec::new();
        for (o, os) in outstations.iter().enumerate() {
            for p in &os.points {
                let exists = match p.kind {
                    PointKind::Load => model.load_index(&p.target).is_some(),
                    PointKind::Breaker => model.breaker_index(&p.target).is_some(),
                    PointKind::Source => model.source_index(&p.target).is_some(),
                };
                if !exists {
                    return Err(ControlError::UnknownElement(format!("{:?} `{}` bound at `{}`", p.kind, p.target, os.name)));
                }
                if p.kind == PointKind::Load {
                    let l = &model.loads[model.load_index(&p.target).expect("checked")];
                    if l.sheddable && policy.shed_priority.contains(&l.class) {
                        loads.push(SheddableLoad {
                            id: l.id.clone(),
                            class: l.class,
                            nominal_kw: l.p_kw,
                            outstation: o,
                            point: p.index,
                        });
                    }
                }
            }
        }
        loads.sort_by_key(|l| policy.shed_priority.iter().position(|c| *c == l.class));
        let demand = model
            .loads
            .iter()
            .map(|l| {
                let bound = outstations.iter().find_map(|os| {
                    os.points
                        .iter()
                        .find(|p| p.kind == PointKind::Load && p.target == l.id)
                        .map(|p| (os.address, p.index))
                });
                (l.p_kw, bound)
            })
            .collect();
        Ok(Self {
            policy,
            address,
            outstations: outstations.iter().map(|o| (o.name.clone(), o.address)).collect(),
            loads,
            demand,
            telemetry: BTreeMap::new(),
            pcc_was_closed: None,
            shed: BTreeSet::new(),
            queued: Vec::new(),
            outstanding: Vec::new(),
            next_poll_s: 0.0,
            alarmed: false,
        })
    }

    pub fn policy(&self) -> &MgcPolicy {
        &self.policy
    }

    fn outstation_index(&self, name: &str) -> Result<usize, ControlError> {
        self.outstations
            .iter()
            .position(|(n, _)| n == name)
            .ok_or_else(|| ControlError::UnknownElement(format!("outstation `{name}`")))
    }

    /// Queues a DIRECT_OPERATE for the next step's command phase.
    pub fn queue_command(&mut self, outstation: &str, point: u16, code: CommandCode, value: f64) -> Result<(), ControlError> {
        let o = self.outstation_index(outstation)?;
        self.queued.push((o, Record::new(point, code, value)));
        Ok(())
    }

    /// Absorbs a RESPONSE from an outstation: telemetry and acknowledgements.
    pub fn on_frame(&mut self, frame: &Frame) {
        if frame.function != FunctionCode::Response && frame.function != FunctionCode::Unsolicited {
            return;
        }
        let Ok(records) = frame.records() else { return };
        for r in records {
            if r.command() == Some(CommandCode::Meas) {
                self.telemetry.insert((frame.src, r.point), r.value);
            } else if let Some(i) = self.outstanding.iter().position(|o| {
                self.outstations[o.outstation].1 == frame.src && o.record.point == r.point && o.record.code == r.code
            }) {
                self.outstanding.remove(i);
            }
        }
    }

    /// Latest telemetry value, if any poll response has arrived.
    pub fn telemetry(&self, outstation: &str, point: u16) -> Option<f64> {
        let addr = self.outstations.iter().find(|(n, _)| n == outstation)?.1;
        self.telemetry.get(&(addr, point)).copied()
    }

    fn load_kw(&self, l: &SheddableLoad) -> f64 {
        let addr = self.outstations[l.outstation].1;
        self.telemetry.get(&(addr, l.point)).copied().unwrap_or(l.nominal_kw)
    }

    /// Connected demand as the controller sees it: latest telemetry where a
    /// load is polled, nameplate otherwise.
    pub fn believed_demand_kw(&self) -> f64 {
        self.demand
            .iter()
            .map(|(nominal, bound)| bound.and_then(|k| self.telemetry.get(&k).copied()).unwrap_or(*nominal))
            .sum()
    }

    /// Sheddable loads to drop, in priority order, until the remaining
    /// demand fits the available generation. Critical and non-sheddable
    /// loads count toward demand but are never selected.
    fn plan_shed(&self, generation_kw: f64) -> Vec<usize> {
        let mut remaining = self.believed_demand_kw();
        let mut plan = Vec::new();
        for (i, l) in self.loads.iter().enumerate() {
            if generation_kw >= remaining {
                break;
            }
            if self.shed.contains(&l.id) {
                continue;
            }
            remaining -= self.load_kw(l);
            plan.push(i);
        }
        plan
    }

    fn operate(&mut self, o: usize, record: Record, now: f64, out: &mut Vec<Outgoing>) {
        let (name, addr) = &self.outstations[o];
        out.push(Outgoing {
            dst: name.clone(),
            frame: Frame::new(FunctionCode::DirectOperate, *addr, self.address, &[record]),
        });
        if self.policy.retry.is_some() {
            self.outstanding.push(Outstanding {
                outstation: o,
                record,
                sent_s: now,
                attempts: 1,
            });
        }
    }

    /// One controller step: queued commands, islanding response, retries,
    /// then measurement polls.
    pub fn step(&mut self, obs: &Observations, now: f64, log: &mut EventLog) -> Vec<Outgoing> {
        let mut out = Vec::new();
        for (o, r) in std::mem::take(&mut self.queued) {
            self.operate(o, r, now, &mut out);
        }

        let was_closed = self.pcc_was_closed.replace(obs.pcc_closed);
        if self.policy.pcc_breaker.is_some() {
            if was_closed == Some(true) && !obs.pcc_closed {
                for i in self.plan_shed(obs.generation_kw) {
                    let l = self.loads[i].clone();
                    self.shed.insert(l.id.clone());
                    log.push(now, EventKind::ShedIssued { load: l.id.clone() });
                    self.operate(l.outstation, Record::new(l.point, CommandCode::Shed, 0.0), now, &mut out);
                }
            } else if was_closed == Some(false) && obs.pcc_closed {
                self.shed.clear();
            }
        }

        if obs.frequency_hz < self.policy.frequency_threshold_hz {
            if !self.alarmed {
                self.alarmed = true;
                log.push(now, EventKind::FrequencyAlarm { hz: obs.frequency_hz });
            }
        } else {
            self.alarmed = false;
        }

        if let Some(retry) = self.policy.retry {
            let mut resend = Vec::new();
            for o in &mut self.outstanding {
                if now >= o.sent_s + retry.timeout_s - 1e-9 && o.attempts < retry.max_attempts {
                    o.attempts += 1;
                    o.sent_s = now;
                    resend.push((o.outstation, o.record));
                }
            }
            for (o, r) in resend {
                let (name, addr) = &self.outstations[o];
                out.push(Outgoing {
                    dst: name.clone(),
                    frame: Frame::new(FunctionCode::DirectOperate, *addr, self.address, &[r]),
                });
            }
        }

        if now >= self.next_poll_s - 1e-9 {
            for (name, addr) in &self.outstations {
                out.push(Outgoing {
                    dst: name.clone(),
                    frame: Frame::new(FunctionCode::Read, *addr, self.address, &[]),
                });
            }
            // Counted from zero so poll instants do not drift.
            let k = (now / self.policy.poll_period_s + 1e-9).floor() + 1.0;
            self.next_poll_s = k * self.policy.poll_period_s;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::control::outstation::PointBinding;
    use crate::grid::model::*;

    fn model(commercial_kw: f64) -> GridModel {
        let mut ut = UtilitySpec::new("PCC");
        ut.breaker = Some("PCC".into());
        let ld = |p_kw, class, sheddable| LoadSpec {
            bus: "PCC".into(),
            p_kw,
            q_kvar: 0.0,
            class,
            sheddable,
        };
        let spec = NetworkSpec {
            base_mva: 1.0,
            nominal_hz: 60.0,
            buses: vec![BusSpec { id: "PCC".into(), kv: 0.48 }],
            branches: vec![],
            breakers: BTreeMap::from([("PCC".to_string(), BreakerSpec::default())]),
            sources: BTreeMap::from([
                ("genset".to_string(), SourceSpec::Genset(GensetSpec::new("PCC", 1000.0))),
                ("grid".to_string(), SourceSpec::Utility(ut)),
            ]),
            loads: BTreeMap::from([
                ("residential".to_string(), ld(300.0, LoadClass::Residential, true)),
                ("critical".to_string(), ld(200.0, LoadClass::Critical, false)),
                ("commercial".to_string(), ld(commercial_kw, LoadClass::Commercial, true)),
            ]),
        };
        build_network(&spec).unwrap()
    }

    fn stations() -> Vec<Outstation> {
        ["residential", "critical", "commercial"]
            .iter()
            .enumerate()
            .map(|(i, l)| Outstation {
                name: l[..3].to_string(),
                address: 11 + i as u16,
                points: vec![PointBinding { index: 0, kind: PointKind::Load, target: l.to_string() }],
            })
            .collect()
    }

    fn mgc(commercial_kw: f64) -> Mgc {
        let policy = MgcPolicy {
            pcc_breaker: Some("PCC".into()),
            ..MgcPolicy::default()
        };
        Mgc::new(policy, 1, &model(commercial_kw), &stations()).unwrap()
    }

    fn obs(pcc_closed: bool) -> Observations {
        Observations {
            pcc_closed,
            generation_kw: 1100.0,
            frequency_hz: 60.0,
        }
    }

    fn sheds(out: &[Outgoing]) -> Vec<String> {
        out.iter()
            .filter(|o| o.frame.function == FunctionCode::DirectOperate)
            .map(|o| o.dst.clone())
            .collect()
    }

    #[test]
    fn islanding_sheds_residential_only() {
        let mut m = mgc(700.0);
        let mut log = EventLog::new();
        m.step(&obs(true), 9.999, &mut log);
        let out = m.step(&obs(false), 10.0, &mut log);
        assert_eq!(sheds(&out), vec!["res"]);
        // Command precedes the poll burst issued in the same step.
        assert_eq!(out[0].frame.function, FunctionCode::DirectOperate);
        // No duplicates while still islanded.
        assert!(sheds(&m.step(&obs(false), 11.0, &mut log)).is_empty());
    }

    #[test]
    fn larger_deficit_sheds_in_priority_order() {
        let mut m = mgc(1100.0);
        let mut log = EventLog::new();
        m.step(&obs(true), 9.0, &mut log);
        let out = m.step(&obs(false), 10.0, &mut log);
        assert_eq!(sheds(&out), vec!["res", "com"]);
    }

    #[test]
    fn grid_connected_quiet_between_polls() {
        let mut m = mgc(700.0);
        let mut log = EventLog::new();
        assert_eq!(m.step(&obs(true), 0.0, &mut log).len(), 3);
        for k in 1..1000 {
            assert!(m.step(&obs(true), k as f64 * 1e-3, &mut log).is_empty());
        }
        assert_eq!(m.step(&obs(true), 1.0, &mut log).len(), 3);
    }

    #[test]
    fn critical_in_priority_is_rejected() {
        let policy = MgcPolicy {
            shed_priority: vec![LoadClass::Critical],
            ..MgcPolicy::default()
        };
        assert!(matches!(Mgc::new(policy, 1, &model(700.0), &stations()), Err(ControlError::InvalidPolicy(_))));
    }

    #[test]
    fn retry_resends_until_acknowledged() {
        let policy = MgcPolicy {
            pcc_breaker: Some("PCC".into()),
            poll_period_s: 1e6,
            retry: Some(RetryPolicy { timeout_s: 0.5, max_attempts: 3 }),
            ..MgcPolicy::default()
        };
        let mut m = Mgc::new(policy, 1, &model(700.0), &stations()).unwrap();
        let mut log = EventLog::new();
        m.step(&obs(true), 0.0, &mut log);
        assert_eq!(sheds(&m.step(&obs(false), 10.0, &mut log)), vec!["res"]);
        assert_eq!(sheds(&m.step(&obs(false), 10.5, &mut log)), vec!["res"]);
        let ack = Frame::new(FunctionCode::Response, 1, 11, &[Record::new(0, CommandCode::Shed, 0.0)]);
        m.on_frame(&ack);
        assert!(sheds(&m.step(&obs(false), 11.0, &mut log)).is_empty());
    }

    #[test]
    fn telemetry_drives_shed_sizing() {
        let mut m = mgc(700.0);
        // Commercial measured at 1000 kW: 1500 − 300 still exceeds 1100.
        m.on_frame(&Frame::new(FunctionCode::Response, 1, 13, &[Record::new(0, CommandCode::Meas, 1000.0)]));
        assert_eq!(m.telemetry("com", 0), Some(1000.0));
        assert_eq!(m.believed_demand_kw(), 1500.0);
        let mut log = EventLog::new();
        m.step(&obs(true), 9.0, &mut log);
        assert_eq!(sheds(&m.step(&obs(false), 10.0, &mut log)), vec!["res", "com"]);
    }
}
