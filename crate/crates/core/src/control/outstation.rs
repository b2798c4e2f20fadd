use serde::{Deserialize, Serialize};

use crate::cybernet::{CommandCode, Frame, FunctionCode, Record};
use crate::event_log::{EventKind, EventLog};
use crate::protection::BreakerAction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointKind {
    Load,
    Breaker,
    Source,
}

/// Maps a DNP3 point index to a physical element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointBinding {
    pub index: u16,
    pub kind: PointKind,
    pub target: String,
}

/// Physical effect of a command, applied at delivery time.
#[derive(Debug, Clone, PartialEq)]
pub enum PhysicalAction {
    ShedLoad(String),
    RestoreLoad(String),
    Breaker { breaker: String, action: BreakerAction },
    Setpoint { source: String, p_kw: Option<f64>, q_kvar: Option<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outstation {
    pub name: String,
    pub address: u16,
    pub points: Vec<PointBinding>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Applied {
    pub actions: Vec<PhysicalAction>,
    /// RESPONSE to send back to the master. For DIRECT_OPERATE it echoes the
    /// accepted records; a rejected record is left out (NACK).
    pub response: Option<Frame>,
}

impl Outstation {
    pub fn point(&self, index: u16) -> Option<&PointBinding> {
        self.points.iter().find(|p| p.index == index)
    }

    fn action(binding: &PointBinding, record: &Record) -> Option<PhysicalAction> {
        let target = binding.target.clone();
        Some(match (binding.kind, record.command()?) {
            (PointKind::Load, CommandCode::Shed) => PhysicalAction::ShedLoad(target),
            (PointKind::Load, CommandCode::Close) => PhysicalAction::RestoreLoad(target),
            (PointKind::Breaker, CommandCode::Trip) => PhysicalAction::Breaker {
                breaker: target,
                action: BreakerAction::Open,
            },
            (PointKind::Breaker, CommandCode::Close) => PhysicalAction::Breaker {
                breaker: target,
                action: BreakerAction::Close,
            },
            (PointKind::Source, CommandCode::SetP) => PhysicalAction::Setpoint {
                source: target,
                p_kw: Some(record.value),
                q_kvar: None,
            },
            (PointKind::Source, CommandCode::SetQ) => PhysicalAction::Setpoint {
                source: target,
                p_kw: None,
                q_kvar: Some(record.value),
            },
            _ => return None,
        })
    }

    /// Handles a frame delivered to this outstation at `now`.
    ///
    /// `measure` reads the current value of a bound point for READ polls.
    pub fn apply(
        &self,
        frame: &Frame,
        now: f64,
        measure: impl Fn(&PointBinding) -> f64,
        log: &mut EventLog,
    ) -> Applied {
        let mut out = Applied::default();
        match frame.function {
            FunctionCode::DirectOperate => {
                let Ok(records) = frame.records() else {
                    log.push(
                        now,
                        EventKind::FrameRejected {
                            link: self.name.clone(),
                            reason: "malformed payload".into(),
                        },
                    );
                    out.response = Some(Frame::new(FunctionCode::Response, frame.src, self.address, &[]));
                    return out;
                };
                let mut acks = Vec::new();
                for r in &records {
                    let Some(binding) = self.point(r.point) else {
                        log.push(
                            now,
                            EventKind::UnknownPoint {
                                outstation: self.name.clone(),
                                point: r.point,
                            },
                        );
                        continue;
                    };
                    match Self::action(binding, r) {
                        Some(a) => {
                            out.actions.push(a);
                            acks.push(*r);
                        }
                        None => log.push(
                            now,
                            EventKind::FrameRejected {
                                link: self.name.clone(),
                                reason: format!("code 0x{:02x} not valid for point {}", r.code, r.point),
                            },
                        ),
                    }
                }
                out.response = Some(Frame::new(FunctionCode::Response, frame.src, self.address, &acks));
            }
            FunctionCode::Read => {
                let meas: Vec<Record> = self
                    .points
                    .iter()
                    .map(|p| Record::new(p.index, CommandCode::Meas, measure(p)))
                    .collect();
                out.response = Some(Frame::new(FunctionCode::Response, frame.src, self.address, &meas));
            }
            FunctionCode::Response | FunctionCode::Unsolicited => {}
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os() -> Outstation {
        Outstation {
            name: "res".into(),
            address: 11,
            points: vec![
                PointBinding { index: 0, kind: PointKind::Load, target: "residential".into() },
                PointBinding { index: 1, kind: PointKind::Source, target: "pv".into() },
                PointBinding { index: 2, kind: PointKind::Breaker, target: "BRK".into() },
            ],
        }
    }

    fn op(point: u16, code: CommandCode, value: f64) -> Frame {
        Frame::new(FunctionCode::DirectOperate, 11, 1, &[Record::new(point, code, value)])
    }

    #[test]
    fn shed_maps_to_load_shed() {
        let a = os().apply(&op(0, CommandCode::Shed, 0.0), 12.005, |_| 0.0, &mut EventLog::new());
        assert_eq!(a.actions, vec![PhysicalAction::ShedLoad("residential".into())]);
        let resp = a.response.unwrap();
        assert_eq!((resp.function, resp.dst, resp.src), (FunctionCode::Response, 1, 11));
        assert_eq!(resp.records().unwrap().len(), 1);
    }

    #[test]
    fn setpoint_and_trip() {
        let a = os().apply(&op(1, CommandCode::SetP, 2000.0), 0.0, |_| 0.0, &mut EventLog::new());
        assert_eq!(
            a.actions,
            vec![PhysicalAction::Setpoint { source: "pv".into(), p_kw: Some(2000.0), q_kvar: None }]
        );
        let a = os().apply(&op(2, CommandCode::Trip, 0.0), 0.0, |_| 0.0, &mut EventLog::new());
        assert_eq!(a.actions, vec![PhysicalAction::Breaker { breaker: "BRK".into(), action: BreakerAction::Open }]);
    }

    #[test]
    fn unbound_point_is_nacked() {
        let mut log = EventLog::new();
        let a = os().apply(&op(99, CommandCode::Shed, 0.0), 1.0, |_| 0.0, &mut log);
        assert!(a.actions.is_empty());
        assert!(a.response.unwrap().records().unwrap().is_empty());
        assert!(matches!(log.entries()[0].kind, EventKind::UnknownPoint { point: 99, .. }));
    }

    #[test]
    fn read_reports_every_point() {
        let f = Frame::new(FunctionCode::Read, 11, 1, &[]);
        let a = os().apply(&f, 0.0, |p| p.index as f64 * 10.0, &mut EventLog::new());
        let recs = a.response.unwrap().records().unwrap();
        assert_eq!(recs.iter().map(|r| r.value).collect::<Vec<_>>(), vec![0.0, 10.0, 20.0]);
        assert!(recs.iter().all(|r| r.command() == Some(CommandCode::Meas)));
    }
}
