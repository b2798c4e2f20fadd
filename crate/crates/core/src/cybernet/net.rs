use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use serde::{Deserialize, Serialize};

use super::frame::{decode_frame, encode_frame, to_hex, CommandCode, Frame, FunctionCode};
use super::link::{DosMode, Link, LinkParams, Window};
use super::NetError;
use crate::event_log::{EventKind, EventLog};

/// Deliveries at or before `now + DELIVERY_EPS` are handed out at `now`.
const DELIVERY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub name: String,
    pub address: u16,
}

/// Radial star: one master, one bidirectional link pair per outstation.
#[derive(Debug, Clone, PartialEq)]
pub struct CyberTopology {
    pub master: NodeSpec,
    pub outstations: Vec<NodeSpec>,
    pub link_defaults: LinkParams,
    /// Per-link overrides keyed by `"src->dst"`.
    pub link_overrides: BTreeMap<String, LinkParams>,
}

pub fn link_name(src: &str, dst: &str) -> String {
    format!("{src}->{dst}")
}

/// Rewrites records of matching frames in flight.
#[derive(Debug, Clone, PartialEq)]
pub struct MitmRule {
    pub window: Window,
    pub function: FunctionCode,
    pub point: u16,
    /// Only records carrying this command code match; any code if `None`.
    pub code: Option<CommandCode>,
    pub new_code: Option<CommandCode>,
    pub new_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub link: String,
    pub src: String,
    pub dst: String,
    pub t_send: f64,
    pub t_deliver: f64,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Delivered,
    Rewritten,
    Dropped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub t_send: f64,
    pub t_deliver: Option<f64>,
    pub src: String,
    pub dst: String,
    pub hex: String,
    pub verdict: Verdict,
}

#[derive(Debug, Clone)]
struct Node {
    spec: NodeSpec,
    seq: u8,
}

#[derive(Debug, Clone)]
struct Pending {
    t: f64,
    order: u64,
    delivery: Delivery,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending {
    // Reversed: BinaryHeap pops the earliest (time, insertion order) first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.t.total_cmp(&self.t).then(other.order.cmp(&self.order))
    }
}

/// The emulated SCADA network of one simulation run.
#[derive(Debug, Clone)]
pub struct CyberNet {
    nodes: Vec<Node>,
    links: Vec<Link>,
    mitm: Vec<(usize, MitmRule)>,
    queue: BinaryHeap<Pending>,
    inserted: u64,
    trace: Vec<TraceEntry>,
}

impl CyberNet {
    pub fn new(topology: &CyberTopology) -> Result<Self, NetError> {
        let mut nodes = vec![Node {
            spec: topology.master.clone(),
            seq: 0,
        }];
        for os in &topology.outstations {
            if nodes.iter().any(|n| n.spec.name == os.name) {
                return Err(NetError::Topology(format!("duplicate node `{}`", os.name)));
            }
            if nodes.iter().any(|n| n.spec.address == os.address) {
                return Err(NetError::Topology(format!("duplicate address {}", os.address)));
            }
            nodes.push(Node {
                spec: os.clone(),
                seq: 0,
            });
        }
        let mut links = Vec::new();
        for o in 1..nodes.len() {
            for (a, b) in [(0, o), (o, 0)] {
                let name = link_name(&nodes[a].spec.name, &nodes[b].spec.name);
                let params = topology.link_overrides.get(&name).copied().unwrap_or(topology.link_defaults);
                if !(params.latency_s >= 0.0 && params.bandwidth_fps > 0.0 && params.capacity > 0) {
                    return Err(NetError::Topology(format!("link `{name}` has invalid parameters")));
                }
                links.push(Link::new(name, a, b, params));
            }
        }
        if let Some(name) = topology.link_overrides.keys().find(|k| !links.iter().any(|l| &l.name == *k)) {
            return Err(NetError::UnknownLink(name.clone()));
        }
        Ok(Self {
            nodes,
            links,
            mitm: Vec::new(),
            queue: BinaryHeap::new(),
            inserted: 0,
            trace: Vec::new(),
        })
    }

    pub fn master(&self) -> &NodeSpec {
        &self.nodes[0].spec
    }

    pub fn node(&self, name: &str) -> Option<&NodeSpec> {
        self.nodes.iter().map(|n| &n.spec).find(|n| n.name == name)
    }

    pub fn node_by_address(&self, address: u16) -> Option<&NodeSpec> {
        self.nodes.iter().map(|n| &n.spec).find(|n| n.address == address)
    }

    fn link_index(&self, name: &str) -> Result<usize, NetError> {
        self.links
            .iter()
            .position(|l| l.name == name)
            .ok_or_else(|| NetError::UnknownLink(name.to_string()))
    }

    pub fn link(&self, name: &str) -> Option<&Link> {
        self.links.iter().find(|l| l.name == name)
    }

    pub fn inject_dos(&mut self, link: &str, window: Window, mode: DosMode) -> Result<(), NetError> {
        Window::new(window.start_s, window.end_s)?;
        let i = self.link_index(link)?;
        self.links[i].add_dos(window, mode);
        Ok(())
    }

    pub fn mitm_rewrite(&mut self, link: &str, rule: MitmRule) -> Result<(), NetError> {
        Window::new(rule.window.start_s, rule.window.end_s)?;
        let i = self.link_index(link)?;
        self.mitm.push((i, rule));
        Ok(())
    }

    /// Applies MITM rules for `link` to `frame`, logging each rewrite.
    fn tamper(&self, link: usize, frame: &mut Frame, now: f64, log: &mut EventLog) -> bool {
        let mut touched = false;
        for (l, rule) in &self.mitm {
            if *l != link || rule.function != frame.function || !rule.window.contains(now) {
                continue;
            }
            let Ok(mut records) = frame.records() else { continue };
            let mut changed = false;
            for r in records.iter_mut() {
                if r.point != rule.point || rule.code.is_some_and(|c| c as u8 != r.code) {
                    continue;
                }
                let original = r.value;
                if let Some(c) = rule.new_code {
                    r.code = c as u8;
                }
                if let Some(v) = rule.new_value {
                    r.value = v;
                }
                changed = true;
                log.push(
                    now,
                    EventKind::MitmRewrite {
                        link: self.links[link].name.clone(),
                        point: r.point,
                        original,
                        rewritten: r.value,
                    },
                );
            }
            if changed {
                frame.set_records(&records);
                touched = true;
            }
        }
        touched
    }

    /// Sends `frame` from node `src` to node `dst` at `now`. The network
    /// stamps the sender's sequence number. Returns the delivery time.
    pub fn send(&mut self, src: &str, dst: &str, mut frame: Frame, now: f64, log: &mut EventLog) -> Result<f64, NetError> {
        let l = self.link_index(&link_name(src, dst))?;
        let sender = self.links[l].from;
        frame.seq = self.nodes[sender].seq;
        self.nodes[sender].seq = frame.seq.wrapping_add(1);
        let rewritten = self.tamper(l, &mut frame, now, log);
        let bytes = encode_frame(&frame)?;
        let link = &mut self.links[l];
        let Some(t_deliver) = link.send(now) else {
            log.push(
                now,
                EventKind::FrameDropped {
                    link: link.name.clone(),
                    function: frame.function.name().to_string(),
                },
            );
            self.trace.push(TraceEntry {
                t_send: now,
                t_deliver: None,
                src: src.to_string(),
                dst: dst.to_string(),
                hex: to_hex(&bytes),
                verdict: Verdict::Dropped,
            });
            return Err(NetError::QueueOverflow(link.name.clone()));
        };
        self.trace.push(TraceEntry {
            t_send: now,
            t_deliver: Some(t_deliver),
            src: src.to_string(),
            dst: dst.to_string(),
            hex: to_hex(&bytes),
            verdict: if rewritten { Verdict::Rewritten } else { Verdict::Delivered },
        });
        self.queue.push(Pending {
            t: t_deliver,
            order: self.inserted,
            delivery: Delivery {
                link: link.name.clone(),
                src: src.to_string(),
                dst: dst.to_string(),
                t_send: now,
                t_deliver,
                bytes,
            },
        });
        self.inserted += 1;
        Ok(t_deliver)
    }

    /// Removes and returns every delivery due by `now`, earliest first.
    pub fn deliver_due(&mut self, now: f64) -> Vec<Delivery> {
        let mut out = Vec::new();
        while self.queue.peek().is_some_and(|p| p.t <= now + DELIVERY_EPS) {
            out.push(self.queue.pop().expect("peeked").delivery);
        }
        out
    }

    pub fn in_flight(&self) -> usize {
        self.queue.len()
    }

    pub fn trace(&self) -> &[TraceEntry] {
        &self.trace
    }
}

/// Receiver-side validation of delivered bytes.
pub fn receive(delivery: &Delivery, log: &mut EventLog, now: f64) -> Option<Frame> {
    match decode_frame(&delivery.bytes) {
        Ok(f) => Some(f),
        Err(e) => {
            log.push(
                now,
                EventKind::FrameRejected {
                    link: delivery.link.clone(),
                    reason: e.to_string(),
                },
            );
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::cybernet::frame::Record;

    fn topo() -> CyberTopology {
        CyberTopology {
            master: NodeSpec { name: "mgc".into(), address: 1 },
            outstations: vec![
                NodeSpec { name: "res".into(), address: 11 },
                NodeSpec { name: "pv".into(), address: 12 },
            ],
            link_defaults: LinkParams::default(),
            link_overrides: BTreeMap::new(),
        }
    }

    fn cmd(point: u16, code: CommandCode, value: f64) -> Frame {
        Frame::new(FunctionCode::DirectOperate, 11, 1, &[Record::new(point, code, value)])
    }

    #[test]
    fn shed_delayed_by_window() {
        let mut net = CyberNet::new(&topo()).unwrap();
        net.inject_dos("mgc->res", Window::new(10.0, 30.0).unwrap(), DosMode::FixedDelay { delay_s: 2.0 }).unwrap();
        let mut log = EventLog::new();
        let t = net.send("mgc", "res", cmd(0, CommandCode::Shed, 0.0), 10.0, &mut log).unwrap();
        assert!((t - 12.005).abs() < 1e-12);
        assert!(net.deliver_due(12.004).is_empty());
        assert_eq!(net.deliver_due(12.005).len(), 1);
    }

    #[test]
    fn unknown_link_is_an_error() {
        let mut net = CyberNet::new(&topo()).unwrap();
        let w = Window::new(0.0, 1.0).unwrap();
        assert!(matches!(net.inject_dos("res->pv", w, DosMode::FixedDelay { delay_s: 1.0 }), Err(NetError::UnknownLink(_))));
        assert!(matches!(
            net.send("res", "pv", cmd(0, CommandCode::Shed, 0.0), 0.0, &mut EventLog::new()),
            Err(NetError::UnknownLink(_))
        ));
        assert!(matches!(Window::new(2.0, 1.0), Err(NetError::BadWindow { .. })));
    }

    #[test]
    fn mitm_rewrites_with_valid_crc() {
        let mut net = CyberNet::new(&topo()).unwrap();
        net.mitm_rewrite(
            "mgc->pv",
            MitmRule {
                window: Window::new(0.0, 100.0).unwrap(),
                function: FunctionCode::DirectOperate,
                point: 0,
                code: Some(CommandCode::SetP),
                new_code: None,
                new_value: Some(2000.0),
            },
        )
        .unwrap();
        let mut log = EventLog::new();
        net.send("mgc", "pv", cmd(0, CommandCode::SetP, 800.0), 1.0, &mut log).unwrap();
        let d = net.deliver_due(2.0);
        let f = receive(&d[0], &mut log, 2.0).unwrap();
        assert_eq!(f.records().unwrap()[0].value, 2000.0);
        assert!(log.iter().any(|e| matches!(e.kind, EventKind::MitmRewrite { original, rewritten, .. } if original == 800.0 && rewritten == 2000.0)));
        assert_eq!(net.trace()[0].verdict, Verdict::Rewritten);
    }

    #[test]
    fn identity_rewrite_is_bit_identical() {
        let mut plain = CyberNet::new(&topo()).unwrap();
        let mut tampered = plain.clone();
        tampered
            .mitm_rewrite(
                "mgc->pv",
                MitmRule {
                    window: Window::new(0.0, 100.0).unwrap(),
                    function: FunctionCode::DirectOperate,
                    point: 0,
                    code: None,
                    new_code: None,
                    new_value: Some(800.0),
                },
            )
            .unwrap();
        let mut log = EventLog::new();
        plain.send("mgc", "pv", cmd(0, CommandCode::SetP, 800.0), 1.0, &mut log).unwrap();
        tampered.send("mgc", "pv", cmd(0, CommandCode::SetP, 800.0), 1.0, &mut log).unwrap();
        assert_eq!(plain.deliver_due(2.0), tampered.deliver_due(2.0));
    }

    #[test]
    fn sequence_numbers_wrap_per_sender() {
        let mut net = CyberNet::new(&topo()).unwrap();
        let mut log = EventLog::new();
        let mut seqs = Vec::new();
        for k in 0..300 {
            let t = k as f64;
            net.send("mgc", if k % 2 == 0 { "res" } else { "pv" }, cmd(0, CommandCode::Shed, 0.0), t, &mut log).unwrap();
            seqs.extend(net.deliver_due(t + 1.0).iter().map(|d| decode_frame(&d.bytes).unwrap().seq));
        }
        assert!(seqs.iter().enumerate().all(|(k, s)| *s == (k % 256) as u8));
    }

    #[test]
    fn overflow_is_logged() {
        let mut net = CyberNet::new(&topo()).unwrap();
        let mut log = EventLog::new();
        for _ in 0..64 {
            net.send("mgc", "res", cmd(0, CommandCode::Shed, 0.0), 0.0, &mut log).unwrap();
        }
        assert!(matches!(net.send("mgc", "res", cmd(0, CommandCode::Shed, 0.0), 0.0, &mut log), Err(NetError::QueueOverflow(_))));
        assert!(matches!(log.entries().last().unwrap().kind, EventKind::FrameDropped { .. }));
    }

    proptest! {
        #[test]
        fn fifo_and_delay_lower_bound(
            sends in proptest::collection::vec(0u32..5000, 1..60),
            delay_ms in 0u32..3000,
            w0 in 0u32..3000, wlen in 0u32..3000,
        ) {
            let mut sends = sends;
            sends.sort_unstable();
            let mut net = CyberNet::new(&topo()).unwrap();
            let window = Window::new(w0 as f64 * 1e-3, (w0 + wlen) as f64 * 1e-3).unwrap();
            let d = delay_ms as f64 * 1e-3;
            net.inject_dos("mgc->res", window, DosMode::FixedDelay { delay_s: d }).unwrap();
            let mut log = EventLog::new();
            for (k, ms) in sends.iter().enumerate() {
                let t = *ms as f64 * 1e-3;
                let f = cmd(k as u16, CommandCode::Shed, 0.0);
                let at = net.send("mgc", "res", f, t, &mut log).unwrap();
                prop_assert!(at >= t + 0.005 - 1e-12);
                if window.contains(t) {
                    prop_assert!(at >= t + 0.005 + d - 1e-12);
                }
            }
            let got: Vec<u16> = net
                .deliver_due(1e9)
                .iter()
                .map(|d| decode_frame(&d.bytes).unwrap().records().unwrap()[0].point)
                .collect();
            prop_assert_eq!(got, (0..sends.len() as u16).collect::<Vec<_>>());
        }
    }
}
