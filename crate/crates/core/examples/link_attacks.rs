//! The emulated control network on its own: a master and one outstation,
//! a fixed-delay DoS window on the command link and a man-in-the-middle
//! rule that rewrites active-power setpoints in transit.
//!
//!     cargo run --example link_attacks

use std::collections::BTreeMap;

use gridsurge::cybernet::{
    receive, CommandCode, CyberNet, CyberTopology, DosMode, Frame, FunctionCode, LinkParams, MitmRule, NodeSpec,
    Record, Window,
};
use gridsurge::event_log::EventLog;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let topology = CyberTopology {
        master: NodeSpec { name: "mgc".into(), address: 1 },
        outstations: vec![NodeSpec { name: "pv".into(), address: 30 }],
        link_defaults: LinkParams::default(),
        link_overrides: BTreeMap::new(),
    };
    let mut net = CyberNet::new(&topology)?;
    net.inject_dos("mgc->pv", Window::new(2.0, 4.0)?, DosMode::FixedDelay { delay_s: 1.5 })?;
    net.mitm_rewrite(
        "mgc->pv",
        MitmRule {
            window: Window::new(5.0, 6.0)?,
            function: FunctionCode::DirectOperate,
            point: 0,
            code: Some(CommandCode::SetP),
            new_code: None,
            new_value: Some(1400.0),
        },
    )?;

    let mut log = EventLog::new();
    // (send time, P setpoint in kW)
    let commands = [(1.0, 500.0), (2.5, 600.0), (5.2, 700.0), (7.0, 800.0)];
    for (t, kw) in commands {
        let frame = Frame::new(FunctionCode::DirectOperate, 30, 1, &[Record::new(0, CommandCode::SetP, kw)]);
        net.send("mgc", "pv", frame, t, &mut log)?;
    }

    println!("{:>8} {:>8} {:>10} {:>10}", "sent s", "recv s", "sent kW", "recv kW");
    let mut sent = commands.iter();
    let mut now = 0.0;
    while net.in_flight() > 0 {
        now += 0.001;
        for d in net.deliver_due(now) {
            let frame = receive(&d, &mut log, now).expect("valid CRC even after rewrite");
            let value = frame.records()?[0].value;
            let (_, original) = sent.next().expect("delivered in send order");
            println!("{:8.3} {:8.3} {:10.1} {:10.1}", d.t_send, d.t_deliver, original, value);
        }
    }
    for e in log.iter() {
        println!("log {:.3} s {:?}", e.time_s, e.kind);
    }
    Ok(())
}
