//! Man-in-the-middle on the PV setpoint link: rewritten P/Q commands push
//! the PV feeder over its relay pickup. The measured trip time is checked
//! against the closed-form inverse-time characteristic.
//!
//!     cargo run --release --example setpoint_tampering

use gridsurge::engine::run_scenario;
use gridsurge::event_log::EventKind;
use gridsurge::protection::trip_time;
use gridsurge::scenario::{builtin, parse_scenario, RelayElement};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let attacked = parse_scenario(builtin("rtds-pq")?)?;
    let mut legitimate = attacked.clone();
    legitimate.attacks.clear();

    let RelayElement::Overcurrent(r3) = &attacked.relays["R3"].element else {
        unreachable!("R3 is an overcurrent relay")
    };

    for (label, s) in [("legitimate", &legitimate), ("tampered", &attacked)] {
        let r = run_scenario(s)?;
        println!("{label}:");
        let mut onset = None;
        for e in r.log.iter() {
            match &e.kind {
                EventKind::MitmRewrite { point, original, rewritten, .. } => {
                    println!("  {:.3} s  point {point} rewritten {original} -> {rewritten}", e.time_s)
                }
                EventKind::SetpointChanged { source, p_kw, q_kvar } => {
                    println!("  {:.3} s  {source} setpoint P {p_kw} kW, Q {q_kvar} kvar", e.time_s);
                    onset = Some(e.time_s);
                }
                EventKind::RelayTrip { relay, .. } => println!("  {:.3} s  {relay} trips", e.time_s),
                _ => {}
            }
        }

        // Feeder current as a multiple of pickup, just before any trip.
        let ct_kva = r3.ct_rating_kva.unwrap_or(s.network.base_mva * 1000.0);
        let p = r.channel("p_pv_kw").expect("pv channel");
        let q = r.channel("q_pv_kvar").expect("pv channel");
        let v = r.channel("v_Bus-3_pu").expect("bus channel");
        let k = r.index_at(5.0).expect("inside horizon");
        let m = (p[k].hypot(q[k]) / v[k]) / ct_kva / r3.pickup_pu;
        match (trip_time(r3.curve, r3.tds, m), onset) {
            (Some(t), Some(t0)) => println!("  M = {m:.3}: closed form predicts R3 at {:.3} s", t0 + t),
            _ => println!("  M = {m:.3}: below pickup, no trip expected"),
        }
    }
    Ok(())
}
