//! Inverse-time overcurrent curves: closed-form operate times next to the
//! time the stepped relay element actually trips, plus a definite-time
//! under-voltage element riding through a sag.
//!
//!     cargo run --example relay_curves

use gridsurge::protection::{oc_step, trip_time, uv_step, Curve, OvercurrentRelaySpec, RelayState, RelayTarget, VoltageRelaySpec};

fn stepped_trip(spec: &OvercurrentRelaySpec, current_pu: f64, dt: f64) -> Option<f64> {
    let mut state = RelayState::default();
    (0..200_000).find_map(|k| {
        let now = k as f64 * dt;
        oc_step("R", spec, &mut state, current_pu, dt, now).map(|t| t.time_s)
    })
}

fn main() {
    let dt = 1e-3;
    let curves = [
        ("moderately_inverse", Curve::ModeratelyInverse),
        ("very_inverse", Curve::VeryInverse),
        ("extremely_inverse", Curve::ExtremelyInverse),
        ("custom a=0 b=0.1", Curve::Custom { a: 0.0, b: 0.1, p: 1.0 }),
    ];
    println!("{:20} {:>5} {:>10} {:>10}", "curve", "M", "t(M) s", "stepped s");
    for (name, curve) in curves {
        let mut spec = OvercurrentRelaySpec::new("L", "B", 1.0, 0.5);
        spec.curve = curve;
        for m in [1.5, 2.0, 5.0, 10.0] {
            let t = trip_time(curve, spec.tds, m).expect("above pickup");
            let stepped = stepped_trip(&spec, m, dt).expect("trips");
            println!("{name:20} {m:5.1} {t:10.4} {stepped:10.4}");
        }
    }

    // A 0.3 s sag to 0.4 pu trips the fast element (0.45 pu, 0.16 s); a
    // 0.1 s sag does not.
    let uv2 = VoltageRelaySpec::uv2("B", RelayTarget::Source("pv".into()));
    for sag_s in [0.1, 0.3] {
        let mut state = RelayState::default();
        let trip = (0..1_000).find_map(|k| {
            let now = k as f64 * dt;
            let v = if (0.5..0.5 + sag_s).contains(&now) { 0.4 } else { 1.0 };
            uv_step("UV2", &uv2, &mut state, v, dt, now).map(|t| t.time_s)
        });
        match trip {
            Some(t) => println!("sag {sag_s:.1} s: UV2 trips at {t:.3} s"),
            None => println!("sag {sag_s:.1} s: UV2 rides through"),
        }
    }
}
