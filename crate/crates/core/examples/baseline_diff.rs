//! Attack versus no-attack comparison on the delayed-breaker fault case:
//! a zero delay reproduces the baseline bit for bit, the 2 s delay
//! diverges when the undelayed breaker would have opened. Writes an SVG
//! overlay of the two runs.
//!
//!     cargo run --release --example baseline_diff [OUT_DIR]

use std::path::PathBuf;

use gridsurge::engine::{compare_runs, run_scenario};
use gridsurge::report::{default_panels, svg_overlay, write_atomic};
use gridsurge::scenario::{builtin, parse_scenario, AttackSpec, Scenario};

fn with_delay(base: &Scenario, delay: f64) -> Scenario {
    let mut s = base.clone();
    for a in &mut s.attacks {
        if let AttackSpec::BreakerDelay { delay_s, .. } = a {
            *delay_s = delay;
        }
    }
    s
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let attacked = parse_scenario(builtin("rtds-f1")?)?;
    let mut baseline = attacked.clone();
    baseline.attacks.clear();

    let base_run = run_scenario(&baseline)?;
    let null_run = run_scenario(&with_delay(&attacked, 0.0))?;
    let attack_run = run_scenario(&attacked)?;

    let null = compare_runs(&base_run, &null_run)?;
    println!("zero-delay attack vs no attack: identical = {}", null.identical());

    let diff = compare_runs(&base_run, &attack_run)?;
    println!("2 s breaker delay vs no attack:");
    println!("  first divergence {:?} s", diff.first_divergence_s);
    for c in diff.channels.iter().filter(|c| c.max_abs_deviation > 0.0) {
        println!("  {:18} max |dev| {:10.4}  from {:?} s", c.channel, c.max_abs_deviation, c.first_divergence_s);
    }

    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out".into()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("rtds-f1-overlay.svg");
    let svg = svg_overlay(&attack_run, Some(&base_run), &default_panels(&attack_run));
    write_atomic(&path, svg.as_bytes())?;
    println!("wrote {}", path.display());
    Ok(())
}
