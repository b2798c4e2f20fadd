//! Frequency nadir against shed-command delay, swept in parallel over one
//! built-in scenario. Prints the same columns as `gridsurge batch`.
//!
//!     cargo run --release --example delay_sweep

use gridsurge::engine::{run_scenario, summarize};
use gridsurge::scenario::{builtin, parse_scenario, AttackSpec};
use rayon::prelude::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = parse_scenario(builtin("opal-dos-5")?)?;
    let delays: Vec<f64> = (0..=16).map(f64::from).collect();

    let rows: Vec<_> = delays
        .par_iter()
        .map(|&d| {
            let mut s = base.clone();
            s.scenario.duration_s = 40.0;
            for a in &mut s.attacks {
                if let AttackSpec::DosFixedDelay { delay_s, .. } = a {
                    *delay_s = d;
                }
            }
            let summary = summarize(&run_scenario(&s)?)?;
            Ok::<_, Box<dyn std::error::Error + Send + Sync>>((d, summary))
        })
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;

    println!("{:>7} {:>10} {:>9} {:>7} {:>7} {:>12} {:>9}", "delay", "nadir Hz", "at s", "<56Hz", "<55Hz", "overload s", "blackout");
    for (d, s) in rows {
        println!(
            "{d:7.1} {:10.3} {:9.3} {:>7} {:>7} {:12.3} {:>9}",
            s.nadir_hz, s.nadir_time_s, s.crossings.below_56_hz, s.crossings.below_55_hz, s.overload_duration_s, s.blackout
        );
    }
    Ok(())
}
