//! Microgrid controller behaviour on a built-in scenario: islanding
//! detection, shed decisions, and when each shed command actually lands,
//! with and without a delay on the residential link.
//!
//!     cargo run --example controller_shedding

use gridsurge::engine::{run_scenario, summarize};
use gridsurge::event_log::EventKind;
use gridsurge::scenario::{apply_override, builtin, parse_scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for delay in ["0", "5"] {
        let mut table: toml::Table = builtin("opal-dos-5")?.parse()?;
        apply_override(&mut table, "scenario.duration_s=25")?;
        apply_override(&mut table, &format!("attacks.0.delay_s={delay}"))?;
        let scenario = parse_scenario(&toml::to_string(&table)?)?;
        let result = run_scenario(&scenario)?;

        println!("residential shed delayed {delay} s: {:?}", result.status);
        for e in result.log.iter() {
            let line = match &e.kind {
                EventKind::BreakerOpened { breaker } => format!("breaker {breaker} opened"),
                EventKind::Islanded => "microgrid islanded".into(),
                EventKind::ShedIssued { load } => format!("shed {load} issued"),
                EventKind::LoadShed { load } => format!("shed {load} applied"),
                EventKind::FrequencyAlarm { hz } => format!("frequency alarm at {hz:.3} Hz"),
                EventKind::Blackout { reason } => format!("blackout: {reason}"),
                _ => continue,
            };
            println!("  {:7.3} s  {line}", e.time_s);
        }
        let summary = summarize(&result)?;
        println!("  nadir {:.3} Hz at {:.3} s", summary.nadir_hz, summary.nadir_time_s);
    }
    Ok(())
}
