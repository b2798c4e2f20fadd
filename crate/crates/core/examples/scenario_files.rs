//! Writing a scenario by hand: a minimal grid-tied genset that islands,
//! the errors the parser gives for common mistakes, and the canonical form
//! that `gridsurge validate --print` emits.
//!
//!     cargo run --example scenario_files

use gridsurge::engine::{run_scenario, summarize};
use gridsurge::scenario::{parse_scenario, print_scenario};

const MINIMAL: &str = r#"
[scenario]
name = "minimal"
duration_s = 5.0

[[network.buses]]
id = "A"
kv = 0.48

[network.breakers.PCC]

[network.sources.grid]
kind = "utility"
bus = "A"
breaker = "PCC"

[network.sources.gen]
kind = "genset"
bus = "A"
rated_kw = 500.0
p_ref_kw = 300.0

[network.loads.site]
bus = "A"
p_kw = 400.0
class = "commercial"

[[events]]
at_s = 1.0
kind = "breaker_open"
breaker = "PCC"
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = parse_scenario(MINIMAL)?;
    let summary = summarize(&run_scenario(&s)?)?;
    println!("{}: nadir {:.3} Hz, final {:.3} Hz", s.scenario.name, summary.nadir_hz, summary.final_frequency_hz);

    let mistakes = [
        ("syntax", MINIMAL.replace("rated_kw = 500.0", "rated_kw = ")),
        ("unknown key", MINIMAL.replace("p_ref_kw", "p_ref")),
        ("dangling reference", MINIMAL.replace("\"breaker_open\"\nbreaker = \"PCC\"", "\"breaker_open\"\nbreaker = \"nowhere\"")),
        ("critical and sheddable", MINIMAL.replace("class = \"commercial\"", "class = \"critical\"\nsheddable = true")),
    ];
    for (what, text) in mistakes {
        match parse_scenario(&text) {
            Ok(_) => println!("{what}: accepted"),
            Err(e) => println!("{what}: {e}"),
        }
    }

    println!("--- canonical form ---\n{}", print_scenario(&s));
    Ok(())
}
