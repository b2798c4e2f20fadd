use proptest::prelude::*;

use gridsurge::cybernet::Verdict;
use gridsurge::engine::{compare_runs, run_scenario, summarize, SimResult, Termination};
use gridsurge::event_log::EventKind;
use gridsurge::grid::model::LoadClass;
use gridsurge::grid::SourceSpec;
use gridsurge::report::{csv_string, parse_csv};
use gridsurge::scenario::{builtin, builtin_names, parse_scenario, print_scenario, AttackSpec, Scenario};

fn scenario(name: &str) -> Scenario {
    builtin(name).and_then(parse_scenario).unwrap()
}

fn run(s: &Scenario) -> SimResult {
    run_scenario(s).unwrap()
}

/// `opal-dos-5` with the residential delay replaced.
fn opal(delay: f64, horizon: f64) -> Scenario {
    let mut s = scenario("opal-dos-5");
    s.scenario.duration_s = horizon;
    for a in &mut s.attacks {
        if let AttackSpec::DosFixedDelay { delay_s, .. } = a {
            *delay_s = delay;
        }
    }
    s
}

fn first(r: &SimResult, pred: impl Fn(&EventKind) -> bool) -> Option<f64> {
    r.log.first_time(pred)
}

#[test]
fn halving_dt_moves_the_nadir_by_less_than_a_hundredth() {
    let mut coarse = scenario("opal-dos-15");
    coarse.scenario.duration_s = 25.0;
    let mut fine = coarse.clone();
    fine.scenario.dt_s /= 2.0;
    let a = summarize(&run(&coarse)).unwrap().nadir_hz;
    let b = summarize(&run(&fine)).unwrap().nadir_hz;
    assert!((a - b).abs() < 0.01, "{a} vs {b}");
}

#[test]
fn critical_load_is_never_shed() {
    for name in builtin_names() {
        let s = scenario(name);
        let critical: Vec<_> = s
            .network
            .loads
            .iter()
            .filter(|(_, l)| l.class == LoadClass::Critical)
            .map(|(id, _)| id.clone())
            .collect();
        let r = run(&s);
        for e in r.log.iter() {
            if let EventKind::LoadShed { load } | EventKind::ShedIssued { load } = &e.kind {
                assert!(!critical.contains(load), "{name}: critical load {load} shed at {}", e.time_s);
            }
        }
    }
}

#[test]
fn csv_has_one_row_per_step_plus_the_initial_sample() {
    for name in ["opal-dos-0", "rtds-f1", "rtds-pq"] {
        let s = scenario(name);
        let r = run(&s);
        assert_eq!(r.status, Termination::Completed);
        let rows = csv_string(&r).lines().count() - 1;
        let expected = (s.scenario.duration_s / s.scenario.dt_s + 1e-9).floor() as usize + 1;
        assert_eq!(rows, expected, "{name}");
    }
}

#[test]
fn csv_round_trips_through_the_reader() {
    let r = run(&scenario("opal-dos-2"));
    let back = parse_csv(&csv_string(&r), "opal-dos-2").unwrap();
    assert_eq!(back.data, r.data);
    assert_eq!(back.columns, r.columns);
}

#[test]
fn shipped_scenarios_survive_print_and_parse() {
    for name in builtin_names() {
        let s = scenario(name);
        assert_eq!(parse_scenario(&print_scenario(&s)).unwrap(), s, "{name}");
    }
}

#[test]
fn breaker_delay_first_diverges_at_the_undelayed_breaker_due_time() {
    let delayed = scenario("rtds-f1");
    let mut prompt = delayed.clone();
    for a in &mut prompt.attacks {
        if let AttackSpec::BreakerDelay { delay_s, .. } = a {
            *delay_s = 0.0;
        }
    }
    let base = run(&prompt);
    let due = base
        .log
        .iter()
        .find_map(|e| match &e.kind {
            EventKind::BreakerCommand { breaker, due_s, .. } if breaker == "R1" => Some(*due_s),
            _ => None,
        })
        .unwrap();
    let trip = first(&base, |k| matches!(k, EventKind::RelayTrip { relay, .. } if relay == "R1")).unwrap();
    assert!((due - (trip + 0.05)).abs() < 1e-9);
    let diff = compare_runs(&base, &run(&delayed)).unwrap();
    let t = diff.first_divergence_s.unwrap();
    // The open breaker first shows in the sample recorded at its due step.
    assert!((t - due).abs() < 1e-9, "diverged at {t}, breaker due {due}");
}

#[test]
fn frames_never_act_before_they_arrive() {
    for name in ["opal-dos-5", "rtds-f2", "rtds-pq"] {
        let r = run(&scenario(name));
        let s = scenario(name);
        for e in r.log.iter() {
            let EventKind::LoadShed { load } = &e.kind else { continue };
            let owner = &s
                .cyber
                .as_ref()
                .unwrap()
                .outstations
                .iter()
                .find(|o| o.points.iter().any(|p| &p.target == load))
                .unwrap()
                .name;
            let arrived = r.trace.iter().any(|f| {
                &f.dst == owner
                    && f.verdict != Verdict::Dropped
                    && f.t_deliver.is_some_and(|d| d <= e.time_s + 1e-9)
            });
            assert!(arrived, "{name}: {load} shed at {} before any frame reached {owner}", e.time_s);
        }
        for f in &r.trace {
            if let Some(d) = f.t_deliver {
                assert!(d >= f.t_send, "{name}: frame delivered before it was sent");
            }
        }
        // Networked trips: the breaker command follows the outstation frame.
        for e in r.log.iter() {
            if let EventKind::BreakerCommand { breaker, .. } = &e.kind {
                if breaker == "R2" {
                    assert!(r.trace.iter().any(|f| f.dst == "feeder" && f.t_deliver.is_some_and(|d| d <= e.time_s + 1e-9)));
                }
            }
        }
    }
}

#[test]
fn batch_of_delays_never_recovers_after_a_blackout() {
    let mut blacked_out = false;
    for d in [0.0, 2.0, 5.0, 8.0, 10.0, 12.0, 15.0, 20.0] {
        let r = run(&opal(d, 40.0));
        if blacked_out {
            assert!(r.is_blackout(), "delay {d} recovered after a shorter delay blacked out");
        }
        blacked_out |= r.is_blackout();
    }
    assert!(blacked_out);
}

fn genset_mut(s: &mut Scenario) -> &mut gridsurge::grid::model::GensetSpec {
    match s.network.sources.get_mut("genset") {
        Some(SourceSpec::Genset(g)) => g,
        _ => panic!("no genset"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    /// Shed application time − command issue time = link latency + DoS delay,
    /// to within one step.
    #[test]
    fn shed_time_identity(delay in 0.0f64..8.0) {
        let s = opal(delay, 12.0 + delay);
        let dt = s.scenario.dt_s;
        let latency = s.cyber.as_ref().unwrap().link_defaults.latency_s;
        let r = run(&s);
        let issued = first(&r, |k| matches!(k, EventKind::ShedIssued { load } if load == "residential")).unwrap();
        let shed = first(&r, |k| matches!(k, EventKind::LoadShed { load } if load == "residential")).unwrap();
        prop_assert!(((shed - issued) - (latency + delay)).abs() <= dt + 1e-9,
            "issued {issued}, shed {shed}, expected gap {}", latency + delay);
    }

    #[test]
    fn blackout_is_monotone_in_delay(d in 0.0f64..20.0, extra in 0.0f64..10.0) {
        let a = run(&opal(d, 45.0)).is_blackout();
        let b = run(&opal(d + extra, 45.0)).is_blackout();
        prop_assert!(!a || b, "blackout at {d} s but not at {} s", d + extra);
    }

    /// Longer delays give strictly deeper nadirs across the documented
    /// genset parameter ranges.
    #[test]
    fn nadir_ordering_holds_across_genset_parameters(
        h in 1.0f64..3.0,
        damping in 0.5f64..2.0,
        droop in 0.03f64..0.07,
        tg in 0.2f64..1.0,
    ) {
        let nadir = |delay: f64| {
            let mut s = opal(delay, 10.0 + delay + 3.0);
            let g = genset_mut(&mut s);
            g.inertia_s = h;
            g.damping_pu = damping;
            g.droop_pu = droop;
            g.governor_tc_s = tg;
            summarize(&run(&s)).unwrap().nadir_hz
        };
        let (n2, n5, n15) = (nadir(2.0), nadir(5.0), nadir(15.0));
        prop_assert!(n2 > n5 && n5 > n15, "{n2} {n5} {n15}");
    }
}
