//! Genset swing/governor and inverter filter dynamics.
//!
//! Per genset, on its machine base:
//!
//! ```text
//! 2H dΔω/dt = Pm − Pe − D·Δω
//! Tg dPm/dt = −(Pm − Pref + Δω/R),   0 ≤ Pm ≤ Pm_max
//!    dδ/dt  = 2π·f_nom·Δω
//! ```
//!
//! Inverter P/Q references follow their setpoints through a first-order
//! filter. The network is re-solved at each RK4 stage so that `Pe` sees the
//! stage's rotor angles and inverter references.

use std::f64::consts::PI;

use super::model::{GridModel, SourceKind};
use super::network::{source_admittance, NetworkSolution, NetworkSolver};
use super::state::{DynamicState, SourceDynamics};
use super::GridError;

/// Default integration step.
pub const DEFAULT_DT: f64 = 1e-3;

/// Packs the integrated variables of every online source into a flat vector.
fn pack(state: &DynamicState) -> Vec<f64> {
    let mut x = Vec::with_capacity(state.sources.len() * 3);
    for s in &state.sources {
        match &s.dynamics {
            SourceDynamics::Genset(g) => {
                x.extend([g.speed_dev_pu, g.mech_power_pu, g.rotor_angle_rad])
            }
            SourceDynamics::Inverter(i) => x.extend([i.p_filt_kw, i.q_filt_kvar]),
            SourceDynamics::Utility => {}
        }
    }
    x
}

fn unpack(state: &mut DynamicState, x: &[f64]) {
    let mut k = 0;
    for s in &mut state.sources {
        match &mut s.dynamics {
            SourceDynamics::Genset(g) => {
                g.speed_dev_pu = x[k];
                g.mech_power_pu = x[k + 1];
                g.rotor_angle_rad = x[k + 2];
                k += 3;
            }
            SourceDynamics::Inverter(i) => {
                i.p_filt_kw = x[k];
                i.q_filt_kvar = x[k + 1];
                k += 2;
            }
            SourceDynamics::Utility => {}
        }
    }
}

fn derivatives(model: &GridModel, state: &DynamicState, solution: &NetworkSolution) -> Vec<f64> {
    let omega_base = 2.0 * PI * model.nominal_hz;
    let mut dx = Vec::with_capacity(state.sources.len() * 3);
    for (i, (spec, s)) in model.sources.iter().zip(&state.sources).enumerate() {
        match (&spec.kind, &s.dynamics) {
            (SourceKind::Genset(gs), SourceDynamics::Genset(g)) => {
                if !s.online {
                    dx.extend([0.0; 3]);
                    continue;
                }
                let pe = model.pu_to_kw(solution.source_power[i].re) / gs.rated_kw;
                let d_speed = (g.mech_power_pu - pe - gs.damping_pu * g.speed_dev_pu)
                    / (2.0 * gs.inertia_s);
                let target = g.power_ref_pu - g.speed_dev_pu / gs.droop_pu;
                let mut d_pm = (target - g.mech_power_pu) / gs.governor_tc_s;
                if (g.mech_power_pu >= gs.pm_max_pu && d_pm > 0.0)
                    || (g.mech_power_pu <= 0.0 && d_pm < 0.0)
                {
                    d_pm = 0.0;
                }
                dx.extend([d_speed, d_pm, omega_base * g.speed_dev_pu]);
            }
            (SourceKind::Inverter(is), SourceDynamics::Inverter(inv)) => {
                if !s.online {
                    dx.extend([0.0; 2]);
                    continue;
                }
                dx.extend([
                    (inv.p_set_kw - inv.p_filt_kw) / is.filter_tc_s,
                    (inv.q_set_kvar - inv.q_filt_kvar) / is.filter_tc_s,
                ]);
            }
            _ => {}
        }
    }
    dx
}

fn axpy(x: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    x.iter().zip(k).map(|(x, k)| x + a * k).collect()
}

/// Advances the electrical state by one fixed step of classical RK4.
///
/// `start` may carry the network solution already computed for `state`; it is
/// reused for the first stage.
pub fn step_dynamics_with(
    model: &GridModel,
    state: &DynamicState,
    dt: f64,
    solver: &mut NetworkSolver,
    start: Option<&NetworkSolution>,
) -> Result<DynamicState, GridError> {
    let x0 = pack(state);
    let mut stage = state.clone();

    let mut eval = |stage: &mut DynamicState, x: &[f64]| -> Result<Vec<f64>, GridError> {
        unpack(stage, x);
        let sol = solver.solve(model, stage)?;
        stage.bus_voltage.clone_from(&sol.voltages);
        Ok(derivatives(model, stage, &sol))
    };

    let k1 = match start {
        Some(sol) => derivatives(model, state, sol),
        None => eval(&mut stage, &x0)?,
    };
    let k2 = eval(&mut stage, &axpy(&x0, dt / 2.0, &k1))?;
    let k3 = eval(&mut stage, &axpy(&x0, dt / 2.0, &k2))?;
    let k4 = eval(&mut stage, &axpy(&x0, dt, &k3))?;
    let x1: Vec<f64> = (0..x0.len())
        .map(|i| x0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    if x1.iter().any(|v| !v.is_finite()) {
        return Err(GridError::NonFinite);
    }

    let mut next = state.clone();
    next.bus_voltage = stage.bus_voltage;
    unpack(&mut next, &x1);
    for (spec, s) in model.sources.iter().zip(&mut next.sources) {
        if let (SourceKind::Genset(gs), SourceDynamics::Genset(g)) = (&spec.kind, &mut s.dynamics) {
            g.mech_power_pu = g.mech_power_pu.clamp(0.0, gs.pm_max_pu);
            g.rotor_angle_rad = (g.rotor_angle_rad + PI).rem_euclid(2.0 * PI) - PI;
        }
    }
    next.time_s = state.time_s + dt;
    Ok(next)
}

/// One RK4 step using a throwaway solver.
pub fn step_dynamics(model: &GridModel, state: &DynamicState, dt: f64) -> Result<DynamicState, GridError> {
    step_dynamics_with(model, state, dt, &mut NetworkSolver::new(), None)
}

/// Computes a consistent initial operating point.
///
/// A genset sharing its island with a utility or an earlier genset is
/// dispatched at `p_ref_kw` and unity power factor by solving for its rotor
/// angle and EMF. Otherwise it is the island's reference: its EMF is sized
/// for a `v_set_pu` terminal voltage and its power reference is taken from
/// the resulting load flow so that the run starts in equilibrium.
pub fn initialize(model: &GridModel, solver: &mut NetworkSolver) -> Result<(DynamicState, NetworkSolution), GridError> {
    let mut state = DynamicState::unsolved(model);
    let mut solution = solver.solve(model, &state)?;
    let dispatched: Vec<bool> = (0..model.sources.len())
        .map(|s| {
            matches!(model.sources[s].kind, SourceKind::Genset(_))
                && solution.island[model.sources[s].bus].is_some_and(|isl| {
                    model.sources[..s].iter().enumerate().any(|(o, other)| {
                        other.is_voltage_source()
                            && solution.source_connected[o]
                            && solution.island[other.bus] == Some(isl)
                    }) || model.sources[s + 1..].iter().enumerate().any(|(o, other)| {
                        matches!(other.kind, SourceKind::Utility(_))
                            && solution.source_connected[s + 1 + o]
                            && solution.island[other.bus] == Some(isl)
                    })
                })
        })
        .collect();

    for _ in 0..200 {
        let mut worst: f64 = 0.0;
        for s in 0..model.sources.len() {
            let SourceKind::Genset(spec) = &model.sources[s].kind else {
                continue;
            };
            if !solution.source_connected[s] {
                continue;
            }
            let vt = solution.voltages[model.sources[s].bus].norm();
            let ps = solution.source_power[s];
            let ys = source_admittance(model, s).expect("genset admittance").norm();
            let g = state.genset_mut(s).expect("genset state");
            if dispatched[s] {
                let p_target = model.kw_to_pu(spec.p_ref_kw);
                worst = worst.max((ps.re - p_target).abs()).max(ps.im.abs());
                g.rotor_angle_rad += (p_target - ps.re) / (g.emf_pu * vt * ys);
                g.emf_pu -= ps.im / (vt * ys);
            } else {
                worst = worst.max((vt - spec.v_set_pu).abs());
                g.emf_pu *= spec.v_set_pu / vt;
            }
        }
        solution = solver.solve(model, &state)?;
        state.absorb(model, &solution);
        if worst < 1e-12 {
            break;
        }
    }

    for s in 0..model.sources.len() {
        if let SourceKind::Genset(spec) = &model.sources[s].kind {
            let p = state.sources[s].p_kw / spec.rated_kw;
            let g = state.genset_mut(s).expect("genset state");
            if !dispatched[s] {
                g.power_ref_pu = p;
            }
            g.mech_power_pu = g.power_ref_pu;
        }
    }
    Ok((state, solution))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::fixtures::*;
    use crate::grid::model::*;

    /// Isolated 1 MW genset feeding a local constant-power load: the
    /// terminal is lossless, so Pe equals the load exactly.
    fn island(load_kw: f64, tune: impl FnOnce(&mut GensetSpec)) -> GridModel {
        let mut g = GensetSpec::new("A", 1000.0);
        tune(&mut g);
        let spec = network(&["A"], vec![], vec![("gen", SourceSpec::Genset(g))], vec![("ld", load("A", load_kw, 0.0))]);
        build_network(&spec).unwrap()
    }

    fn run(model: &GridModel, mut state: DynamicState, dt: f64, steps: usize, mut each: impl FnMut(usize, &DynamicState)) -> DynamicState {
        let mut solver = NetworkSolver::new();
        for k in 1..=steps {
            state = step_dynamics_with(model, &state, dt, &mut solver, None).unwrap();
            each(k, &state);
        }
        state
    }

    #[test]
    fn equilibrium_holds_frequency_flat() {
        let m = island(600.0, |g| g.damping_pu = 0.0);
        let (st, _) = initialize(&m, &mut NetworkSolver::new()).unwrap();
        run(&m, st, 1e-3, 2000, |_, s| {
            assert!(s.genset(0).unwrap().speed_dev_pu.abs() < 1e-12);
        });
    }

    #[test]
    fn swing_ramp_matches_closed_form() {
        let mut m = island(1000.0, |g| g.damping_pu = 0.0);
        if let SourceKind::Genset(g) = &mut m.sources[0].kind {
            g.governor_tc_s = f64::INFINITY; // frozen governor
        }
        let (mut st, _) = initialize(&m, &mut NetworkSolver::new()).unwrap();
        let g = st.genset_mut(0).unwrap();
        g.mech_power_pu = 0.9;
        g.power_ref_pu = 0.9;
        // 2H dΔω/dt = −0.1 with H = 1.5 s.
        let slope = -0.1 / 3.0;
        let dt = 1e-3;
        let end = run(&m, st, dt, 500, |k, s| {
            let dw = s.genset(0).unwrap().speed_dev_pu;
            assert!((dw - slope * k as f64 * dt).abs() < 1e-6, "step {k}: {dw}");
        });
        assert!((end.frequency_hz(&m) - 59.0).abs() < 1e-6 * 60.0);
    }

    #[test]
    fn droop_steady_state() {
        let m = island(600.0, |g| g.damping_pu = 0.0);
        let (mut st, _) = initialize(&m, &mut NetworkSolver::new()).unwrap();
        // Dispatch 0.5 pu against 0.6 pu of load: a 0.1 pu step.
        let g = st.genset_mut(0).unwrap();
        g.mech_power_pu = 0.5;
        g.power_ref_pu = 0.5;
        let end = run(&m, st, 1e-3, 40_000, |_, _| {});
        let dw = end.genset(0).unwrap().speed_dev_pu;
        assert!((dw - (-0.05 * 0.1)).abs() < 1e-4, "{dw}");
        assert!((end.frequency_hz(&m) - 59.7).abs() < 1e-4 * 60.0);
    }

    #[test]
    fn governor_ceiling_limits_mechanical_power() {
        let m = island(1100.0, |g| g.damping_pu = 1.0);
        let (mut st, _) = initialize(&m, &mut NetworkSolver::new()).unwrap();
        let g = st.genset_mut(0).unwrap();
        g.mech_power_pu = 0.8;
        g.power_ref_pu = 0.8;
        let end = run(&m, st, 1e-3, 5000, |_, s| {
            assert!(s.genset(0).unwrap().mech_power_pu <= 1.0);
        });
        assert_eq!(end.genset(0).unwrap().mech_power_pu, 1.0);
    }

    #[test]
    fn initialization_dispatches_grid_tied_genset() {
        let mut ut = UtilitySpec::new("A");
        ut.x_pu = 0.01;
        let mut g = GensetSpec::new("A", 1000.0);
        g.p_ref_kw = 800.0;
        let spec = network(
            &["A", "B"],
            vec![line("L", "A", "B", 0.01, 0.05)],
            vec![("gen", SourceSpec::Genset(g)), ("grid", SourceSpec::Utility(ut))],
            vec![("ld", load("B", 1200.0, 100.0))],
        );
        let m = build_network(&spec).unwrap();
        let (st, sol) = initialize(&m, &mut NetworkSolver::new()).unwrap();
        assert!((st.sources[0].p_kw - 800.0).abs() < 1e-6);
        assert!(st.sources[0].q_kvar.abs() < 1e-6);
        assert!((sol.voltages[0].norm() - 1.0).abs() < 0.01);
        // Starting in equilibrium: nothing moves.
        run(&m, st, 1e-3, 1000, |_, s| {
            assert!(s.genset(0).unwrap().speed_dev_pu.abs() < 1e-9);
        });
    }

    #[test]
    fn trajectories_are_bit_identical() {
        let go = || {
            let m = island(700.0, |_| {});
            let (mut st, _) = initialize(&m, &mut NetworkSolver::new()).unwrap();
            st.genset_mut(0).unwrap().power_ref_pu = 0.6;
            let mut trace = Vec::new();
            run(&m, st, 1e-3, 300, |_, s| trace.push(s.genset(0).unwrap().speed_dev_pu.to_bits()));
            trace
        };
        assert_eq!(go(), go());
    }
}
