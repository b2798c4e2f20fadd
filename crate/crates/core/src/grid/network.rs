//! Nodal phasor solution of the electrical network.
//!
//! Voltage sources (utility, gensets) enter as Norton equivalents in the bus
//! admittance matrix. Loads and inverters are nonlinear current injections
//! `I(V)`; `Y V = I_norton + I(V)` is solved by Newton-Raphson, warm-started
//! from the previous step. The admittance matrix of the energized buses is
//! cached per switching topology.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::model::{GridModel, SourceKind};
use super::state::{DynamicState, SourceDynamics};
use super::GridError;

/// Newton iteration cap; hitting it is treated as voltage collapse.
pub const MAX_ITERATIONS: usize = 50;
/// Per-bus power mismatch at which the iteration is accepted.
pub const TOLERANCE: f64 = 1e-10;
/// Newton step size (pu voltage) below which the iteration has stalled at
/// rounding level.
const STEP_TOLERANCE: f64 = 1e-13;
/// Below this voltage constant-power loads become constant impedance.
pub const LOAD_CONVERSION_PU: f64 = 0.3;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSolution {
    pub voltages: Vec<Complex64>,
    /// Island index of each energized bus; `None` for buses in dead islands.
    pub island: Vec<Option<usize>>,
    /// Current from `from` to `to`, zero when open.
    pub branch_current: Vec<Complex64>,
    /// Current injected into the bus by each source.
    pub source_current: Vec<Complex64>,
    /// Complex power delivered at each source terminal.
    pub source_power: Vec<Complex64>,
    pub load_power: Vec<Complex64>,
    /// Power absorbed by each active fault shunt, in `state.faults` order.
    pub fault_power: Vec<Complex64>,
    /// Whether each source was online with its breaker closed.
    pub source_connected: Vec<bool>,
    pub iterations: usize,
    pub residual: f64,
}

impl NetworkSolution {
    pub fn is_energized(&self, bus: usize) -> bool {
        self.island[bus].is_some()
    }

    pub fn has_dead_island(&self) -> bool {
        self.island.iter().any(Option::is_none)
    }

    pub fn shares_island_with_utility(&self, model: &GridModel, source: usize) -> bool {
        let Some(island) = self.island[model.sources[source].bus] else {
            return false;
        };
        model.sources.iter().enumerate().any(|(i, s)| {
            matches!(s.kind, SourceKind::Utility(_))
                && self.island[s.bus] == Some(island)
                && self.source_connected[i]
        })
    }

    /// Series losses plus fault dissipation, per unit.
    pub fn losses(&self, model: &GridModel) -> Complex64 {
        let series: Complex64 = model
            .branches
            .iter()
            .zip(&self.branch_current)
            .map(|(b, i)| b.impedance * i.norm_sqr())
            .sum();
        series + self.fault_power.iter().sum::<Complex64>()
    }

    /// Σ source injections − Σ loads − losses, per unit.
    pub fn power_balance_residual(&self, model: &GridModel) -> f64 {
        let gen: Complex64 = self.source_power.iter().sum();
        let load: Complex64 = self.load_power.iter().sum();
        (gen - load - self.losses(model)).norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Topology {
    branch_closed: Vec<bool>,
    source_connected: Vec<bool>,
    faults: Vec<(usize, u64, u64)>,
}

#[derive(Debug, Clone)]
struct Factored {
    topology: Topology,
    island: Vec<Option<usize>>,
    /// Compact index of each energized bus.
    compact: Vec<Option<usize>>,
    n: usize,
    /// Row-major admittance matrix over energized buses.
    y: Vec<Complex64>,
}

/// Network solver that keeps the assembled admittance matrix between calls.
#[derive(Debug, Clone, Default)]
pub struct NetworkSolver {
    cache: Option<Factored>,
}

fn branch_closed(model: &GridModel, state: &DynamicState, branch: usize) -> bool {
    model.branches[branch]
        .breaker
        .is_none_or(|b| state.breaker_closed[b])
}

pub(crate) fn source_connected(model: &GridModel, state: &DynamicState, source: usize) -> bool {
    state.sources[source].online
        && model.sources[source]
            .breaker
            .is_none_or(|b| state.breaker_closed[b])
}

/// Source admittance of a voltage source on the system base.
pub(crate) fn source_admittance(model: &GridModel, source: usize) -> Option<Complex64> {
    match &model.sources[source].kind {
        SourceKind::Utility(u) => Some(Complex64::new(u.r_pu, u.x_pu).inv()),
        SourceKind::Genset(g) => {
            let x_sys = g.subtransient_x_pu * model.base_mva * 1000.0 / g.rated_kw;
            Some(Complex64::new(0.0, x_sys).inv())
        }
        SourceKind::Inverter(_) => None,
    }
}

/// Internal EMF phasor of a voltage source.
pub(crate) fn source_emf(model: &GridModel, state: &DynamicState, source: usize) -> Complex64 {
    match (&model.sources[source].kind, &state.sources[source].dynamics) {
        (SourceKind::Utility(u), _) => Complex64::new(u.voltage_pu, 0.0),
        (SourceKind::Genset(_), SourceDynamics::Genset(g)) => {
            Complex64::from_polar(g.emf_pu, g.rotor_angle_rad)
        }
        _ => ZERO,
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

impl NetworkSolver {
    pub fn new() -> Self {
        Self::default()
    }

    fn topology(model: &GridModel, state: &DynamicState) -> Topology {
        Topology {
            branch_closed: (0..model.branches.len())
                .map(|b| branch_closed(model, state, b))
                .collect(),
            source_connected: (0..model.sources.len())
                .map(|s| source_connected(model, state, s))
                .collect(),
            faults: state
                .faults
                .iter()
                .map(|f| (f.bus, f.impedance.re.to_bits(), f.impedance.im.to_bits()))
                .collect(),
        }
    }

    fn factor(model: &GridModel, state: &DynamicState, topology: Topology) -> Result<Factored, GridError> {
        let nb = model.buses.len();
        let mut parent: Vec<usize> = (0..nb).collect();
        for (b, br) in model.branches.iter().enumerate() {
            if topology.branch_closed[b] {
                let (x, y) = (find(&mut parent, br.from), find(&mut parent, br.to));
                if x != y {
                    parent[x.max(y)] = x.min(y);
                }
            }
        }
        let mut energized_root = vec![false; nb];
        for (s, src) in model.sources.iter().enumerate() {
            if topology.source_connected[s] && src.is_voltage_source() {
                let r = find(&mut parent, src.bus);
                energized_root[r] = true;
            }
        }
        let mut island_of_root = vec![None; nb];
        let mut next_island = 0;
        let mut island = vec![None; nb];
        let mut compact = vec![None; nb];
        let mut n = 0;
        for bus in 0..nb {
            let r = find(&mut parent, bus);
            if !energized_root[r] {
                continue;
            }
            let id = *island_of_root[r].get_or_insert_with(|| {
                next_island += 1;
                next_island - 1
            });
            island[bus] = Some(id);
            compact[bus] = Some(n);
            n += 1;
        }

        let mut y = DMatrix::<Complex64>::zeros(n, n);
        for (b, br) in model.branches.iter().enumerate() {
            if !topology.branch_closed[b] {
                continue;
            }
            let (Some(i), Some(j)) = (compact[br.from], compact[br.to]) else {
                continue;
            };
            let yb = br.impedance.inv();
            y[(i, i)] += yb;
            y[(j, j)] += yb;
            y[(i, j)] -= yb;
            y[(j, i)] -= yb;
        }
        for s in 0..model.sources.len() {
            if !topology.source_connected[s] {
                continue;
            }
            if let (Some(ys), Some(i)) = (source_admittance(model, s), compact[model.sources[s].bus]) {
                y[(i, i)] += ys;
            }
        }
        for f in &state.faults {
            if let Some(i) = compact[f.bus] {
                y[(i, i)] += f.impedance.inv();
            }
        }
        if n > 0 && y.clone().lu().determinant().norm() == 0.0 {
            return Err(GridError::SingularNetwork);
        }
        let y = (0..n)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .map(|(r, c)| y[(r, c)])
            .collect();
        Ok(Factored {
            topology,
            island,
            compact,
            n,
            y,
        })
    }

    /// Solves bus voltages and element flows for the given state.
    pub fn solve(&mut self, model: &GridModel, state: &DynamicState) -> Result<NetworkSolution, GridError> {
        let topology = Self::topology(model, state);
        if self.cache.as_ref().is_none_or(|c| c.topology != topology) {
            self.cache = Some(Self::factor(model, state, topology)?);
        }
        let f = self.cache.as_ref().expect("factored above");
        solve_factored(model, state, f)
    }
}

/// Current drawn by each load and injected by each inverter at voltages `v`,
/// accumulated per compact bus (injection positive).
fn element_injections(
    model: &GridModel,
    state: &DynamicState,
    f: &Factored,
    v: &[Complex64],
    out: &mut [Complex64],
) {
    out.fill(ZERO);
    for (l, load) in model.loads.iter().enumerate() {
        let ls = &state.loads[l];
        let Some(i) = f.compact[load.bus] else { continue };
        if !ls.connected {
            continue;
        }
        out[i] -= load_current(model, load.p_kw, load.q_kvar, v[i]);
    }
    for (s, src) in model.sources.iter().enumerate() {
        if !f.topology.source_connected[s] {
            continue;
        }
        let Some(i) = f.compact[src.bus] else { continue };
        if let (SourceKind::Inverter(spec), SourceDynamics::Inverter(inv)) =
            (&src.kind, &state.sources[s].dynamics)
        {
            out[i] += inverter_current(model, spec.rated_kva, spec.current_limit, inv.p_filt_kw, inv.q_filt_kvar, v[i]);
        }
    }
}

fn load_current(model: &GridModel, p_kw: f64, q_kvar: f64, v: Complex64) -> Complex64 {
    let s = Complex64::new(model.kw_to_pu(p_kw), model.kw_to_pu(q_kvar));
    if v.norm() >= LOAD_CONVERSION_PU {
        (s / v).conj()
    } else {
        s.conj() * v / (LOAD_CONVERSION_PU * LOAD_CONVERSION_PU)
    }
}

/// Inverter current for a P/Q reference, clipped to `limit` × rated current.
pub(crate) fn inverter_current(
    model: &GridModel,
    rated_kva: f64,
    limit: f64,
    p_kw: f64,
    q_kvar: f64,
    v: Complex64,
) -> Complex64 {
    let vm = v.norm();
    if vm < 1e-9 {
        return ZERO;
    }
    let s = Complex64::new(model.kw_to_pu(p_kw), model.kw_to_pu(q_kvar));
    let i = (s / v).conj();
    let i_max = limit * model.kw_to_pu(rated_kva);
    let im = i.norm();
    if im > i_max {
        i * (i_max / im)
    } else {
        i
    }
}

/// Max per-bus power mismatch |V|·|Y V − I_src − I(V)| over compact buses.
fn mismatch(f: &Factored, norton: &[Complex64], v: &[Complex64], inj: &[Complex64], out: &mut [Complex64]) -> f64 {
    let n = f.n;
    let mut worst: f64 = 0.0;
    for r in 0..n {
        let yv: Complex64 = f.y[r * n..(r + 1) * n].iter().zip(v).map(|(y, v)| y * v).sum();
        out[r] = yv - norton[r] - inj[r];
        worst = worst.max(v[r].norm() * out[r].norm());
    }
    worst
}

fn solve_factored(model: &GridModel, state: &DynamicState, f: &Factored) -> Result<NetworkSolution, GridError> {
    let n = f.n;
    let nb = model.buses.len();

    let mut norton = vec![ZERO; n];
    for s in 0..model.sources.len() {
        if !f.topology.source_connected[s] {
            continue;
        }
        if let (Some(ys), Some(i)) = (source_admittance(model, s), f.compact[model.sources[s].bus]) {
            norton[i] += ys * source_emf(model, state, s);
        }
    }

    // Warm start from the previous solution. After a topology change the
    // previous point can sit in the basin of a spurious low-voltage
    // stationary point, so a failed warm start is retried from the EMFs.
    let mut v = vec![ZERO; n];
    for bus in 0..nb {
        if let Some(i) = f.compact[bus] {
            v[i] = state.bus_voltage.get(bus).copied().unwrap_or(ZERO);
        }
    }
    let warm = v.iter().any(|x| *x != ZERO);
    if !warm {
        emf_start(model, state, f, &mut v);
    }
    let solved = match newton(model, state, f, &norton, v) {
        Err(GridError::NoConvergence { iterations, .. }) if warm => {
            let mut cold = vec![ZERO; n];
            emf_start(model, state, f, &mut cold);
            let (v, more, residual) = newton(model, state, f, &norton, cold)?;
            (v, iterations + more, residual)
        }
        other => other?,
    };
    finish(model, state, f, solved)
}

/// Starts every bus at the EMF of a voltage source in its island.
fn emf_start(model: &GridModel, state: &DynamicState, f: &Factored, v: &mut [Complex64]) {
    let nb = model.buses.len();
    for s in 0..model.sources.len() {
        if !f.topology.source_connected[s] || !model.sources[s].is_voltage_source() {
            continue;
        }
        let emf = source_emf(model, state, s);
        let island = f.island[model.sources[s].bus];
        for bus in 0..nb {
            if let (Some(i), true) = (f.compact[bus], f.island[bus] == island) {
                if v[i] == ZERO {
                    v[i] = emf;
                }
            }
        }
    }
}

fn newton(
    model: &GridModel,
    state: &DynamicState,
    f: &Factored,
    norton: &[Complex64],
    mut v: Vec<Complex64>,
) -> Result<(Vec<Complex64>, usize, f64), GridError> {
    let n = f.n;
    // Newton-Raphson on the real form of Y V − I_src − I(V) = 0. Element
    // currents depend only on their own bus voltage, so their Jacobian is
    // block diagonal and is taken by perturbing every bus at once.
    const H: f64 = 1e-7;
    let mut inj = vec![ZERO; n];
    let mut r = vec![ZERO; n];
    let mut trial = vec![ZERO; n];
    let mut scratch = vec![ZERO; n];
    let mut d_re = [vec![ZERO; n], vec![ZERO; n]];
    let mut d_im = [vec![ZERO; n], vec![ZERO; n]];
    element_injections(model, state, f, &v, &mut inj);
    let mut residual = if n > 0 { mismatch(f, norton, &v, &inj, &mut r) } else { 0.0 };
    let mut iterations = 0;
    let mut step = f64::INFINITY;
    // Very stiff sources put a rounding floor under the mismatch; a vanishing
    // Newton step with a small mismatch is accepted as converged too.
    let converged = |residual: f64, step: f64| residual < TOLERANCE || (step < STEP_TOLERANCE && residual < 1e-6);
    while !converged(residual, step) && iterations < MAX_ITERATIONS {
        iterations += 1;
        for (k, sign) in [1.0, -1.0].into_iter().enumerate() {
            let vp: Vec<_> = v.iter().map(|x| x + Complex64::new(sign * H, 0.0)).collect();
            element_injections(model, state, f, &vp, &mut d_re[k]);
            let vp: Vec<_> = v.iter().map(|x| x + Complex64::new(0.0, sign * H)).collect();
            element_injections(model, state, f, &vp, &mut d_im[k]);
        }
        let mut jac = DMatrix::<f64>::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let y = f.y[i * n + j];
                jac[(i, j)] = y.re;
                jac[(i, n + j)] = -y.im;
                jac[(n + i, j)] = y.im;
                jac[(n + i, n + j)] = y.re;
            }
            let di_dre = (d_re[0][i] - d_re[1][i]) / (2.0 * H);
            let di_dim = (d_im[0][i] - d_im[1][i]) / (2.0 * H);
            jac[(i, i)] -= di_dre.re;
            jac[(i, n + i)] -= di_dim.re;
            jac[(n + i, i)] -= di_dre.im;
            jac[(n + i, n + i)] -= di_dim.im;
        }
        let rhs = nalgebra::DVector::from_iterator(
            2 * n,
            r.iter().map(|c| -c.re).chain(r.iter().map(|c| -c.im)),
        );
        let Some(dx) = jac.lu().solve(&rhs) else {
            return Err(GridError::SingularNetwork);
        };
        // Backtrack when a full step would increase the mismatch.
        let mut alpha = 1.0;
        loop {
            for i in 0..n {
                trial[i] = v[i] + alpha * Complex64::new(dx[i], dx[n + i]);
            }
            element_injections(model, state, f, &trial, &mut inj);
            let res = mismatch(f, norton, &trial, &inj, &mut scratch);
            if res < residual || alpha < 1e-3 {
                residual = res;
                step = alpha * dx.amax();
                break;
            }
            alpha *= 0.5;
        }
        std::mem::swap(&mut v, &mut trial);
        std::mem::swap(&mut r, &mut scratch);
        if !residual.is_finite() {
            return Err(GridError::NonFinite);
        }
    }
    if !converged(residual, step) {
        return Err(GridError::NoConvergence {
            iterations,
            residual,
        });
    }
    Ok((v, iterations, residual))
}

fn finish(
    model: &GridModel,
    state: &DynamicState,
    f: &Factored,
    (v, iterations, residual): (Vec<Complex64>, usize, f64),
) -> Result<NetworkSolution, GridError> {
    let nb = model.buses.len();
    let mut voltages = vec![ZERO; nb];
    for bus in 0..nb {
        if let Some(i) = f.compact[bus] {
            voltages[bus] = v[i];
        }
    }
    let branch_current = model
        .branches
        .iter()
        .enumerate()
        .map(|(b, br)| {
            if f.topology.branch_closed[b] {
                (voltages[br.from] - voltages[br.to]) / br.impedance
            } else {
                ZERO
            }
        })
        .collect();
    let mut source_current = vec![ZERO; model.sources.len()];
    let mut source_power = vec![ZERO; model.sources.len()];
    for (s, src) in model.sources.iter().enumerate() {
        if !f.topology.source_connected[s] || f.compact[src.bus].is_none() {
            continue;
        }
        let vb = voltages[src.bus];
        let i = match (&src.kind, &state.sources[s].dynamics) {
            (SourceKind::Inverter(spec), SourceDynamics::Inverter(inv)) => {
                inverter_current(model, spec.rated_kva, spec.current_limit, inv.p_filt_kw, inv.q_filt_kvar, vb)
            }
            _ => {
                let ys = source_admittance(model, s).expect("voltage source");
                ys * (source_emf(model, state, s) - vb)
            }
        };
        source_current[s] = i;
        source_power[s] = vb * i.conj();
    }
    let load_power = model
        .loads
        .iter()
        .zip(&state.loads)
        .map(|(load, ls)| {
            if !ls.connected || f.compact[load.bus].is_none() {
                return ZERO;
            }
            let vb = voltages[load.bus];
            vb * load_current(model, load.p_kw, load.q_kvar, vb).conj()
        })
        .collect();
    let fault_power = state
        .faults
        .iter()
        .map(|flt| {
            let vb = voltages[flt.bus];
            vb * (vb / flt.impedance).conj()
        })
        .collect();

    Ok(NetworkSolution {
        voltages,
        island: f.island.clone(),
        branch_current,
        source_current,
        source_power,
        load_power,
        fault_power,
        source_connected: f.topology.source_connected.clone(),
        iterations,
        residual,
    })
}

/// One-shot solve without a persistent factor cache.
pub fn solve_network(model: &GridModel, state: &DynamicState) -> Result<NetworkSolution, GridError> {
    NetworkSolver::new().solve(model, state)
}
