use num_complex::Complex64;

use super::model::{GridModel, SourceKind};
use super::network::NetworkSolution;

/// Rotor and governor state of a genset, per unit on the machine base.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GensetState {
    /// Speed deviation Δω.
    pub speed_dev_pu: f64,
    pub mech_power_pu: f64,
    pub power_ref_pu: f64,
    /// Internal EMF angle relative to the nominal-frequency reference frame.
    pub rotor_angle_rad: f64,
    pub emf_pu: f64,
    /// Electrical output from the most recent network solution.
    pub elec_power_pu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverterState {
    pub p_set_kw: f64,
    pub q_set_kvar: f64,
    /// First-order filtered reference actually fed to the current controller.
    pub p_filt_kw: f64,
    pub q_filt_kvar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceDynamics {
    Genset(GensetState),
    Inverter(InverterState),
    Utility,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceState {
    /// False once the source has been tripped by its own protection.
    pub online: bool,
    pub p_kw: f64,
    pub q_kvar: f64,
    /// Terminal current magnitude, per unit on the system base.
    pub current_pu: f64,
    pub dynamics: SourceDynamics,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadState {
    pub connected: bool,
    pub p_kw: f64,
    pub q_kvar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActiveFault {
    pub bus: usize,
    pub impedance: Complex64,
}

/// Time-evolving state of the electrical layer.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicState {
    pub time_s: f64,
    pub breaker_closed: Vec<bool>,
    pub sources: Vec<SourceState>,
    pub loads: Vec<LoadState>,
    pub faults: Vec<ActiveFault>,
    pub bus_voltage: Vec<Complex64>,
    /// True when the reference genset shares no island with a utility source.
    pub islanded: bool,
}

impl DynamicState {
    /// Default state before any operating point has been computed: every
    /// breaker in its configured position and every element at its setpoint.
    pub(crate) fn unsolved(model: &GridModel) -> Self {
        let sources = model
            .sources
            .iter()
            .map(|s| {
                let dynamics = match &s.kind {
                    SourceKind::Genset(g) => SourceDynamics::Genset(GensetState {
                        speed_dev_pu: 0.0,
                        mech_power_pu: g.p_ref_kw / g.rated_kw,
                        power_ref_pu: g.p_ref_kw / g.rated_kw,
                        rotor_angle_rad: 0.0,
                        emf_pu: g.v_set_pu,
                        elec_power_pu: 0.0,
                    }),
                    SourceKind::Inverter(i) => SourceDynamics::Inverter(InverterState {
                        p_set_kw: i.p_kw,
                        q_set_kvar: i.q_kvar,
                        p_filt_kw: i.p_kw,
                        q_filt_kvar: i.q_kvar,
                    }),
                    SourceKind::Utility(_) => SourceDynamics::Utility,
                };
                SourceState {
                    online: true,
                    p_kw: 0.0,
                    q_kvar: 0.0,
                    current_pu: 0.0,
                    dynamics,
                }
            })
            .collect();
        Self {
            time_s: 0.0,
            breaker_closed: model.breakers.iter().map(|b| b.initially_closed).collect(),
            sources,
            loads: model
                .loads
                .iter()
                .map(|l| LoadState {
                    connected: true,
                    p_kw: l.p_kw,
                    q_kvar: l.q_kvar,
                })
                .collect(),
            faults: Vec::new(),
            bus_voltage: vec![Complex64::new(0.0, 0.0); model.buses.len()],
            islanded: false,
        }
    }

    pub fn genset(&self, source: usize) -> Option<&GensetState> {
        match &self.sources.get(source)?.dynamics {
            SourceDynamics::Genset(g) => Some(g),
            _ => None,
        }
    }

    pub fn genset_mut(&mut self, source: usize) -> Option<&mut GensetState> {
        match &mut self.sources.get_mut(source)?.dynamics {
            SourceDynamics::Genset(g) => Some(g),
            _ => None,
        }
    }

    pub fn inverter(&self, source: usize) -> Option<&InverterState> {
        match &self.sources.get(source)?.dynamics {
            SourceDynamics::Inverter(i) => Some(i),
            _ => None,
        }
    }

    pub fn inverter_mut(&mut self, source: usize) -> Option<&mut InverterState> {
        match &mut self.sources.get_mut(source)?.dynamics {
            SourceDynamics::Inverter(i) => Some(i),
            _ => None,
        }
    }

    /// System frequency, taken from the reference genset's speed. Without a
    /// genset the system follows the utility at nominal frequency.
    pub fn frequency_hz(&self, model: &GridModel) -> f64 {
        let dw = model
            .reference_genset()
            .and_then(|i| self.genset(i))
            .map_or(0.0, |g| g.speed_dev_pu);
        model.nominal_hz * (1.0 + dw)
    }

    /// Electrical loading of the reference genset relative to its rating.
    pub fn genset_loading_pu(&self, model: &GridModel) -> f64 {
        model
            .reference_genset()
            .and_then(|i| self.genset(i))
            .map_or(0.0, |g| g.elec_power_pu)
    }

    /// Copies measured quantities out of a network solution.
    pub fn absorb(&mut self, model: &GridModel, solution: &NetworkSolution) {
        self.bus_voltage.clone_from(&solution.voltages);
        for (i, src) in self.sources.iter_mut().enumerate() {
            let s = solution.source_power[i];
            src.p_kw = model.pu_to_kw(s.re);
            src.q_kvar = model.pu_to_kw(s.im);
            src.current_pu = solution.source_current[i].norm();
            if let (SourceDynamics::Genset(g), SourceKind::Genset(spec)) =
                (&mut src.dynamics, &model.sources[i].kind)
            {
                g.elec_power_pu = src.p_kw / spec.rated_kw;
            }
        }
        for (i, ld) in self.loads.iter_mut().enumerate() {
            let s = solution.load_power[i];
            ld.p_kw = model.pu_to_kw(s.re);
            ld.q_kvar = model.pu_to_kw(s.im);
        }
        self.islanded = match model.reference_genset() {
            Some(g) => !solution.shares_island_with_utility(model, g),
            None => false,
        };
    }
}
