//! Electrical layer: network model, phasor solution, and source dynamics.

pub mod dynamics;
pub mod events;
pub mod model;
pub mod network;
pub mod state;

pub use dynamics::{initialize, step_dynamics, step_dynamics_with};
pub use events::{apply_event, GridEvent, BOLTED_FAULT_PU};
pub use model::{build_network, GridModel, NetworkSpec, SourceKind, SourceSpec};
pub use network::{solve_network, NetworkSolution, NetworkSolver};
pub use state::DynamicState;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("{kind} `{id}` references unknown `{target}`")]
    DanglingReference {
        kind: &'static str,
        id: String,
        target: String,
    },
    #[error("bus `{0}` is not connected to the rest of the network")]
    DisconnectedGraph(String),
    #[error("`{0}` has a non-positive impedance")]
    NonPositiveImpedance(String),
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("`{element}`.{field}: {reason}")]
    InvalidParameter {
        element: String,
        field: &'static str,
        reason: &'static str,
    },
    #[error("unknown target {0}")]
    UnknownTarget(String),
    #[error("network solution did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("admittance matrix is singular")]
    SingularNetwork,
    #[error("non-finite value in network state")]
    NonFinite,
}

#[cfg(test)]
pub(crate) mod fixtures {
    use std::collections::BTreeMap;

    use super::model::*;

    pub fn bus(id: &str) -> BusSpec {
        BusSpec { id: id.into(), kv: 0.48 }
    }

    pub fn line(id: &str, from: &str, to: &str, r: f64, x: f64) -> BranchSpec {
        BranchSpec {
            id: id.into(),
            from: from.into(),
            to: to.into(),
            r_pu: r,
            x_pu: x,
            breaker: None,
        }
    }

    pub fn load(bus: &str, p_kw: f64, q_kvar: f64) -> LoadSpec {
        LoadSpec {
            bus: bus.into(),
            p_kw,
            q_kvar,
            class: LoadClass::Commercial,
            sheddable: true,
        }
    }

    /// 1 MVA base network with the given parts.
    pub fn network(
        buses: &[&str],
        branches: Vec<BranchSpec>,
        sources: Vec<(&str, SourceSpec)>,
        loads: Vec<(&str, LoadSpec)>,
    ) -> NetworkSpec {
        NetworkSpec {
            base_mva: 1.0,
            nominal_hz: 60.0,
            buses: buses.iter().map(|b| bus(b)).collect(),
            branches,
            breakers: BTreeMap::new(),
            sources: sources.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            loads: loads.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }
}
