//! Scenario description: network, protection, cyber topology, controller
//! policy, scripted events and attacks, in one strict TOML document.

mod builtin;
mod parse;
mod validate;

pub use builtin::{builtin, builtin_names, BUILTINS};
pub use parse::{apply_override, parse_scenario, parse_scenario_file, print_scenario, resolve};
pub use validate::validate;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{MgcPolicy, PointBinding};
use crate::cybernet::{CommandCode, FunctionCode, LinkParams, NodeSpec};
use crate::grid::model::NetworkSpec;
use crate::protection::{FrequencyRelaySpec, OvercurrentRelaySpec, VoltageRelaySpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("{key}: {message}")]
    Validation { key: String, message: String },
    #[error("cannot read `{path}`: {message}")]
    Io { path: String, message: String },
    #[error("unknown built-in scenario `{0}`")]
    UnknownBuiltin(String),
}

impl ScenarioError {
    pub(crate) fn validation(key: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Validation {
            key: key.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub scenario: Meta,
    pub network: NetworkSpec,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub relays: BTreeMap<String, RelayConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cyber: Option<CyberConfig>,
    #[serde(default)]
    pub policy: MgcPolicy,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<EventSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attacks: Vec<AttackSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub duration_s: f64,
    #[serde(default = "default_dt")]
    pub dt_s: f64,
}

fn default_dt() -> f64 {
    crate::grid::dynamics::DEFAULT_DT
}

/// How a breaker-targeted relay reaches its breaker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TripPath {
    /// Hard-wired: the trip is issued to the breaker in the same step.
    #[default]
    Direct,
    /// Sent by the master as a DIRECT_OPERATE TRIP to the outstation that
    /// owns the breaker, so it is exposed to the network and its attacks.
    Networked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RelayElement {
    Overcurrent(OvercurrentRelaySpec),
    Voltage(VoltageRelaySpec),
    Frequency(FrequencyRelaySpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelayConfig {
    #[serde(default)]
    pub trip_path: TripPath,
    #[serde(flatten)]
    pub element: RelayElement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutstationConfig {
    pub name: String,
    pub address: u16,
    #[serde(default)]
    pub points: Vec<PointBinding>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CyberConfig {
    pub master: NodeSpec,
    #[serde(default)]
    pub link_defaults: LinkParams,
    /// Per-link parameter overrides keyed by `"src->dst"`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub links: BTreeMap<String, LinkParams>,
    pub outstations: Vec<OutstationConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandName {
    Trip,
    Close,
    Shed,
    SetP,
    SetQ,
}

impl From<CommandName> for CommandCode {
    fn from(c: CommandName) -> Self {
        match c {
            CommandName::Trip => CommandCode::Trip,
            CommandName::Close => CommandCode::Close,
            CommandName::Shed => CommandCode::Shed,
            CommandName::SetP => CommandCode::SetP,
            CommandName::SetQ => CommandCode::SetQ,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionName {
    Read,
    #[default]
    DirectOperate,
    Response,
    Unsolicited,
}

impl From<FunctionName> for FunctionCode {
    fn from(f: FunctionName) -> Self {
        match f {
            FunctionName::Read => FunctionCode::Read,
            FunctionName::DirectOperate => FunctionCode::DirectOperate,
            FunctionName::Response => FunctionCode::Response,
            FunctionName::Unsolicited => FunctionCode::Unsolicited,
        }
    }
}

/// Bolted three-phase fault shunt.
fn bolted() -> f64 {
    crate::grid::events::BOLTED_FAULT_PU
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EventAction {
    Fault {
        bus: String,
        /// Resistive shunt, pu.
        #[serde(default = "bolted")]
        impedance_pu: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        clear_at_s: Option<f64>,
    },
    ClearFault {
        bus: String,
    },
    BreakerOpen {
        breaker: String,
    },
    BreakerClose {
        breaker: String,
    },
    LoadShed {
        load: String,
    },
    LoadRestore {
        load: String,
    },
    Setpoint {
        source: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p_kw: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q_kvar: Option<f64>,
    },
    /// The master sends a DIRECT_OPERATE to an outstation point.
    Command {
        outstation: String,
        point: u16,
        code: CommandName,
        #[serde(default)]
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSpec {
    pub at_s: f64,
    #[serde(flatten)]
    pub action: EventAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttackSpec {
    DosFixedDelay {
        link: String,
        start_s: f64,
        end_s: f64,
        delay_s: f64,
    },
    DosFlood {
        link: String,
        start_s: f64,
        end_s: f64,
        rate_fps: f64,
    },
    MitmRewrite {
        link: String,
        start_s: f64,
        end_s: f64,
        #[serde(default)]
        function: FunctionName,
        point: u16,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        code: Option<CommandName>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        new_code: Option<CommandName>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        new_value: Option<f64>,
    },
    /// Extra operate delay for commands issued to `breaker` inside the
    /// window (open-ended when `end_s` is absent).
    BreakerDelay {
        breaker: String,
        #[serde(default)]
        start_s: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        end_s: Option<f64>,
        delay_s: f64,
    },
}
