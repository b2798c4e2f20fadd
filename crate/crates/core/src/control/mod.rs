//! Microgrid central controller (DNP3 master) and outstation agents.

pub mod mgc;
pub mod outstation;

pub use mgc::{Mgc, MgcPolicy, Observations, Outgoing, RetryPolicy};
pub use outstation::{Applied, Outstation, PhysicalAction, PointBinding, PointKind};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("invalid controller policy: {0}")]
    InvalidPolicy(String),
    #[error("unknown {0}")]
    UnknownElement(String),
}
