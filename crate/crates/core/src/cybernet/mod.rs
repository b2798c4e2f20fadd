//! Emulated SCADA network: wire codec, queued links, the radial
//! master/outstation star, and DoS/MITM injectors.

pub mod frame;
pub mod link;
pub mod net;

pub use frame::{decode_frame, encode_frame, CommandCode, Frame, FrameError, FunctionCode, Record};
pub use link::{DosMode, LinkParams, Window};
pub use net::{link_name, receive, CyberNet, CyberTopology, Delivery, MitmRule, NodeSpec, TraceEntry, Verdict};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetError {
    #[error("unknown link `{0}`")]
    UnknownLink(String),
    #[error("queue overflow on `{0}`; frame dropped")]
    QueueOverflow(String),
    #[error("attack window [{start_s}, {end_s}] is not well-ordered")]
    BadWindow { start_s: f64, end_s: f64 },
    #[error("invalid cyber topology: {0}")]
    Topology(String),
    #[error(transparent)]
    Frame(#[from] FrameError),
}
