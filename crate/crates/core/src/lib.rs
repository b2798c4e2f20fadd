//! Co-simulation of microgrid electrical dynamics, protection, and a
//! DNP3-style control network under cyber attack.

// Parameter checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Per-element loops index several parallel arrays at once.
#![allow(clippy::needless_range_loop)]

pub mod event_log;
pub mod grid;
pub mod control;
pub mod cybernet;
pub mod protection;
pub mod scenario;
pub mod engine;
pub mod report;
pub mod cli;
