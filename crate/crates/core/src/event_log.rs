//! Timestamped record of everything that happened during a run.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    FaultApplied { bus: String },
    FaultCleared { bus: String },
    BreakerOpened { breaker: String },
    BreakerClosed { breaker: String },
    BreakerCommand { breaker: String, action: String, due_s: f64 },
    Islanded,
    Reconnected,
    LoadShed { load: String },
    LoadRestored { load: String },
    SetpointChanged { source: String, p_kw: f64, q_kvar: f64 },
    SourceTripped { source: String, relay: String },
    RelayTrip { relay: String, element: String },
    FrameDropped { link: String, function: String },
    FrameRejected { link: String, reason: String },
    MitmRewrite { link: String, point: u16, original: f64, rewritten: f64 },
    UnknownPoint { outstation: String, point: u16 },
    ShedIssued { load: String },
    FrequencyAlarm { hz: f64 },
    Blackout { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub time_s: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventLog {
    entries: Vec<LogEntry>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, time_s: f64, kind: EventKind) {
        self.entries.push(LogEntry { time_s, kind });
    }

    pub fn entries(&self) -> &[LogEntry] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = &LogEntry> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// First time an entry matching `pred` was logged.
    pub fn first_time(&self, mut pred: impl FnMut(&EventKind) -> bool) -> Option<f64> {
        self.entries.iter().find(|e| pred(&e.kind)).map(|e| e.time_s)
    }
}
