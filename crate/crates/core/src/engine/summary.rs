use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{SimResult, Termination};
use crate::event_log::EventKind;

/// Frequency levels whose crossing is reported.
pub const CROSSING_THRESHOLDS_HZ: [f64; 3] = [59.5, 56.0, 55.0];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SummaryError {
    #[error("result has no samples")]
    EmptySeries,
}

/// Whether the frequency went strictly below each reporting threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossings {
    pub below_59_5_hz: bool,
    pub below_56_hz: bool,
    pub below_55_hz: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripRecord {
    pub time_s: f64,
    pub relay: String,
    pub element: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: String,
    pub nadir_hz: f64,
    pub nadir_time_s: f64,
    pub crossings: Crossings,
    pub trips: Vec<TripRecord>,
    /// Longest continuous time the reference genset spent above rating.
    pub overload_duration_s: f64,
    pub blackout: bool,
    pub termination: Termination,
    pub final_time_s: f64,
    pub final_frequency_hz: f64,
}

pub fn summarize(result: &SimResult) -> Result<Summary, SummaryError> {
    let f = result.frequency();
    let (imin, &nadir) = f
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(SummaryError::EmptySeries)?;

    let mut longest = 0usize;
    let mut run = 0usize;
    for &l in result.channel("genset_loading_pu").unwrap_or(&[]) {
        run = if l > 1.0 { run + 1 } else { 0 };
        longest = longest.max(run);
    }

    let trips = result
        .log
        .iter()
        .filter_map(|e| match &e.kind {
            EventKind::RelayTrip { relay, element } => Some(TripRecord {
                time_s: e.time_s,
                relay: relay.clone(),
                element: element.clone(),
            }),
            _ => None,
        })
        .collect();

    let [a, b, c] = CROSSING_THRESHOLDS_HZ;
    Ok(Summary {
        scenario: result.scenario.clone(),
        nadir_hz: nadir,
        nadir_time_s: result.time_s[imin],
        crossings: Crossings {
            below_59_5_hz: nadir < a,
            below_56_hz: nadir < b,
            below_55_hz: nadir < c,
        },
        trips,
        overload_duration_s: longest as f64 * result.dt_s,
        blackout: result.is_blackout(),
        termination: result.status.clone(),
        final_time_s: *result.time_s.last().expect("non-empty"),
        final_frequency_hz: *f.last().expect("non-empty"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_log::EventLog;

    pub(crate) fn synthetic(freq: Vec<f64>) -> SimResult {
        let n = freq.len();
        SimResult {
            scenario: "synthetic".into(),
            dt_s: 0.1,
            duration_s: (n.max(1) - 1) as f64 * 0.1,
            time_s: (0..n).map(|k| k as f64 * 0.1).collect(),
            columns: vec!["freq_hz".into(), "genset_loading_pu".into()],
            data: vec![freq, vec![0.5; n]],
            log: EventLog::new(),
            status: Termination::Completed,
            trace: Vec::new(),
        }
    }

    #[test]
    fn constant_series() {
        let s = summarize(&synthetic(vec![60.0; 11])).unwrap();
        assert_eq!(s.nadir_hz, 60.0);
        assert_eq!(
            s.crossings,
            Crossings { below_59_5_hz: false, below_56_hz: false, below_55_hz: false }
        );
    }

    #[test]
    fn dip_to_55_8() {
        let s = summarize(&synthetic(vec![60.0, 58.0, 55.8, 57.0])).unwrap();
        assert_eq!(s.nadir_hz, 55.8);
        assert!((s.nadir_time_s - 0.2).abs() < 1e-12);
        assert_eq!(
            s.crossings,
            Crossings { below_59_5_hz: true, below_56_hz: true, below_55_hz: false }
        );
    }

    #[test]
    fn empty_series_is_an_error() {
        assert_eq!(summarize(&synthetic(vec![])), Err(SummaryError::EmptySeries));
    }

    #[test]
    fn overload_duration_counts_longest_run() {
        let mut r = synthetic(vec![60.0; 8]);
        r.data[1] = vec![0.9, 1.1, 1.2, 0.9, 1.1, 1.1, 1.1, 0.8];
        let s = summarize(&r).unwrap();
        assert!((s.overload_duration_s - 0.3).abs() < 1e-12);
    }
}
