use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::SimResult;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompareError {
    #[error("runs are not comparable: {0}")]
    ShapeMismatch(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDiff {
    pub channel: String,
    pub max_abs_deviation: f64,
    pub first_divergence_s: Option<f64>,
}

/// Channel-by-channel comparison over the samples both runs recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffReport {
    pub channels: Vec<ChannelDiff>,
    pub first_divergence_s: Option<f64>,
    pub samples_compared: usize,
    /// Set when one run stopped early (blackout) and the other did not.
    pub length_mismatch: Option<(usize, usize)>,
}

impl DiffReport {
    pub fn identical(&self) -> bool {
        self.first_divergence_s.is_none() && self.length_mismatch.is_none()
    }

    pub fn channel(&self, name: &str) -> Option<&ChannelDiff> {
        self.channels.iter().find(|c| c.channel == name)
    }
}

pub fn compare_runs(a: &SimResult, b: &SimResult) -> Result<DiffReport, CompareError> {
    if a.dt_s != b.dt_s {
        return Err(CompareError::ShapeMismatch(format!("dt {} vs {}", a.dt_s, b.dt_s)));
    }
    if a.duration_s != b.duration_s {
        return Err(CompareError::ShapeMismatch(format!("duration {} vs {}", a.duration_s, b.duration_s)));
    }
    if a.columns != b.columns {
        return Err(CompareError::ShapeMismatch("different channel sets".into()));
    }
    let n = a.len().min(b.len());
    let channels: Vec<ChannelDiff> = a
        .columns
        .iter()
        .zip(a.data.iter().zip(&b.data))
        .map(|(name, (x, y))| {
            let mut max: f64 = 0.0;
            let mut first = None;
            for k in 0..n {
                // Bitwise equality so that NaN == NaN and -0 != +0 do not hide changes.
                if x[k].to_bits() != y[k].to_bits() {
                    first.get_or_insert(a.time_s[k]);
                    max = max.max((x[k] - y[k]).abs());
                }
            }
            ChannelDiff {
                channel: name.clone(),
                max_abs_deviation: max,
                first_divergence_s: first,
            }
        })
        .collect();
    let first_divergence_s = channels
        .iter()
        .filter_map(|c| c.first_divergence_s)
        .min_by(f64::total_cmp);
    Ok(DiffReport {
        channels,
        first_divergence_s,
        samples_compared: n,
        length_mismatch: (a.len() != b.len()).then_some((a.len(), b.len())),
    })
}
