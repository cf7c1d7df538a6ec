//! Multi-trial summary statistics over final best objective values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::RunResult;

/// Max/min/mean/median/sample-std over the final best values of a set of
/// independent trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialStatistics {
    pub max: f64,
    pub min: f64,
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    pub trials: usize,
}

/// Statistics over the final best values of `results`.
///
/// The median of an even count is the mean of the two middle values; the
/// standard deviation is the sample estimate (divisor `n - 1`, zero for a
/// single trial).
pub fn aggregate_trials(results: &[RunResult]) -> Result<TrialStatistics> {
    let values: Vec<f64> = results.iter().map(|r| r.best_value).collect();
    stats_of_values(&values)
}

pub fn stats_of_values(values: &[f64]) -> Result<TrialStatistics> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let min = sorted[0];
    let max = sorted[n - 1];
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let std = if n == 1 {
        0.0
    } else {
        let ss: f64 = sorted.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (n - 1) as f64).sqrt()
    };
    Ok(TrialStatistics {
        max,
        min,
        mean,
        median,
        std,
        trials: n,
    })
}
