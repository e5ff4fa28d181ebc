//! Partition ergodicity test: split a series into `k` equal-length
//! subsets, average across subsets at each re-based index, and compare
//! each ensemble with the full series.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use super::hypothesis::{runs_test, t_test_two_sample};
use crate::error::{invalid, Error, Result};

/// How the series is split into subsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionScheme {
    /// Subset `s` holds every `k`-th point starting at `s`, so the ensemble
    /// at index `i` is the block of `k` consecutive points starting at `i·k`.
    #[default]
    Interleaved,
    /// Subset `s` is the `s`-th contiguous block of length `m`.
    Contiguous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionResult {
    /// Number of subsets.
    pub k: usize,
    /// Subset length after truncating the tail.
    pub m: usize,
    /// Ensemble mean at each index `0..m`.
    pub ensemble_means: Vec<f64>,
    /// Welch p-value of each ensemble against the full series.
    pub t_pvalues: Vec<f64>,
    /// Runs-test p-value per subset; `None` when the subset is degenerate.
    pub runs_pvalues: Vec<Option<f64>>,
    /// Subsets whose runs test rejects independence at 5%.
    pub dependent_subsets: Vec<usize>,
}

impl PartitionResult {
    pub fn rejection_rate(&self, level: f64) -> f64 {
        self.t_pvalues.iter().filter(|&&p| p < level).count() as f64 / self.t_pvalues.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicityReport {
    pub series_mean: f64,
    pub scheme: PartitionScheme,
    pub partitions: Vec<PartitionResult>,
}

pub fn ergodicity_partition_test(
    series: &[f64],
    k_range: RangeInclusive<usize>,
) -> Result<ErgodicityReport> {
    ergodicity_partition_test_with(series, k_range, PartitionScheme::default())
}

pub fn ergodicity_partition_test_with(
    series: &[f64],
    k_range: RangeInclusive<usize>,
    scheme: PartitionScheme,
) -> Result<ErgodicityReport> {
    let (&k_min, &k_max) = (k_range.start(), k_range.end());
    if k_min < 2 || k_min > k_max {
        return Err(invalid("k_range", "need 2 <= k_min <= k_max"));
    }
    if series.len() < 2 * k_max {
        return Err(Error::SubsetTooShort {
            k: k_max,
            len: series.len() / k_max,
        });
    }
    let series_mean = series.iter().sum::<f64>() / series.len() as f64;
    let partitions = k_range
        .map(|k| partition(series, k, scheme))
        .collect::<Result<Vec<_>>>()?;
    Ok(ErgodicityReport {
        series_mean,
        scheme,
        partitions,
    })
}

fn partition(series: &[f64], k: usize, scheme: PartitionScheme) -> Result<PartitionResult> {
    let m = series.len() / k;
    let at = |s: usize, i: usize| match scheme {
        PartitionScheme::Interleaved => series[i * k + s],
        PartitionScheme::Contiguous => series[s * m + i],
    };
    let subsets: Vec<Vec<f64>> = (0..k).map(|s| (0..m).map(|i| at(s, i)).collect()).collect();
    let mut ensemble_means = Vec::with_capacity(m);
    let mut t_pvalues = Vec::with_capacity(m);
    let mut ensemble = vec![0.0; k];
    for i in 0..m {
        for (s, slot) in ensemble.iter_mut().enumerate() {
            *slot = at(s, i);
        }
        ensemble_means.push(ensemble.iter().sum::<f64>() / k as f64);
        t_pvalues.push(t_test_two_sample(&ensemble, series)?);
    }
    let runs_pvalues: Vec<Option<f64>> = subsets
        .iter()
        .map(|s| runs_test(s).ok().map(|r| r.p_value))
        .collect();
    let dependent_subsets = runs_pvalues
        .iter()
        .enumerate()
        .filter(|(_, p)| p.is_some_and(|p| p < 0.05))
        .map(|(s, _)| s)
        .collect();
    Ok(PartitionResult {
        k,
        m,
        ensemble_means,
        t_pvalues,
        runs_pvalues,
        dependent_subsets,
    })
}
