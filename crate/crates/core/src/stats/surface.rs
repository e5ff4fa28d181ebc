//! Correlation of the frequency-time T1 estimator with long-time means over
//! a grid of window half-widths Δω and slice counts n.

use serde::{Deserialize, Serialize};

use super::pearson::pearson_r;
use crate::error::{Error, Result};
use crate::estimators::{mean_t1_freq_time, EstimatorConfig};
use crate::protocol::SpectroscopyMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceCell {
    pub delta_omega: f64,
    pub n_slices: usize,
    pub r: Option<f64>,
    /// Why `r` is missing.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RSurface {
    pub cells: Vec<SurfaceCell>,
}

impl RSurface {
    pub fn get(&self, delta_omega: f64, n_slices: usize) -> Option<&SurfaceCell> {
        self.cells
            .iter()
            .find(|c| c.n_slices == n_slices && (c.delta_omega - delta_omega).abs() < 1e-12)
    }
}

/// `base` supplies τ, χ and the clip policy; Δω and n come from the grids.
pub fn r_vs_window(
    maps: &[SpectroscopyMap],
    long_means: &[f64],
    delta_omegas: &[f64],
    n_grid: &[usize],
    base: &EstimatorConfig,
) -> Result<RSurface> {
    if maps.len() != long_means.len() {
        return Err(Error::LengthMismatch {
            left: maps.len(),
            right: long_means.len(),
        });
    }
    if maps.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: maps.len(),
        });
    }
    let mut cells = Vec::with_capacity(delta_omegas.len() * n_grid.len());
    for &delta_omega in delta_omegas {
        for &n_slices in n_grid {
            let cfg = EstimatorConfig {
                delta_omega,
                n_slices,
                chi: base.chi.min(2.0 * delta_omega).max(f64::MIN_POSITIVE),
                ..*base
            };
            let estimates: Result<Vec<f64>> = maps
                .iter()
                .map(|m| mean_t1_freq_time(m, &cfg).map(|e| e.value))
                .collect();
            let r = estimates.and_then(|e| pearson_r(&e, long_means).map(|p| p.r));
            cells.push(SurfaceCell {
                delta_omega,
                n_slices,
                r: r.as_ref().ok().copied(),
                error: r.err().map(|e| e.to_string()),
            });
        }
    }
    Ok(RSurface { cells })
}
