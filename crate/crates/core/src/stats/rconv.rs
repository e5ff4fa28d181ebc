//! How fast the correlation between a running T1 average and the true
//! long-time mean approaches one, by Monte Carlo and in closed form.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pearson::pearson_r;
use crate::error::{invalid, Result};
use crate::rng::SeedStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RSimConfig {
    pub n_qubits: usize,
    /// Measurement noise σ_m as a fraction of each qubit's mean T1.
    pub alpha: f64,
    /// Device spread of mean T1 as a fraction of `mean_t1`.
    pub beta_std: f64,
    pub mean_t1: f64,
    pub n_devices: usize,
    /// Largest number of averaged measurements.
    pub n_max: usize,
}

impl Default for RSimConfig {
    fn default() -> Self {
        Self {
            n_qubits: 10,
            alpha: 0.2,
            beta_std: 0.1,
            mean_t1: 100.0,
            n_devices: 200,
            n_max: 160,
        }
    }
}

impl RSimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_qubits < 2 {
            return Err(invalid(
                "n_qubits",
                "need at least 2 qubits for a correlation",
            ));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(invalid("alpha", "must lie in [0, 1)"));
        }
        if !(self.beta_std > 0.0 && self.beta_std < 1.0) {
            return Err(invalid("beta_std", "must lie in (0, 1)"));
        }
        if !(self.mean_t1 > 0.0) {
            return Err(invalid("mean_t1", "must be > 0"));
        }
        if self.n_devices == 0 || self.n_max == 0 {
            return Err(invalid("n_devices", "n_devices and n_max must be >= 1"));
        }
        Ok(())
    }
}

/// ⟨R⟩ and its spread across devices, indexed by the number of averaged
/// measurements `n[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RCurve {
    pub n: Vec<usize>,
    pub mean_r: Vec<f64>,
    /// Standard deviation of R over devices.
    pub std_r: Vec<f64>,
    pub n_devices: usize,
}

impl RCurve {
    /// Standard error of `mean_r[i]`.
    pub fn stderr(&self, i: usize) -> f64 {
        self.std_r[i] / (self.n_devices as f64).sqrt()
    }

    pub fn at(&self, n: usize) -> Option<f64> {
        self.n.iter().position(|&k| k == n).map(|i| self.mean_r[i])
    }

    fn from_rows(rows: Vec<Vec<f64>>, n_max: usize) -> Self {
        let d = rows.len() as f64;
        let mut mean_r = vec![0.0; n_max];
        let mut std_r = vec![0.0; n_max];
        for i in 0..n_max {
            let m = rows.iter().map(|r| r[i]).sum::<f64>() / d;
            let v = if rows.len() > 1 {
                rows.iter().map(|r| (r[i] - m).powi(2)).sum::<f64>() / (d - 1.0)
            } else {
                0.0
            };
            mean_r[i] = m;
            std_r[i] = v.sqrt();
        }
        Self {
            n: (1..=n_max).collect(),
            mean_r,
            std_r,
            n_devices: rows.len(),
        }
    }
}

fn device_means(cfg: &RSimConfig, rng: &mut crate::rng::SimRng) -> Vec<f64> {
    let spread = Normal::new(cfg.mean_t1, cfg.beta_std * cfg.mean_t1).expect("validated");
    (0..cfg.n_qubits).map(|_| spread.sample(rng)).collect()
}

/// Monte Carlo: per device draw each qubit's mean T1, then average
/// `N(mean, α·mean)` measurements and correlate the running averages with
/// the true means. Device `d` uses `seeds.child(d)`.
pub fn simulate_r_convergence(cfg: &RSimConfig, seeds: SeedStream) -> Result<RCurve> {
    cfg.validate()?;
    let rows: Vec<Vec<f64>> = (0..cfg.n_devices)
        .into_par_iter()
        .map(|d| {
            let mut rng = seeds.child(d as u64).rng();
            let truth = device_means(cfg, &mut rng);
            let noise: Vec<Normal<f64>> = truth
                .iter()
                .map(|&t| Normal::new(t, cfg.alpha * t).expect("validated"))
                .collect();
            let mut sums = vec![0.0; cfg.n_qubits];
            let mut averages = vec![0.0; cfg.n_qubits];
            (1..=cfg.n_max)
                .map(|n| {
                    for k in 0..cfg.n_qubits {
                        sums[k] += noise[k].sample(&mut rng);
                        averages[k] = sums[k] / n as f64;
                    }
                    pearson_r(&averages, &truth)
                        .map(|p| p.r)
                        .unwrap_or(f64::NAN)
                })
                .collect()
        })
        .collect();
    Ok(RCurve::from_rows(rows, cfg.n_max))
}

/// Closed-form ⟨R⟩ for device spreads `betas`, noise fraction `alpha` and
/// `n_meas` averaged measurements.
pub fn analytic_r(betas: &[f64], alpha: f64, n_meas: usize) -> Result<f64> {
    if betas.iter().all(|&b| b == 0.0) {
        return Err(invalid("betas", "must not all be zero"));
    }
    if n_meas == 0 {
        return Err(invalid("n_meas", "must be >= 1"));
    }
    let a = alpha / (n_meas as f64).sqrt();
    let s2: f64 = betas.iter().map(|b| b * b).sum();
    let s1: f64 = betas.iter().sum();
    let shifted: f64 = betas.iter().map(|b| (b + a) * (b + a)).sum();
    Ok((s2 + a * s1) / (s2 * shifted).sqrt())
}

/// [`analytic_r`] averaged over the same device draws that
/// [`simulate_r_convergence`] makes for `seeds`, with
/// `β_k = (T_k − mean_t1)/mean_t1`.
pub fn analytic_r_curve(cfg: &RSimConfig, seeds: SeedStream) -> Result<RCurve> {
    cfg.validate()?;
    let rows: Vec<Vec<f64>> = (0..cfg.n_devices)
        .into_par_iter()
        .map(|d| {
            let mut rng = seeds.child(d as u64).rng();
            let betas: Vec<f64> = device_means(cfg, &mut rng)
                .into_iter()
                .map(|t| (t - cfg.mean_t1) / cfg.mean_t1)
                .collect();
            (1..=cfg.n_max)
                .map(|n| analytic_r(&betas, cfg.alpha, n))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(RCurve::from_rows(rows, cfg.n_max))
}
