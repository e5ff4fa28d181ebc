//! Sample autocorrelation with mean detrending and biased (1/n)
//! normalisation, so `acf[0] == 1`.

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// `acf[k]` for `k = 0..=max_lag`.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = series.len();
    let needed = (max_lag + 1).max(2);
    if n < needed {
        return Err(Error::TooShort { needed, got: n });
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let c0: f64 = centered.iter().map(|x| x * x).sum();
    if c0 == 0.0 || !c0.is_finite() {
        return Err(Error::ZeroVariance);
    }

    // Zero-pad to avoid circular wrap-around.
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = centered
        .iter()
        .map(|&x| Complex::new(x, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for z in buf.iter_mut() {
        *z = Complex::new(z.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let scale = buf[0].re;
    let mut acf: Vec<f64> = buf[..=max_lag].iter().map(|z| z.re / scale).collect();
    acf[0] = 1.0;
    Ok(acf)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyAcf {
    /// Lag in MHz for each entry of `acf`.
    pub lags_mhz: Vec<f64>,
    pub acf: Vec<f64>,
    /// First lag at which the correlation drops below [`DECORRELATION_LEVEL`].
    pub decorrelation_lag_mhz: Option<f64>,
}

pub const DECORRELATION_LEVEL: f64 = 0.2;

/// Autocorrelation of a T1 row along the frequency axis. `shifts` must be
/// evenly spaced and on one side of zero.
pub fn frequency_autocorrelation(
    shifts: &[f64],
    t1_row: &[f64],
    max_lag: usize,
) -> Result<FrequencyAcf> {
    if shifts.len() != t1_row.len() {
        return Err(Error::LengthMismatch {
            left: shifts.len(),
            right: t1_row.len(),
        });
    }
    if shifts.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: shifts.len(),
        });
    }
    let all_neg = shifts.iter().all(|&s| s <= 0.0);
    let all_pos = shifts.iter().all(|&s| s >= 0.0);
    if !(all_neg || all_pos) {
        return Err(invalid(
            "shifts",
            "select one sign branch before correlating",
        ));
    }
    let step = (shifts[1] - shifts[0]).abs();
    if step == 0.0
        || shifts
            .windows(2)
            .any(|w| ((w[1] - w[0]).abs() - step).abs() > 1e-9 * step.max(1.0))
    {
        return Err(invalid("shifts", "must be evenly spaced"));
    }
    let acf = autocorrelation(t1_row, max_lag)?;
    let lags_mhz: Vec<f64> = (0..acf.len()).map(|k| k as f64 * step).collect();
    let decorrelation_lag_mhz = acf
        .iter()
        .position(|&a| a < DECORRELATION_LEVEL)
        .map(|k| lags_mhz[k]);
    Ok(FrequencyAcf {
        lags_mhz,
        acf,
        decorrelation_lag_mhz,
    })
}
