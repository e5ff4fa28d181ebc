//! Augmented Dickey-Fuller unit-root test with BIC lag selection and
//! MacKinnon response-surface p-values and critical values.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid, Error, Result};

/// How many lagged differences enter the regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LagRule {
    /// Minimise BIC over `0..=max_lag` on a common sample. `None` uses
    /// `⌊12·(n/100)^{1/4}⌋`.
    Bic {
        max_lag: Option<usize>,
    },
    Fixed(usize),
}

impl Default for LagRule {
    fn default() -> Self {
        LagRule::Bic { max_lag: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    pub t_stat: f64,
    pub p_value: f64,
    pub lags_used: usize,
    /// Whether a linear trend γ·i was included.
    pub trend: bool,
    pub n_obs: usize,
    /// 1%, 5% and 10% critical values at `n_obs`.
    pub critical_values: [f64; 3],
}

/// Test for a unit root. Needs at least 20 points.
pub fn adf_test(series: &[f64], trend: bool, rule: LagRule) -> Result<AdfResult> {
    let n = series.len();
    if n < 20 {
        return Err(Error::TooShort { needed: 20, got: n });
    }
    if series.iter().any(|x| !x.is_finite()) {
        return Err(invalid("series", "must be finite"));
    }
    let ntrend = if trend { 2 } else { 1 };
    let cap = (n - 1) / 2 - ntrend - 1;
    let diffs: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();

    let lags = match rule {
        LagRule::Fixed(l) => {
            if l > cap {
                return Err(invalid(
                    "lags",
                    format!("at most {cap} lags for {n} points"),
                ));
            }
            l
        }
        LagRule::Bic { max_lag } => {
            let default = (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize;
            let max_lag = max_lag.unwrap_or(default).min(cap);
            // All candidates share the sample left after `max_lag` lags.
            let mut best = (f64::INFINITY, 0);
            for l in 0..=max_lag {
                let fit = regress_lags(series, &diffs, l, max_lag, trend)?;
                let nobs = fit.n as f64;
                let k = fit.k as f64;
                let llf =
                    -nobs / 2.0 * ((2.0 * std::f64::consts::PI).ln() + (fit.ssr / nobs).ln() + 1.0);
                let bic = -2.0 * llf + nobs.ln() * k;
                if bic < best.0 {
                    best = (bic, l);
                }
            }
            best.1
        }
    };

    let fit = regress_lags(series, &diffs, lags, lags, trend)?;
    let t_stat = fit.t_level;
    Ok(AdfResult {
        t_stat,
        p_value: mackinnon_p(t_stat, trend),
        lags_used: lags,
        trend,
        n_obs: fit.n,
        critical_values: mackinnon_crit(fit.n, trend),
    })
}

struct LagFit {
    ssr: f64,
    t_level: f64,
    n: usize,
    k: usize,
}

/// OLS of Δy_t on [y_{t−1}, Δy_{t−1..t−lags}, 1, (t)] over the rows that
/// remain after dropping the first `skip` differences.
fn regress_lags(
    levels: &[f64],
    diffs: &[f64],
    lags: usize,
    skip: usize,
    trend: bool,
) -> Result<LagFit> {
    let nobs = diffs.len() - skip;
    let k = 1 + lags + 1 + usize::from(trend);
    if nobs <= k {
        return Err(Error::TooShort {
            needed: k + 1,
            got: nobs,
        });
    }
    let mut x = DMatrix::zeros(nobs, k);
    let mut y = DVector::zeros(nobs);
    for r in 0..nobs {
        let t = skip + r;
        y[r] = diffs[t];
        x[(r, 0)] = levels[t];
        for j in 1..=lags {
            x[(r, j)] = diffs[t - j];
        }
        x[(r, lags + 1)] = 1.0;
        if trend {
            x[(r, lags + 2)] = (r + 1) as f64;
        }
    }
    let xtx = x.transpose() * &x;
    let inv = xtx.try_inverse().ok_or(Error::SingularRegression)?;
    let beta = &inv * (x.transpose() * &y);
    let resid = &y - &x * &beta;
    let ssr = resid.norm_squared();
    let s2 = ssr / (nobs - k) as f64;
    let se = (s2 * inv[(0, 0)]).sqrt();
    if !(se > 0.0) || !se.is_finite() {
        return Err(Error::SingularRegression);
    }
    Ok(LagFit {
        ssr,
        t_level: beta[0] / se,
        n: nobs,
        k,
    })
}

// MacKinnon (1994) approximate asymptotic p-value surfaces, one integrated
// regressor. Polynomial coefficients are in ascending powers of τ.
const TAU_MAX_C: f64 = 2.74;
const TAU_MIN_C: f64 = -18.83;
const TAU_STAR_C: f64 = -1.61;
const SMALLP_C: [f64; 3] = [2.1659, 1.4412, 3.8269e-2];
const LARGEP_C: [f64; 4] = [1.7339, 0.93202, -0.12745, -0.010368];

const TAU_MAX_CT: f64 = 0.7;
const TAU_MIN_CT: f64 = -16.18;
const TAU_STAR_CT: f64 = -2.89;
const SMALLP_CT: [f64; 3] = [3.2512, 1.6047, 4.9588e-2];
const LARGEP_CT: [f64; 4] = [2.5261, 0.61654, -0.37956, -0.060285];

// MacKinnon (2010) finite-sample critical values: c0 + c1/T + c2/T² + c3/T³
// for the 1%, 5% and 10% levels.
const CRIT_C: [[f64; 4]; 3] = [
    [-3.43035, -6.5393, -16.786, -79.433],
    [-2.86154, -2.8903, -4.234, -40.040],
    [-2.56677, -1.5384, -2.809, 0.0],
];
const CRIT_CT: [[f64; 4]; 3] = [
    [-3.95877, -9.0531, -28.428, -134.155],
    [-3.41049, -4.3904, -9.036, -45.374],
    [-3.12705, -2.5856, -3.925, -22.380],
];

fn poly(coef: &[f64], x: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Approximate p-value of an ADF τ statistic.
pub fn mackinnon_p(tau: f64, trend: bool) -> f64 {
    let (max, min, star, small, large): (f64, f64, f64, &[f64], &[f64]) = if trend {
        (TAU_MAX_CT, TAU_MIN_CT, TAU_STAR_CT, &SMALLP_CT, &LARGEP_CT)
    } else {
        (TAU_MAX_C, TAU_MIN_C, TAU_STAR_C, &SMALLP_C, &LARGEP_C)
    };
    if tau > max {
        return 1.0;
    }
    if tau < min {
        return 0.0;
    }
    let z = if tau <= star {
        poly(small, tau)
    } else {
        poly(large, tau)
    };
    Normal::standard().cdf(z)
}

/// 1%, 5% and 10% critical values for a regression with `nobs` rows.
pub fn mackinnon_crit(nobs: usize, trend: bool) -> [f64; 3] {
    let table = if trend { &CRIT_CT } else { &CRIT_C };
    let inv = 1.0 / nobs as f64;
    table.map(|c| poly(&c, inv))
}
