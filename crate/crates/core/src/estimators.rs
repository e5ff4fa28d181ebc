//! T1 and P1 estimators over time, over frequency and time, and over an
//! evenly spaced frequency ensemble within one scan.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::protocol::{ScanGrid, SpectroscopyMap, T1TimeSeries};

/// Slack used when comparing grid shifts against window edges.
const WINDOW_EPS: f64 = 1e-9;

/// What to do with cells at exactly 0 or 1 before converting to T1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ClipPolicy {
    /// Skip saturated cells and count them in `n_skipped`.
    #[default]
    Exclude,
    /// Clamp into `[1/(2·shots), 1 − 1/(2·shots)]`.
    Clamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Half-width Δω of the frequency window (MHz).
    pub delta_omega: f64,
    /// Ensemble spacing χ (MHz).
    pub chi: f64,
    /// Number of leading time slices to average.
    pub n_slices: usize,
    /// Delay used for P1 → T1 conversion (µs).
    pub tau: f64,
    pub clip: ClipPolicy,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            delta_omega: 5.0,
            chi: 1.0,
            n_slices: 1,
            tau: 50.0,
            clip: ClipPolicy::Exclude,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_omega >= 0.0) || !self.delta_omega.is_finite() {
            return Err(invalid("delta_omega", "must be finite and >= 0"));
        }
        if !(self.chi > 0.0) || !self.chi.is_finite() {
            return Err(invalid("chi", "must be finite and > 0"));
        }
        if self.delta_omega > 0.0 && self.chi > 2.0 * self.delta_omega + WINDOW_EPS {
            return Err(invalid("chi", "must not exceed 2·delta_omega"));
        }
        if self.n_slices == 0 {
            return Err(invalid("n_slices", "must be >= 1"));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(invalid("tau", "must be finite and > 0"));
        }
        Ok(())
    }

    /// Ensemble size S: offsets `jχ − Δω` for `j = 0..S` that stay within `+Δω`.
    pub fn sample_count(&self) -> usize {
        (2.0 * self.delta_omega / self.chi + WINDOW_EPS).floor() as usize + 1
    }

    /// Ensemble offsets from the qubit frequency (MHz).
    pub fn offsets(&self) -> Vec<f64> {
        (0..self.sample_count())
            .map(|j| j as f64 * self.chi - self.delta_omega)
            .collect()
    }
}

/// Δω that places `samples` points `chi` apart symmetrically about ω_q.
pub fn heuristic_delta_omega(samples: usize, chi: f64) -> f64 {
    samples.saturating_sub(1) as f64 / 2.0 * chi
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub value: f64,
    /// Sample standard deviation (n − 1) of the averaged values; 0 for one value.
    pub sample_std: f64,
    pub n_used: usize,
    /// Cells that were missing or excluded by the clip policy.
    pub n_skipped: usize,
}

impl EstimateResult {
    fn from_values(values: &[f64], n_skipped: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty);
        }
        let n = values.len();
        let mut sum = 0.0;
        for v in values {
            sum += v;
        }
        let mean = sum / n as f64;
        let sample_std = if n > 1 {
            let mut ss = 0.0;
            for v in values {
                ss += (v - mean) * (v - mean);
            }
            (ss / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            value: mean,
            sample_std,
            n_used: n,
            n_skipped,
        })
    }
}

/// `T1 = −τ / ln(P1)`.
pub fn p1_to_t1(p1: f64, tau: f64) -> Result<f64> {
    if !(p1 > 0.0 && p1 < 1.0) {
        return Err(Error::ProbabilityDomain { p1 });
    }
    Ok(-tau / p1.ln())
}

fn cell_t1(p1: f64, tau: f64, clip: ClipPolicy, shots: u64) -> Option<f64> {
    let p = match clip {
        ClipPolicy::Exclude => p1,
        ClipPolicy::Clamp => {
            let lo = 0.5 / shots.max(1) as f64;
            p1.clamp(lo, 1.0 - lo)
        }
    };
    p1_to_t1(p, tau).ok()
}

/// Mean of a P1 series, skipping missing entries.
pub fn mean_p1_over_time(series: &[Option<f64>]) -> Result<EstimateResult> {
    let values: Vec<f64> = series.iter().flatten().copied().collect();
    EstimateResult::from_values(&values, series.len() - values.len())
}

/// Mean of the T1 values in a series, skipping failed fits.
pub fn mean_t1_over_time(series: &T1TimeSeries) -> Result<EstimateResult> {
    let values = series.values();
    EstimateResult::from_values(&values, series.entries.len() - values.len())
}

/// Grid columns with `|ω_j| ≤ Δω`.
fn window_columns(grid: &ScanGrid, delta_omega: f64) -> Result<Vec<usize>> {
    if delta_omega > grid.span() + WINDOW_EPS {
        return Err(Error::WindowExceedsGrid(format!(
            "Δω = {delta_omega} MHz but the grid only reaches ±{} MHz",
            grid.span()
        )));
    }
    let cols: Vec<usize> = grid
        .shifts
        .iter()
        .enumerate()
        .filter(|(_, s)| s.abs() <= delta_omega + WINDOW_EPS)
        .map(|(j, _)| j)
        .collect();
    if cols.is_empty() {
        return Err(Error::Empty);
    }
    Ok(cols)
}

fn check_slices(map: &SpectroscopyMap, n_slices: usize) -> Result<()> {
    if n_slices > map.n_slices() {
        return Err(Error::WindowExceedsGrid(format!(
            "n_slices = {n_slices} but the map has {} slices",
            map.n_slices()
        )));
    }
    Ok(())
}

/// Equal-weight mean of P1 over `|ω_j| ≤ Δω` and the first `n_slices` slices.
pub fn mean_p1_freq_time(map: &SpectroscopyMap, cfg: &EstimatorConfig) -> Result<EstimateResult> {
    cfg.validate()?;
    check_slices(map, cfg.n_slices)?;
    let cols = window_columns(&map.grid, cfg.delta_omega)?;
    let mut values = Vec::with_capacity(cols.len() * cfg.n_slices);
    let mut skipped = 0;
    for row in &map.p1[..cfg.n_slices] {
        for &j in &cols {
            match row[j] {
                Some(p) => values.push(p),
                None => skipped += 1,
            }
        }
    }
    EstimateResult::from_values(&values, skipped)
}

/// Equal-weight mean of `−τ/ln(P1)` over the same cells as
/// [`mean_p1_freq_time`]. Each cell is converted before averaging.
pub fn mean_t1_freq_time(map: &SpectroscopyMap, cfg: &EstimatorConfig) -> Result<EstimateResult> {
    cfg.validate()?;
    check_slices(map, cfg.n_slices)?;
    let cols = window_columns(&map.grid, cfg.delta_omega)?;
    let mut values = Vec::with_capacity(cols.len() * cfg.n_slices);
    let mut skipped = 0;
    for row in &map.p1[..cfg.n_slices] {
        for &j in &cols {
            match row[j].and_then(|p| cell_t1(p, cfg.tau, cfg.clip, map.grid.shots)) {
                Some(t1) => values.push(t1),
                None => skipped += 1,
            }
        }
    }
    EstimateResult::from_values(&values, skipped)
}

/// Equal-weight T1 mean over the S ensemble offsets of one scan row. Each
/// offset snaps to the nearest grid point within χ/2.
pub fn ensemble_estimator(
    row: &[Option<f64>],
    grid: &ScanGrid,
    cfg: &EstimatorConfig,
) -> Result<EstimateResult> {
    cfg.validate()?;
    if row.len() != grid.len() {
        return Err(Error::LengthMismatch {
            left: row.len(),
            right: grid.len(),
        });
    }
    let tolerance = cfg.chi / 2.0;
    let mut values = Vec::with_capacity(cfg.sample_count());
    let mut skipped = 0;
    for offset in cfg.offsets() {
        let j = grid.nearest(offset);
        if (grid.shifts[j] - offset).abs() > tolerance + WINDOW_EPS {
            return Err(Error::Snapping {
                requested: offset,
                tolerance,
            });
        }
        match row[j].and_then(|p| cell_t1(p, cfg.tau, cfg.clip, grid.shots)) {
            Some(t1) => values.push(t1),
            None => skipped += 1,
        }
    }
    EstimateResult::from_values(&values, skipped)
}

/// Cumulative means: element `k` is the mean of `series[..=k]`, for
/// `k < upto_n`.
pub fn moving_average(series: &[f64], upto_n: usize) -> Result<Vec<f64>> {
    if upto_n > series.len() {
        return Err(Error::TooShort {
            needed: upto_n,
            got: series.len(),
        });
    }
    let mut sum = 0.0;
    Ok(series[..upto_n]
        .iter()
        .enumerate()
        .map(|(k, v)| {
            sum += v;
            sum / (k + 1) as f64
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::T1Entry;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn map_from(grid: ScanGrid, rows: Vec<Vec<Option<f64>>>) -> SpectroscopyMap {
        let mut m = SpectroscopyMap::new("q", grid);
        for (i, r) in rows.into_iter().enumerate() {
            m.push_row(i as f64, r).unwrap();
        }
        m
    }

    fn small_grid() -> ScanGrid {
        ScanGrid::symmetric(10.0, 21, 50.0, 1000).unwrap()
    }

    #[test]
    fn p1_to_t1_examples() {
        assert_relative_eq!(
            p1_to_t1((-1.0f64).exp(), 50.0).unwrap(),
            50.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            p1_to_t1((-0.5f64).exp(), 50.0).unwrap(),
            100.0,
            max_relative = 1e-14
        );
        assert!((p1_to_t1(0.315, 50.0).unwrap() - 43.3).abs() < 0.05);
        assert!(matches!(
            p1_to_t1(0.0, 50.0),
            Err(Error::ProbabilityDomain { .. })
        ));
        assert!(matches!(
            p1_to_t1(1.0, 50.0),
            Err(Error::ProbabilityDomain { .. })
        ));
    }

    #[test]
    fn time_means() {
        assert_eq!(mean_p1_over_time(&[Some(0.4); 5]).unwrap().value, 0.4);
        let r = mean_p1_over_time(&[Some(0.2), None, Some(0.4)]).unwrap();
        assert_relative_eq!(r.value, 0.3, max_relative = 1e-15);
        assert_eq!((r.n_used, r.n_skipped), (2, 1));
        assert!(matches!(mean_p1_over_time(&[None]), Err(Error::Empty)));

        let mut s = T1TimeSeries::new("q");
        for d in 0..10 {
            s.entries.push(T1Entry {
                time_hr: 24.0 * d as f64,
                t1_us: Some(100.0),
                stderr_us: Some(1.0),
            });
        }
        assert_eq!(mean_t1_over_time(&s).unwrap().value, 100.0);
    }

    #[test]
    fn freq_time_uniform_and_degenerate() {
        let g = small_grid();
        let m = map_from(g.clone(), vec![vec![Some(0.5); g.len()]; 3]);
        for dw in [0.0, 1.0, 5.0, 10.0] {
            let cfg = EstimatorConfig {
                delta_omega: dw,
                chi: 1.0,
                n_slices: 3,
                ..Default::default()
            };
            assert_eq!(mean_p1_freq_time(&m, &cfg).unwrap().value, 0.5);
        }

        let rows: Vec<Vec<Option<f64>>> = (0..3)
            .map(|i| {
                (0..g.len())
                    .map(|j| Some(0.1 + 0.01 * (i * 7 + j) as f64 % 0.8))
                    .collect()
            })
            .collect();
        let m = map_from(g.clone(), rows.clone());
        let cfg = EstimatorConfig {
            delta_omega: 0.0,
            n_slices: 3,
            ..Default::default()
        };
        let col = g.nearest(0.0);
        let expected =
            (rows[0][col].unwrap() + rows[1][col].unwrap() + rows[2][col].unwrap()) / 3.0;
        assert_relative_eq!(
            mean_p1_freq_time(&m, &cfg).unwrap().value,
            expected,
            max_relative = 1e-15
        );
    }

    #[test]
    fn freq_time_t1_convert_then_average() {
        let e1 = (-1.0f64).exp();
        let m = map_from(small_grid(), vec![vec![Some(e1); 41]]);
        let cfg = EstimatorConfig::default();
        assert_relative_eq!(
            mean_t1_freq_time(&m, &cfg).unwrap().value,
            50.0,
            max_relative = 1e-14
        );

        let grid = ScanGrid {
            shifts: vec![-1.0, 1.0],
            ..small_grid()
        };
        let m = map_from(grid, vec![vec![Some(e1), Some((-0.5f64).exp())]]);
        let cfg = EstimatorConfig {
            delta_omega: 1.0,
            chi: 1.0,
            ..Default::default()
        };
        assert_relative_eq!(
            mean_t1_freq_time(&m, &cfg).unwrap().value,
            75.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn window_errors() {
        let m = map_from(small_grid(), vec![vec![Some(0.5); 41]]);
        let wide = EstimatorConfig {
            delta_omega: 12.0,
            ..Default::default()
        };
        assert!(matches!(
            mean_p1_freq_time(&m, &wide),
            Err(Error::WindowExceedsGrid(_))
        ));
        let deep = EstimatorConfig {
            n_slices: 2,
            ..Default::default()
        };
        assert!(matches!(
            mean_p1_freq_time(&m, &deep),
            Err(Error::WindowExceedsGrid(_))
        ));
    }

    #[test]
    fn clip_policy() {
        let mut row = vec![Some(0.5); 41];
        row[20] = Some(1.0);
        row[21] = Some(0.0);
        let m = map_from(small_grid(), vec![row]);
        let cfg = EstimatorConfig::default();
        let r = mean_t1_freq_time(&m, &cfg).unwrap();
        assert_eq!(r.n_skipped, 2);
        let clamped = mean_t1_freq_time(
            &m,
            &EstimatorConfig {
                clip: ClipPolicy::Clamp,
                ..cfg
            },
        )
        .unwrap();
        assert_eq!(clamped.n_skipped, 0);
        assert_eq!(clamped.n_used, r.n_used + 2);
    }

    #[test]
    fn sample_counts() {
        let c = |dw: f64, chi: f64| EstimatorConfig {
            delta_omega: dw,
            chi,
            ..Default::default()
        };
        assert_eq!(c(6.0, 2.0).sample_count(), 7);
        assert_eq!(
            c(6.0, 2.0).offsets(),
            vec![-6.0, -4.0, -2.0, 0.0, 2.0, 4.0, 6.0]
        );
        assert_eq!(heuristic_delta_omega(10, 1.0), 4.5);
        assert_eq!(c(4.5, 1.0).sample_count(), 10);
        assert_eq!(c(0.0, 1.0).sample_count(), 1);
        assert!(c(1.0, 3.0).validate().is_err());
    }

    #[test]
    fn ensemble_examples() {
        let g = small_grid();
        let row: Vec<Option<f64>> = (0..g.len()).map(|j| Some(0.3 + 0.01 * j as f64)).collect();
        let zero = g.nearest(0.0);
        let single = ensemble_estimator(
            &row,
            &g,
            &EstimatorConfig {
                delta_omega: 0.0,
                ..Default::default()
            },
        )
        .unwrap();
        assert_relative_eq!(
            single.value,
            p1_to_t1(row[zero].unwrap(), 50.0).unwrap(),
            max_relative = 1e-15
        );

        let seven = ensemble_estimator(
            &row,
            &g,
            &EstimatorConfig {
                delta_omega: 6.0,
                chi: 2.0,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(seven.n_used, 7);

        let sparse = ScanGrid {
            shifts: vec![-10.0, 0.0, 10.0],
            ..g
        };
        let err = ensemble_estimator(
            &[Some(0.5); 3],
            &sparse,
            &EstimatorConfig {
                delta_omega: 2.0,
                chi: 2.0,
                ..Default::default()
            },
        );
        assert!(matches!(err, Err(Error::Snapping { .. })));
    }

    #[test]
    fn ensemble_full_span_matches_freq_time() {
        let g = small_grid();
        let row: Vec<Option<f64>> = (0..g.len()).map(|j| Some(0.2 + 0.015 * j as f64)).collect();
        let cfg = EstimatorConfig {
            delta_omega: 10.0,
            chi: 0.5,
            ..Default::default()
        };
        let m = map_from(g.clone(), vec![row.clone()]);
        let a = ensemble_estimator(&row, &g, &cfg).unwrap();
        let b = mean_t1_freq_time(&m, &cfg).unwrap();
        assert_relative_eq!(a.value, b.value, max_relative = 1e-12);
    }

    #[test]
    fn moving_average_examples() {
        assert_eq!(moving_average(&[1.0, 3.0], 2).unwrap(), vec![1.0, 2.0]);
        assert_eq!(moving_average(&[4.0; 6], 6).unwrap(), vec![4.0; 6]);
        assert_eq!(moving_average(&[1.0, 3.0, 5.0], 1).unwrap(), vec![1.0]);
        assert!(moving_average(&[1.0], 2).is_err());
    }

    proptest! {
        #[test]
        fn p1_t1_round_trip(t1 in 1.0f64..1e4, tau_i in 0usize..3) {
            let tau = [1.0, 50.0, 500.0][tau_i];
            let p = (-tau / t1).exp();
            prop_assume!(p > 0.0 && p < 1.0);
            let back = p1_to_t1(p, tau).unwrap();
            prop_assert!((back / t1 - 1.0).abs() < 1e-12);
        }

        #[test]
        fn time_mean_permutation_invariant(mut v in prop::collection::vec(0.01f64..0.99, 1..60), seed in any::<u64>()) {
            let a = mean_p1_over_time(&v.iter().map(|&x| Some(x)).collect::<Vec<_>>()).unwrap().value;
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            v.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let b = mean_p1_over_time(&v.iter().map(|&x| Some(x)).collect::<Vec<_>>()).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-14);
        }

        #[test]
        fn freq_time_linear_in_mixtures(
            a in prop::collection::vec(0.01f64..0.99, 41),
            b in prop::collection::vec(0.01f64..0.99, 41),
            w in 0.0f64..1.0,
        ) {
            let cfg = EstimatorConfig { delta_omega: 4.0, ..Default::default() };
            let ma = map_from(small_grid(), vec![a.iter().map(|&x| Some(x)).collect()]);
            let mb = map_from(small_grid(), vec![b.iter().map(|&x| Some(x)).collect()]);
            let mix = map_from(small_grid(), vec![a.iter().zip(&b).map(|(x, y)| Some(w * x + (1.0 - w) * y)).collect()]);
            let lhs = mean_p1_freq_time(&mix, &cfg).unwrap().value;
            let rhs = w * mean_p1_freq_time(&ma, &cfg).unwrap().value + (1.0 - w) * mean_p1_freq_time(&mb, &cfg).unwrap().value;
            prop_assert!((lhs - rhs).abs() < 1e-13);
        }

        #[test]
        fn degenerate_window_collapses(row in prop::collection::vec(0.01f64..0.99, 41)) {
            let g = small_grid();
            let cells: Vec<Option<f64>> = row.iter().map(|&x| Some(x)).collect();
            let m = map_from(g.clone(), vec![cells.clone()]);
            let cfg = EstimatorConfig { delta_omega: 0.0, n_slices: 1, ..Default::default() };
            let single = p1_to_t1(row[g.nearest(0.0)], cfg.tau).unwrap();
            prop_assert!((mean_t1_freq_time(&m, &cfg).unwrap().value - single).abs() < 1e-12 * single);
            prop_assert!((ensemble_estimator(&cells, &g, &cfg).unwrap().value - single).abs() < 1e-12 * single);
            prop_assert_eq!(mean_p1_freq_time(&m, &cfg).unwrap().value, row[g.nearest(0.0)]);
        }
    }
}
