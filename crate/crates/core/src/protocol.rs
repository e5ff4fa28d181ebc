//! Measurement protocol emulation: fixed-delay P1 spectroscopy, Ramsey
//! calibration of the Stark shift, full T1 decays, and multi-day campaigns.

use std::f64::consts::PI;

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fit::{levenberg_marquardt, LmOptions};
use crate::model::{
    amplitude_for_shift, evolve_bath, relaxation_rate, stark_shift, BathState, QubitModel,
    StarkTone,
};
use crate::rng::{SeedStream, SimRng};

pub const DEFAULT_TAU_US: f64 = 50.0;
pub const DEFAULT_SCAN_SHOTS: u64 = 1000;
pub const DEFAULT_POINTS_PER_DIRECTION: usize = 501;
pub const DEFAULT_MAX_SHIFT_MHZ: f64 = 25.0;
pub const DEFAULT_TONE_DETUNING_MHZ: f64 = 50.0;

/// Frequency grid and acquisition settings of one spectroscopy sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanGrid {
    /// Target shifts ω_j (MHz), strictly increasing.
    pub shifts: Vec<f64>,
    /// Delay at which P1 is read out (µs).
    pub tau: f64,
    pub shots: u64,
    /// Report the exact survival probability instead of sampling shots.
    #[serde(default)]
    pub noiseless: bool,
    /// Δ_qs used for negative shifts (tone above the qubit).
    #[serde(default = "default_neg_detuning")]
    pub detuning_negative: f64,
    /// Δ_qs used for positive shifts (tone below the qubit).
    #[serde(default = "default_pos_detuning")]
    pub detuning_positive: f64,
}

fn default_neg_detuning() -> f64 {
    -DEFAULT_TONE_DETUNING_MHZ
}

fn default_pos_detuning() -> f64 {
    DEFAULT_TONE_DETUNING_MHZ
}

impl Default for ScanGrid {
    fn default() -> Self {
        Self::symmetric(
            DEFAULT_MAX_SHIFT_MHZ,
            DEFAULT_POINTS_PER_DIRECTION,
            DEFAULT_TAU_US,
            DEFAULT_SCAN_SHOTS,
        )
        .expect("default grid is valid")
    }
}

impl ScanGrid {
    /// `points_per_direction` evenly spaced shifts from 0 to ±`max_shift`,
    /// sharing the zero point: `2 * points_per_direction - 1` cells.
    pub fn symmetric(
        max_shift: f64,
        points_per_direction: usize,
        tau: f64,
        shots: u64,
    ) -> Result<Self> {
        if !(max_shift > 0.0) || !max_shift.is_finite() {
            return Err(invalid("max_shift", "must be finite and > 0"));
        }
        if points_per_direction < 2 {
            return Err(invalid("points_per_direction", "must be >= 2"));
        }
        let last = (points_per_direction - 1) as f64;
        let shifts = (0..2 * points_per_direction - 1)
            .map(|i| {
                let k = i as f64 - last;
                max_shift * k / last
            })
            .collect();
        let grid = Self {
            shifts,
            tau,
            shots,
            noiseless: false,
            detuning_negative: default_neg_detuning(),
            detuning_positive: default_pos_detuning(),
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.shifts.is_empty() {
            return Err(invalid("shifts", "must not be empty"));
        }
        if self.shifts.iter().any(|s| !s.is_finite()) {
            return Err(invalid("shifts", "must be finite"));
        }
        if self.shifts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("shifts", "must be strictly increasing"));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(invalid("tau", "must be finite and > 0"));
        }
        if self.shots == 0 {
            return Err(invalid("shots", "must be >= 1"));
        }
        if !(self.detuning_negative < 0.0) || !(self.detuning_positive > 0.0) {
            return Err(invalid(
                "detuning",
                "negative branch needs Δ_qs < 0, positive branch Δ_qs > 0",
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }

    pub fn points_per_direction(&self) -> usize {
        let neg = self.shifts.iter().filter(|&&s| s < 0.0).count();
        let pos = self.shifts.iter().filter(|&&s| s > 0.0).count();
        let zero = usize::from(self.shifts.contains(&0.0));
        neg.max(pos) + zero
    }

    /// Tone detuning used to reach `shift`. Valid for anharmonicity well
    /// below −|Δ_qs|, which is the regime these detunings are chosen for.
    pub fn detuning_for(&self, shift: f64) -> f64 {
        if shift < 0.0 {
            self.detuning_negative
        } else {
            self.detuning_positive
        }
    }

    /// Index of the grid point nearest `shift`.
    pub fn nearest(&self, shift: f64) -> usize {
        let i = self.shifts.partition_point(|&s| s < shift);
        match i {
            0 => 0,
            i if i == self.shifts.len() => i - 1,
            i => {
                if (self.shifts[i] - shift).abs() < (shift - self.shifts[i - 1]).abs() {
                    i
                } else {
                    i - 1
                }
            }
        }
    }

    /// Largest |shift| on the grid.
    pub fn span(&self) -> f64 {
        self.shifts.iter().fold(0.0f64, |m, s| m.max(s.abs()))
    }
}

/// P1 over (time slice × shift). Missing cells are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectroscopyMap {
    pub qubit_id: String,
    /// Slice times (hours since campaign start).
    pub times: Vec<f64>,
    pub grid: ScanGrid,
    pub p1: Vec<Vec<Option<f64>>>,
}

impl SpectroscopyMap {
    pub fn new(qubit_id: impl Into<String>, grid: ScanGrid) -> Self {
        Self {
            qubit_id: qubit_id.into(),
            times: Vec::new(),
            grid,
            p1: Vec::new(),
        }
    }

    pub fn push_row(&mut self, time: f64, row: Vec<Option<f64>>) -> Result<()> {
        if row.len() != self.grid.len() {
            return Err(Error::LengthMismatch {
                left: row.len(),
                right: self.grid.len(),
            });
        }
        if row.iter().flatten().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(invalid("p1", "values must lie in [0, 1]"));
        }
        self.times.push(time);
        self.p1.push(row);
        Ok(())
    }

    pub fn n_slices(&self) -> usize {
        self.times.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.p1.len() != self.times.len() {
            return Err(Error::LengthMismatch {
                left: self.p1.len(),
                right: self.times.len(),
            });
        }
        for row in &self.p1 {
            if row.len() != self.grid.len() {
                return Err(Error::LengthMismatch {
                    left: row.len(),
                    right: self.grid.len(),
                });
            }
            if row.iter().flatten().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(invalid("p1", "values must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct T1Entry {
    pub time_hr: f64,
    /// `None` when the fit failed.
    pub t1_us: Option<f64>,
    pub stderr_us: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct T1TimeSeries {
    pub qubit_id: String,
    pub entries: Vec<T1Entry>,
}

impl T1TimeSeries {
    pub fn new(qubit_id: impl Into<String>) -> Self {
        Self {
            qubit_id: qubit_id.into(),
            entries: Vec::new(),
        }
    }

    /// Non-missing T1 values in time order.
    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().filter_map(|e| e.t1_us).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self
            .entries
            .windows(2)
            .any(|w| w[1].time_hr <= w[0].time_hr)
        {
            return Err(invalid("time_hr", "timestamps must be strictly increasing"));
        }
        if self
            .entries
            .iter()
            .filter_map(|e| e.t1_us)
            .any(|t| !(t > 0.0) || !t.is_finite())
        {
            return Err(invalid("t1_us", "must be finite and > 0"));
        }
        Ok(())
    }
}

/// Survival probability after `tau` µs with the qubit shifted by `shift` MHz.
pub fn expected_p1(qubit: &QubitModel, bath: &BathState, shift: f64, tau: f64) -> f64 {
    (-relaxation_rate(qubit, bath, shift) * tau).exp()
}

/// One fixed-delay P1 measurement: `k / shots` with `k ~ Binomial(shots, p)`.
pub fn measure_p1(
    qubit: &QubitModel,
    bath: &BathState,
    shift: f64,
    tau: f64,
    shots: u64,
    rng: &mut SimRng,
) -> Result<f64> {
    if shots == 0 {
        return Err(invalid("shots", "must be >= 1"));
    }
    let p = expected_p1(qubit, bath, shift, tau);
    Ok(sample_fraction(p, shots, rng))
}

fn sample_fraction(p: f64, shots: u64, rng: &mut SimRng) -> f64 {
    let k = Binomial::new(shots, p.clamp(0.0, 1.0))
        .expect("probability clamped to [0, 1]")
        .sample(rng);
    k as f64 / shots as f64
}

fn scan_cell(
    qubit: &QubitModel,
    bath: &BathState,
    grid: &ScanGrid,
    shift: f64,
    rng: &mut SimRng,
) -> Result<f64> {
    let wrap = |e: Error| Error::ScanCell {
        shift,
        source: Box::new(e),
    };
    let detuning = grid.detuning_for(shift);
    let amp = amplitude_for_shift(shift, qubit.delta_q, detuning).map_err(wrap)?;
    let realised = stark_shift(qubit.delta_q, amp, detuning).map_err(wrap)?;
    let p = expected_p1(qubit, bath, realised, grid.tau);
    Ok(if grid.noiseless {
        p
    } else {
        sample_fraction(p, grid.shots, rng)
    })
}

/// One spectroscopy row, cell by cell. Failed cells carry their error.
pub fn scan_cells(
    qubit: &QubitModel,
    bath: &BathState,
    grid: &ScanGrid,
    rng: &mut SimRng,
) -> Vec<Result<f64>> {
    grid.shifts
        .iter()
        .map(|&shift| scan_cell(qubit, bath, grid, shift, rng))
        .collect()
}

/// One spectroscopy row with the bath held fixed. Fails on the first cell
/// whose shift cannot be reached.
pub fn spectroscopy_scan(
    qubit: &QubitModel,
    bath: &BathState,
    grid: &ScanGrid,
    rng: &mut SimRng,
) -> Result<Vec<f64>> {
    grid.validate()?;
    scan_cells(qubit, bath, grid, rng).into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RamseyOptions {
    pub t2_star_us: f64,
}

impl Default for RamseyOptions {
    fn default() -> Self {
        Self { t2_star_us: 30.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftEstimate {
    /// MHz, signed.
    pub shift: f64,
    pub stderr: f64,
}

/// Even-spaced Ramsey delays (µs), starting at zero.
pub fn ramsey_delays(count: usize, window_us: f64) -> Vec<f64> {
    (0..count)
        .map(|i| window_us * i as f64 / (count.max(2) - 1) as f64)
        .collect()
}

pub fn ramsey_calibrate(
    qubit: &QubitModel,
    tone: &StarkTone,
    delays: &[f64],
    shots: u64,
    rng: &mut SimRng,
) -> Result<ShiftEstimate> {
    ramsey_calibrate_with(qubit, tone, delays, shots, RamseyOptions::default(), rng)
}

/// Simulate X- and Y-started Ramsey fringes under the Stark tone and read the
/// signed shift from the phase of `(2P_x − 1) + i(2P_y − 1)`.
///
/// A coarse periodogram peak removes the bulk rotation, then a
/// |z|²-weighted linear fit of the unwrapped residual phase gives the final
/// frequency and its standard error. Frequencies beyond the Nyquist limit of
/// the delay spacing alias.
pub fn ramsey_calibrate_with(
    qubit: &QubitModel,
    tone: &StarkTone,
    delays: &[f64],
    shots: u64,
    opts: RamseyOptions,
    rng: &mut SimRng,
) -> Result<ShiftEstimate> {
    if delays.len() < 8 {
        return Err(Error::TooShort {
            needed: 8,
            got: delays.len(),
        });
    }
    if delays.windows(2).any(|w| w[1] <= w[0]) || delays[0] < 0.0 {
        return Err(invalid(
            "delays",
            "must be non-negative and strictly increasing",
        ));
    }
    if shots == 0 {
        return Err(invalid("shots", "must be >= 1"));
    }
    let shift = tone.shift_on(qubit)?;

    let z: Vec<(f64, f64)> = delays
        .iter()
        .map(|&t| {
            let phase = 2.0 * PI * shift * t;
            let env = (-t / opts.t2_star_us).exp();
            let px = 0.5 * (1.0 + phase.cos() * env);
            let py = 0.5 * (1.0 + phase.sin() * env);
            let x = 2.0 * sample_fraction(px, shots, rng) - 1.0;
            let y = 2.0 * sample_fraction(py, shots, rng) - 1.0;
            (x, y)
        })
        .collect();

    let noise = 1.0 / (shots as f64).sqrt();
    let contrast = z.iter().map(|(x, y)| x.hypot(*y)).sum::<f64>() / z.len() as f64;
    if contrast < 3.0 * noise {
        return Err(Error::FitFailure(format!(
            "Ramsey contrast {contrast:.3e} is below 3x the shot noise {noise:.3e}"
        )));
    }

    let span = delays[delays.len() - 1] - delays[0];
    let min_dt = delays
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let nyquist = 0.5 / min_dt;
    let step = 1.0 / (8.0 * span);
    let n_freq = (2.0 * nyquist / step).ceil() as usize + 1;
    let power = |f: f64| {
        let (mut re, mut im) = (0.0, 0.0);
        for (&t, &(x, y)) in delays.iter().zip(&z) {
            let (s, c) = (-2.0 * PI * f * t).sin_cos();
            re += x * c - y * s;
            im += x * s + y * c;
        }
        re * re + im * im
    };
    let coarse = (0..n_freq)
        .map(|i| -nyquist + i as f64 * step)
        .map(|f| (f, power(f)))
        .fold((0.0, f64::NEG_INFINITY), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        })
        .0;

    // Residual phase after demodulating at the coarse frequency.
    let mut phases = Vec::with_capacity(z.len());
    let mut prev = 0.0;
    for (i, (&t, &(x, y))) in delays.iter().zip(&z).enumerate() {
        let (s, c) = (-2.0 * PI * coarse * t).sin_cos();
        let raw = (x * s + y * c).atan2(x * c - y * s);
        let unwrapped = if i == 0 {
            raw
        } else {
            prev + wrap_pi(raw - wrap_pi(prev))
        };
        phases.push(unwrapped);
        prev = unwrapped;
    }
    let weights: Vec<f64> = z.iter().map(|(x, y)| x * x + y * y).collect();
    let (slope, slope_se) = weighted_slope(delays, &phases, &weights)?;
    Ok(ShiftEstimate {
        shift: coarse + slope / (2.0 * PI),
        stderr: slope_se / (2.0 * PI),
    })
}

fn wrap_pi(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// Weighted least-squares slope with free intercept, and its standard error
/// scaled by the residual variance.
fn weighted_slope(x: &[f64], y: &[f64], w: &[f64]) -> Result<(f64, f64)> {
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(w).map(|(a, b)| b * (a - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let sxy: f64 = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((a, c), b)| b * (a - mx) * (c - my))
        .sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let n = x.len() as f64;
    let chi2: f64 = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((a, c), b)| b * (c - intercept - slope * a).powi(2))
        .sum();
    // Normalise weights so the residual variance estimate is scale-free.
    let s2 = chi2 / (n - 2.0) * n / sw;
    let se = (s2 * sw / n / sxx).sqrt();
    Ok((slope, se))
}

/// Full T1 decay settings. Defaults: 41 log-spaced delays up to 500 µs,
/// 300 shots each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct T1Protocol {
    pub n_delays: usize,
    pub min_delay_us: f64,
    pub max_delay_us: f64,
    pub shots: u64,
}

impl Default for T1Protocol {
    fn default() -> Self {
        Self {
            n_delays: 41,
            min_delay_us: 1.0,
            max_delay_us: 500.0,
            shots: 300,
        }
    }
}

impl T1Protocol {
    pub fn validate(&self) -> Result<()> {
        if self.n_delays < 3 {
            return Err(invalid("n_delays", "must be >= 3"));
        }
        if !(self.min_delay_us > 0.0) || !(self.max_delay_us > self.min_delay_us) {
            return Err(invalid("delays", "need 0 < min_delay_us < max_delay_us"));
        }
        if self.shots == 0 {
            return Err(invalid("shots", "must be >= 1"));
        }
        Ok(())
    }

    pub fn delays(&self) -> Vec<f64> {
        let (lo, hi) = (self.min_delay_us.ln(), self.max_delay_us.ln());
        let last = (self.n_delays - 1) as f64;
        (0..self.n_delays)
            .map(|i| (lo + (hi - lo) * i as f64 / last).exp())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct T1Fit {
    pub t1: f64,
    pub stderr: f64,
    pub amplitude: f64,
}

pub fn measure_t1(qubit: &QubitModel, bath: &BathState, rng: &mut SimRng) -> Result<T1Fit> {
    measure_t1_with(qubit, bath, &T1Protocol::default(), rng)
}

/// Sample P1 along the decay at zero Stark shift and fit `A exp(−t/T1)`.
pub fn measure_t1_with(
    qubit: &QubitModel,
    bath: &BathState,
    protocol: &T1Protocol,
    rng: &mut SimRng,
) -> Result<T1Fit> {
    protocol.validate()?;
    let delays = protocol.delays();
    let p1: Vec<f64> = delays
        .iter()
        .map(|&t| measure_p1(qubit, bath, 0.0, t, protocol.shots, rng))
        .collect::<Result<_>>()?;
    fit_t1(&delays, &p1, protocol.shots)
}

/// Least-squares fit of `A exp(−t/T1)` to a sampled decay.
pub fn fit_t1(delays: &[f64], p1: &[f64], shots: u64) -> Result<T1Fit> {
    let floor = 0.5 / (shots as f64).sqrt();
    if p1.iter().all(|&p| p < 2.0 * floor) {
        return Err(Error::FitFailure(format!(
            "every sample is below twice the shot-noise floor ({:.3})",
            2.0 * floor
        )));
    }
    // Log-linear starting point from the samples still well above the floor.
    let usable: Vec<(f64, f64)> = delays
        .iter()
        .zip(p1)
        .filter(|(_, &p)| p > 2.0 * floor)
        .map(|(&t, &p)| (t, p.ln()))
        .collect();
    let t1_guess = if usable.len() >= 2 {
        let n = usable.len() as f64;
        let mt = usable.iter().map(|u| u.0).sum::<f64>() / n;
        let ml = usable.iter().map(|u| u.1).sum::<f64>() / n;
        let sxy: f64 = usable.iter().map(|u| (u.0 - mt) * (u.1 - ml)).sum();
        let sxx: f64 = usable.iter().map(|u| (u.0 - mt).powi(2)).sum();
        let slope = sxy / sxx;
        if slope < 0.0 {
            -1.0 / slope
        } else {
            delays[delays.len() / 2]
        }
    } else {
        usable[0].0
    };
    let model = |p: &[f64], t: f64, g: &mut [f64]| {
        let e = (-t / p[1]).exp();
        g[0] = e;
        g[1] = p[0] * e * t / (p[1] * p[1]);
        p[0] * e
    };
    let fit = levenberg_marquardt(delays, p1, &[1.0, t1_guess], model, LmOptions::default())?;
    let (amplitude, t1) = (fit.params[0], fit.params[1]);
    if !(t1 > 0.0) || !t1.is_finite() {
        return Err(Error::FitFailure(format!(
            "fitted T1 = {t1} is not positive"
        )));
    }
    Ok(T1Fit {
        t1,
        stderr: fit.stderr(1),
        amplitude,
    })
}

/// When T1 decays and spectroscopy sweeps happen, on one clock (hours).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schedule {
    /// Number of daily T1 measurements.
    pub t1_days: usize,
    pub t1_interval_hr: f64,
    pub scan_interval_hr: f64,
    pub scan_count: usize,
    /// Time of the first scan (hours).
    pub scan_start_hr: f64,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            t1_days: 250,
            t1_interval_hr: 24.0,
            scan_interval_hr: 3.5,
            scan_count: Self::scans_over(272.0, 3.5),
            scan_start_hr: 0.0,
        }
    }
}

impl Schedule {
    /// Number of scans at `interval` spacing that fit in `horizon` hours,
    /// counting the one at time zero.
    pub fn scans_over(horizon: f64, interval: f64) -> usize {
        (horizon / interval + 1e-9).floor() as usize + 1
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t1_interval_hr > 0.0) || !(self.scan_interval_hr > 0.0) {
            return Err(invalid("schedule", "intervals must be > 0"));
        }
        if !(self.scan_start_hr >= 0.0) {
            return Err(invalid("scan_start_hr", "must be >= 0"));
        }
        Ok(())
    }

    fn events(&self) -> Vec<(f64, Event)> {
        let mut ev: Vec<(f64, Event)> = (0..self.t1_days)
            .map(|d| (d as f64 * self.t1_interval_hr, Event::T1))
            .chain((0..self.scan_count).map(|s| {
                (
                    self.scan_start_hr + s as f64 * self.scan_interval_hr,
                    Event::Scan,
                )
            }))
            .collect();
        // T1 before scan at equal times.
        ev.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        ev
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    T1,
    Scan,
}

/// Everything a campaign needs besides the device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignPlan {
    pub schedule: Schedule,
    pub grid: ScanGrid,
    pub t1: T1Protocol,
}

impl CampaignPlan {
    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        self.grid.validate()?;
        self.t1.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub t1_series: Vec<T1TimeSeries>,
    pub maps: Vec<SpectroscopyMap>,
}

/// Run the schedule on every qubit. Qubit `i` draws only from
/// `seeds.child(i)`, so the result does not depend on thread scheduling.
pub fn run_campaign(
    device: &[QubitModel],
    plan: &CampaignPlan,
    seeds: SeedStream,
) -> Result<CampaignResult> {
    plan.validate()?;
    for q in device {
        q.validate()?;
    }
    let events = plan.schedule.events();
    let per_qubit: Vec<(T1TimeSeries, SpectroscopyMap)> = device
        .par_iter()
        .enumerate()
        .map(|(i, q)| run_qubit(q, plan, &events, seeds.child(i as u64).rng()))
        .collect::<Result<_>>()?;
    let (t1_series, maps) = per_qubit.into_iter().unzip();
    Ok(CampaignResult { t1_series, maps })
}

fn run_qubit(
    qubit: &QubitModel,
    plan: &CampaignPlan,
    events: &[(f64, Event)],
    mut rng: SimRng,
) -> Result<(T1TimeSeries, SpectroscopyMap)> {
    let mut bath = BathState::stationary(qubit, 0.0, &mut rng);
    let mut series = T1TimeSeries::new(&qubit.id);
    let mut map = SpectroscopyMap::new(&qubit.id, plan.grid.clone());
    for &(time, event) in events {
        if time > bath.time {
            bath = evolve_bath(qubit, &bath, time - bath.time, &mut rng)?;
        }
        match event {
            Event::T1 => {
                let fit = measure_t1_with(qubit, &bath, &plan.t1, &mut rng).ok();
                series.entries.push(T1Entry {
                    time_hr: time,
                    t1_us: fit.map(|f| f.t1),
                    stderr_us: fit.map(|f| f.stderr),
                });
            }
            Event::Scan => {
                let row = scan_cells(qubit, &bath, &plan.grid, &mut rng)
                    .into_iter()
                    .map(Result::ok)
                    .collect();
                map.push_row(time, row)?;
            }
        }
    }
    Ok((series, map))
}
