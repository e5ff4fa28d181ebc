//! Qubit, Stark tone, and TLS bath.
//!
//! Frequencies are cyclic (ω/2π) in MHz unless a field says GHz; times are in
//! µs for pulse-level quantities and hours for bath dynamics.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{SeedStream, SimRng};

/// Converts a cyclic linewidth in MHz to a decay rate in 1/µs. Every TLS
/// contribution to the relaxation rate passes through this one constant.
pub const RATE_PER_MHZ: f64 = 2.0 * PI;

/// Minimum distance, in MHz, kept between the Stark tone and the 0-1 or 1-2
/// transition.
pub const DEFAULT_POLE_GUARD_MHZ: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TlsDefect {
    /// Mean frequency offset from the bare qubit (MHz).
    pub mu_freq: f64,
    /// Qubit-TLS coupling g (MHz).
    pub coupling_g: f64,
    /// TLS half linewidth Γ₂ (MHz).
    pub hwhm: f64,
    /// Mean-reversion rate θ (1/hr).
    pub ou_theta: f64,
    /// Diffusion strength σ (MHz/√hr).
    pub ou_sigma: f64,
}

impl TlsDefect {
    pub fn validate(&self) -> Result<()> {
        if !self.mu_freq.is_finite() {
            return Err(invalid("mu_freq", "must be finite"));
        }
        if !(self.coupling_g >= 0.0 && self.coupling_g.is_finite()) {
            return Err(invalid("coupling_g", "must be finite and >= 0"));
        }
        if !(self.hwhm > 0.0 && self.hwhm.is_finite()) {
            return Err(invalid("hwhm", "must be finite and > 0"));
        }
        if !(self.ou_theta >= 0.0 && self.ou_theta.is_finite()) {
            return Err(invalid("ou_theta", "must be finite and >= 0"));
        }
        if !(self.ou_sigma >= 0.0 && self.ou_sigma.is_finite()) {
            return Err(invalid("ou_sigma", "must be finite and >= 0"));
        }
        Ok(())
    }

    /// Standard deviation of the stationary frequency distribution, if one
    /// exists (θ > 0, or a frozen defect).
    pub fn stationary_std(&self) -> Option<f64> {
        if self.ou_theta > 0.0 {
            Some(self.ou_sigma / (2.0 * self.ou_theta).sqrt())
        } else if self.ou_sigma == 0.0 {
            Some(0.0)
        } else {
            None
        }
    }

    /// Golden-rule relaxation rate (1/µs) from this defect when the qubit sits
    /// `detuning` MHz away from it.
    pub fn rate_at(&self, detuning: f64) -> f64 {
        let g2 = self.coupling_g * self.coupling_g;
        RATE_PER_MHZ * 2.0 * g2 * self.hwhm / (self.hwhm * self.hwhm + detuning * detuning)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitModel {
    pub id: String,
    /// Bare 0-1 frequency (GHz).
    pub omega_q: f64,
    /// Anharmonicity δ_q (MHz, negative for transmons).
    pub delta_q: f64,
    /// Background relaxation rate (1/µs).
    pub gamma_0: f64,
    #[serde(default)]
    pub bath: Vec<TlsDefect>,
}

impl QubitModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_q > 0.0 && self.omega_q.is_finite()) {
            return Err(invalid("omega_q", "must be finite and > 0"));
        }
        if !(self.delta_q < 0.0 && self.delta_q.is_finite()) {
            return Err(invalid("delta_q", "must be finite and < 0"));
        }
        if !(self.gamma_0 >= 0.0 && self.gamma_0.is_finite()) {
            return Err(invalid("gamma_0", "must be finite and >= 0"));
        }
        self.bath.iter().try_for_each(TlsDefect::validate)
    }

    /// T1 with every defect removed, if the background rate is nonzero.
    pub fn background_t1(&self) -> Option<f64> {
        (self.gamma_0 > 0.0).then(|| 1.0 / self.gamma_0)
    }
}

/// Drive envelope of the Stark tone: a flat top with Gaussian edges of
/// `rise_sigmas`·σ on each side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub flat_us: f64,
    pub rise_sigma_ns: f64,
    pub rise_sigmas: f64,
}

impl Default for Envelope {
    fn default() -> Self {
        Self {
            flat_us: 50.0,
            rise_sigma_ns: 10.0,
            rise_sigmas: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarkTone {
    /// Δ_qs = ω_q − ω_s (MHz).
    pub delta_qs: f64,
    /// Ω_s (MHz).
    pub omega_s_amp: f64,
    #[serde(default)]
    pub envelope: Envelope,
}

impl StarkTone {
    pub fn new(delta_qs: f64, omega_s_amp: f64) -> Self {
        Self {
            delta_qs,
            omega_s_amp,
            envelope: Envelope::default(),
        }
    }

    /// Shift this tone produces on `qubit`.
    pub fn shift_on(&self, qubit: &QubitModel) -> Result<f64> {
        if !(self.omega_s_amp >= 0.0) {
            return Err(invalid("omega_s_amp", "must be >= 0"));
        }
        stark_shift(qubit.delta_q, self.omega_s_amp, self.delta_qs)
    }
}

fn check_poles(delta_q: f64, delta_qs: f64, guard: f64) -> Result<()> {
    let to_12 = (delta_q + delta_qs).abs();
    if delta_qs.abs() < guard || to_12 < guard || !delta_qs.is_finite() {
        return Err(Error::PoleProximity {
            detuning: delta_qs.abs(),
            to_12,
            guard,
        });
    }
    Ok(())
}

/// AC Stark shift of a Duffing oscillator:
/// `δ_q Ω_s² / (2 Δ_qs (δ_q + Δ_qs))`.
pub fn stark_shift(delta_q: f64, omega_s_amp: f64, delta_qs: f64) -> Result<f64> {
    stark_shift_with_guard(delta_q, omega_s_amp, delta_qs, DEFAULT_POLE_GUARD_MHZ)
}

pub fn stark_shift_with_guard(
    delta_q: f64,
    omega_s_amp: f64,
    delta_qs: f64,
    guard: f64,
) -> Result<f64> {
    check_poles(delta_q, delta_qs, guard)?;
    Ok(delta_q * omega_s_amp * omega_s_amp / (2.0 * delta_qs * (delta_q + delta_qs)))
}

/// Drive amplitude that produces `target` MHz of shift. Inverse of
/// [`stark_shift`] on the sign branch allowed by the detunings.
pub fn amplitude_for_shift(target: f64, delta_q: f64, delta_qs: f64) -> Result<f64> {
    check_poles(delta_q, delta_qs, DEFAULT_POLE_GUARD_MHZ)?;
    if target == 0.0 {
        return Ok(0.0);
    }
    let per_amp2 = delta_q / (2.0 * delta_qs * (delta_q + delta_qs));
    let amp2 = target / per_amp2;
    if !(amp2 > 0.0) || !amp2.is_finite() {
        return Err(Error::InfeasibleShift {
            target,
            achievable: if per_amp2 > 0.0 {
                "positive"
            } else {
                "negative"
            },
        });
    }
    Ok(amp2.sqrt())
}

/// Instantaneous TLS frequencies of one qubit's bath.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathState {
    /// Hours since campaign start.
    pub time: f64,
    /// Offset of each defect from the bare qubit (MHz), in bath order.
    pub freqs: Vec<f64>,
}

impl BathState {
    /// Every defect at its mean position.
    pub fn at_mean(qubit: &QubitModel, time: f64) -> Self {
        Self {
            time,
            freqs: qubit.bath.iter().map(|d| d.mu_freq).collect(),
        }
    }

    /// Independent draws from each defect's stationary law. Defects without
    /// one (θ = 0) start at their mean.
    pub fn stationary(qubit: &QubitModel, time: f64, rng: &mut SimRng) -> Self {
        let freqs = qubit
            .bath
            .iter()
            .map(|d| {
                let eta: f64 = rng.sample(StandardNormal);
                d.mu_freq + d.stationary_std().unwrap_or(0.0) * eta
            })
            .collect();
        Self { time, freqs }
    }
}

/// Total relaxation rate (1/µs) with the qubit shifted by `probe_offset` MHz.
pub fn relaxation_rate(qubit: &QubitModel, bath: &BathState, probe_offset: f64) -> f64 {
    assert_eq!(
        qubit.bath.len(),
        bath.freqs.len(),
        "bath state does not belong to qubit {}",
        qubit.id
    );
    qubit.gamma_0
        + qubit
            .bath
            .iter()
            .zip(&bath.freqs)
            .map(|(d, &f)| d.rate_at(probe_offset - f))
            .sum::<f64>()
}

/// Advance every defect by `dt` hours using the exact Ornstein-Uhlenbeck
/// transition density. One normal draw is consumed per defect.
pub fn evolve_bath(
    qubit: &QubitModel,
    bath: &BathState,
    dt: f64,
    rng: &mut SimRng,
) -> Result<BathState> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid("dt", "must be finite and > 0"));
    }
    assert_eq!(qubit.bath.len(), bath.freqs.len());
    let freqs = qubit
        .bath
        .iter()
        .zip(&bath.freqs)
        .map(|(d, &f)| {
            let eta: f64 = rng.sample(StandardNormal);
            let (decay, var) = if d.ou_theta > 0.0 {
                let decay = (-d.ou_theta * dt).exp();
                let var = d.ou_sigma * d.ou_sigma / (2.0 * d.ou_theta)
                    * -(-2.0 * d.ou_theta * dt).exp_m1();
                (decay, var)
            } else {
                (1.0, d.ou_sigma * d.ou_sigma * dt)
            };
            d.mu_freq + (f - d.mu_freq) * decay + var.sqrt() * eta
        })
        .collect();
    Ok(BathState {
        time: bath.time + dt,
        freqs,
    })
}

/// Recipe for drawing random TLS baths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BathSpec {
    pub n_defects: usize,
    /// Defect means are uniform on ±span_mhz.
    pub span_mhz: f64,
    /// Couplings are log-uniform on this range (MHz).
    pub coupling_mhz: [f64; 2],
    pub hwhm_mhz: [f64; 2],
    /// 1/θ, uniform on this range (hr).
    pub correlation_time_hr: [f64; 2],
    /// Stationary frequency std, uniform on this range (MHz).
    pub stationary_std_mhz: [f64; 2],
}

impl Default for BathSpec {
    fn default() -> Self {
        Self {
            n_defects: 20,
            span_mhz: 30.0,
            coupling_mhz: [0.02, 0.12],
            hwhm_mhz: [0.3, 1.0],
            correlation_time_hr: [12.0, 96.0],
            stationary_std_mhz: [0.5, 4.0],
        }
    }
}

impl BathSpec {
    pub fn validate(&self) -> Result<()> {
        let range_ok = |r: [f64; 2]| r[0] > 0.0 && r[1] >= r[0] && r[1].is_finite();
        if !(self.span_mhz >= 0.0) {
            return Err(invalid("span_mhz", "must be >= 0"));
        }
        if !range_ok(self.coupling_mhz) {
            return Err(invalid("coupling_mhz", "need 0 < lo <= hi"));
        }
        if !range_ok(self.hwhm_mhz) {
            return Err(invalid("hwhm_mhz", "need 0 < lo <= hi"));
        }
        if !range_ok(self.correlation_time_hr) {
            return Err(invalid("correlation_time_hr", "need 0 < lo <= hi"));
        }
        if !(self.stationary_std_mhz[0] >= 0.0
            && self.stationary_std_mhz[1] >= self.stationary_std_mhz[0])
        {
            return Err(invalid("stationary_std_mhz", "need 0 <= lo <= hi"));
        }
        Ok(())
    }

    /// Draw a bath; every coupling is multiplied by `coupling_scale`.
    pub fn sample(&self, coupling_scale: f64, rng: &mut SimRng) -> Vec<TlsDefect> {
        (0..self.n_defects)
            .map(|_| {
                let mu_freq = uniform(rng, [-self.span_mhz, self.span_mhz]);
                let log_g = uniform(rng, [self.coupling_mhz[0].ln(), self.coupling_mhz[1].ln()]);
                let hwhm = uniform(rng, self.hwhm_mhz);
                let theta = 1.0 / uniform(rng, self.correlation_time_hr);
                let std = uniform(rng, self.stationary_std_mhz);
                TlsDefect {
                    mu_freq,
                    coupling_g: coupling_scale * log_g.exp(),
                    hwhm,
                    ou_theta: theta,
                    ou_sigma: std * (2.0 * theta).sqrt(),
                }
            })
            .collect()
    }
}

/// Recipe for a whole synthetic device. Qubits differ in background T1 and
/// in an overall coupling scale of their bath, which sets their long-time
/// mean T1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticDevice {
    pub n_qubits: usize,
    pub omega_q_ghz: [f64; 2],
    pub delta_q: f64,
    pub background_t1_us: [f64; 2],
    pub coupling_scale: [f64; 2],
    pub bath: BathSpec,
}

impl Default for SyntheticDevice {
    fn default() -> Self {
        Self {
            n_qubits: 10,
            omega_q_ghz: [4.8, 5.2],
            delta_q: -340.0,
            background_t1_us: [250.0, 500.0],
            coupling_scale: [0.5, 1.5],
            bath: BathSpec::default(),
        }
    }
}

impl SyntheticDevice {
    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(invalid("n_qubits", "must be >= 1"));
        }
        if !(self.delta_q < 0.0) {
            return Err(invalid("delta_q", "must be < 0"));
        }
        if !(self.omega_q_ghz[0] > 0.0 && self.omega_q_ghz[1] >= self.omega_q_ghz[0]) {
            return Err(invalid("omega_q_ghz", "need 0 < lo <= hi"));
        }
        if !(self.background_t1_us[0] > 0.0 && self.background_t1_us[1] >= self.background_t1_us[0])
        {
            return Err(invalid("background_t1_us", "need 0 < lo <= hi"));
        }
        if !(self.coupling_scale[0] >= 0.0 && self.coupling_scale[1] >= self.coupling_scale[0]) {
            return Err(invalid("coupling_scale", "need 0 <= lo <= hi"));
        }
        self.bath.validate()
    }

    /// Qubit `i` is drawn from `seeds.child(i)`, so adding qubits never
    /// changes the ones already generated.
    pub fn generate(&self, seeds: SeedStream) -> Vec<QubitModel> {
        (0..self.n_qubits)
            .map(|i| {
                let mut rng = seeds.child(i as u64).rng();
                let omega_q = uniform(&mut rng, self.omega_q_ghz);
                let t1_bg = uniform(&mut rng, self.background_t1_us);
                let scale = uniform(&mut rng, self.coupling_scale);
                QubitModel {
                    id: format!("Q{i}"),
                    omega_q,
                    delta_q: self.delta_q,
                    gamma_0: 1.0 / t1_bg,
                    bath: self.bath.sample(scale, &mut rng),
                }
            })
            .collect()
    }
}

fn uniform(rng: &mut SimRng, range: [f64; 2]) -> f64 {
    range[0] + (range[1] - range[0]) * rng.random::<f64>()
}
