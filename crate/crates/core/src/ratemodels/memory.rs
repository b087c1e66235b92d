//! Single-satellite memory protocols: one memory carried between the
//! stations, or two memories loaded on successive passes and swapped.

use serde::Serialize;

use super::finite_key::{finite_key_length, FiniteKeyParams};
use super::{check_fraction, check_positive, RateError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MemoryProtocol {
    SingleMemory,
    DoubleMemory,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProtocolParams {
    pub source_rate: f64,
    /// Duration of each station pass during which pairs are sent.
    pub transmission_period: f64,
    /// Write-and-read efficiency of one memory.
    pub memory_efficiency: f64,
    pub detector_efficiency: f64,
    /// Error probability added by each memory.
    pub memory_noise_prob: f64,
    /// Noise probabilities are per coincidence window.
    pub background_prob: f64,
    pub dark_count_prob: f64,
    pub coincidence_window: f64,
    pub memory_dephasing_rate: f64,
    /// Time a stored qubit waits for the satellite to reach the far station.
    pub storage_time: f64,
    /// Bell-measurement success for the double-memory swap.
    pub swap_efficiency: f64,
    pub error_correction_inefficiency: f64,
    pub security_epsilon: f64,
    /// Memory capacity in modes; infinity means never the bottleneck.
    pub multiplexing_modes: f64,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self {
            source_rate: 5e6,
            transmission_period: 240.0,
            memory_efficiency: 0.6,
            detector_efficiency: 0.8,
            memory_noise_prob: 1e-3,
            background_prob: 6.4e-7,
            dark_count_prob: 1e-7,
            coincidence_window: 200e-9,
            memory_dephasing_rate: 0.0,
            storage_time: 1200.0,
            // linear-optics Bell measurement with two detections
            swap_efficiency: 0.5 * 0.8 * 0.8,
            error_correction_inefficiency: 1.16,
            security_epsilon: 1e-9,
            multiplexing_modes: f64::INFINITY,
        }
    }
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("memory_efficiency", self.memory_efficiency),
            ("detector_efficiency", self.detector_efficiency),
            ("memory_noise_prob", self.memory_noise_prob),
            ("background_prob", self.background_prob),
            ("dark_count_prob", self.dark_count_prob),
            ("swap_efficiency", self.swap_efficiency),
            ("security_epsilon", self.security_epsilon),
        ] {
            check_fraction(name, v)?;
        }
        check_positive("source_rate", self.source_rate)?;
        check_positive("transmission_period", self.transmission_period)?;
        check_positive("coincidence_window", self.coincidence_window)?;
        check_positive("multiplexing_modes", self.multiplexing_modes)?;
        check_positive(
            "error_correction_inefficiency",
            self.error_correction_inefficiency,
        )?;
        for (name, v) in [
            ("memory_dephasing_rate", self.memory_dephasing_rate),
            ("storage_time", self.storage_time),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(RateError::InvalidParameter { name, value: v });
            }
        }
        Ok(())
    }

    fn finite_key(&self) -> FiniteKeyParams {
        FiniteKeyParams {
            ec_inefficiency: self.error_correction_inefficiency,
            eps_sec: self.security_epsilon,
            eps_cor: self.security_epsilon,
        }
    }

    fn noise_prob(&self) -> f64 {
        self.background_prob + self.dark_count_prob
    }

    fn dephasing_error(&self) -> f64 {
        0.5 * (1.0 - (-self.memory_dephasing_rate * self.storage_time).exp())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KeyOutcome {
    pub sifted_bits: f64,
    pub qber: f64,
    pub key_length: f64,
    /// Key bits per second of transmission time.
    pub key_rate: f64,
}

/// Finite-key outcome of one protocol run at `channel_loss_db` per
/// satellite-ground channel.
pub fn memory_key_rate(
    params: &ProtocolParams,
    channel_loss_db: f64,
    protocol: MemoryProtocol,
) -> Result<KeyOutcome> {
    params.validate()?;
    if !(channel_loss_db >= 0.0) {
        return Err(RateError::InvalidParameter {
            name: "channel_loss_db",
            value: channel_loss_db,
        });
    }
    let eta = 10f64.powf(-channel_loss_db / 10.0);
    let pn = params.noise_prob();
    let pulses = params.source_rate * params.transmission_period;
    let eta_d = params.detector_efficiency;
    let eta_m = params.memory_efficiency;
    // a click at the station, signal or noise, heralds a stored qubit
    let click_a = eta * eta_d + pn;
    let noise_a = if click_a > 0.0 { pn / click_a } else { 0.0 };
    let stored = (pulses * click_a).min(params.multiplexing_modes);
    let deph = params.dephasing_error();
    let pm = params.memory_noise_prob;
    let (events, qber, time) = match protocol {
        MemoryProtocol::SingleMemory => {
            let click_b = eta_m * eta * eta_d + pn;
            let noise_b = if click_b > 0.0 { pn / click_b } else { 0.0 };
            let e = 0.5 * (1.0 - (1.0 - noise_a) * (1.0 - noise_b)) + pm + deph;
            (stored * click_b, e, 2.0 * params.transmission_period)
        }
        MemoryProtocol::DoubleMemory => {
            // both memories filled by heralded pairs, then swapped
            let e = 0.5 * (1.0 - (1.0 - noise_a) * (1.0 - noise_a)) + 2.0 * (pm + deph);
            (
                stored * eta_m * eta_m * params.swap_efficiency,
                e,
                2.0 * params.transmission_period,
            )
        }
    };
    let qber = qber.min(0.5);
    let sifted = events / 2.0;
    let key_length = finite_key_length(sifted, qber, &params.finite_key());
    Ok(KeyOutcome {
        sifted_bits: sifted,
        qber,
        key_length,
        key_rate: key_length / time,
    })
}

/// Largest channel loss (0.01 dB resolution) that still yields key.
pub fn max_tolerable_loss(params: &ProtocolParams, protocol: MemoryProtocol) -> Result<f64> {
    if memory_key_rate(params, 0.0, protocol)?.key_length <= 0.0 {
        return Err(RateError::NoKeyAtZeroLoss);
    }
    let (mut lo, mut hi) = (0.0, 10.0);
    while memory_key_rate(params, hi, protocol)?.key_length > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1000.0 {
            return Ok(f64::INFINITY);
        }
    }
    while hi - lo > 0.01 {
        let m = 0.5 * (lo + hi);
        if memory_key_rate(params, m, protocol)?.key_length > 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    Ok(lo)
}
