//! Protocol rate models: direct transmission, nested repeaters, direct GEO
//! distribution and the single/double memory satellite protocols.

mod finite_key;
mod memory;
mod repeater;

pub use finite_key::{asymptotic_fraction, binary_entropy, finite_key_length, FiniteKeyParams};
pub use memory::{max_tolerable_loss, memory_key_rate, KeyOutcome, MemoryProtocol, ProtocolParams};
pub use repeater::{
    geo_direct_curve, geo_direct_rate, ground_link_pair_loss, repeater_direct_crossover,
    repeater_rate, space_link_pair_loss, GeoParams, RepeaterParams,
};

use serde::Serialize;
use thiserror::Error;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RateError {
    #[error("degenerate parameters: {0}")]
    Degenerate(String),
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("no secret key even at zero channel loss")]
    NoKeyAtZeroLoss,
    #[error("curve abscissa must be strictly increasing")]
    UnsortedAbscissa,
}

pub type Result<T> = std::result::Result<T, RateError>;

pub(crate) fn check_fraction(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(RateError::InvalidParameter { name, value })
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && !value.is_nan() {
        Ok(())
    } else {
        Err(RateError::InvalidParameter { name, value })
    }
}

/// Rate surviving `total_loss_db` of transmission loss.
pub fn direct_rate(source_rate: f64, total_loss_db: f64) -> f64 {
    source_rate * 10f64.powf(-total_loss_db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Abscissa {
    DistanceKm,
    LossDb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RateUnit {
    Hz,
    PerDay,
    BitsPerSecond,
}

/// Rate sampled over distance or loss for one protocol.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateCurve {
    pub protocol: String,
    pub abscissa: Abscissa,
    pub unit: RateUnit,
    pub x: Vec<f64>,
    pub rate: Vec<f64>,
}

impl RateCurve {
    pub fn new(
        protocol: impl Into<String>,
        abscissa: Abscissa,
        unit: RateUnit,
        x: Vec<f64>,
        rate: Vec<f64>,
    ) -> Result<Self> {
        if x.len() != rate.len() || x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(RateError::UnsortedAbscissa);
        }
        if rate.iter().any(|r| !(*r >= 0.0)) {
            return Err(RateError::InvalidParameter {
                name: "rate",
                value: rate
                    .iter()
                    .copied()
                    .find(|r| !(*r >= 0.0))
                    .unwrap_or(f64::NAN),
            });
        }
        Ok(Self {
            protocol: protocol.into(),
            abscissa,
            unit,
            x,
            rate,
        })
    }

    /// Abscissae where `self` and `other` swap order, linearly interpolated
    /// in log rate. Both curves must share their abscissa samples.
    pub fn crossings(&self, other: &RateCurve) -> Vec<f64> {
        let mut out = Vec::new();
        let diff = |i: usize| {
            let (a, b) = (self.rate[i].max(1e-300), other.rate[i].max(1e-300));
            a.ln() - b.ln()
        };
        for i in 1..self.x.len().min(other.x.len()) {
            let (d0, d1) = (diff(i - 1), diff(i));
            if d0 == 0.0 {
                continue;
            }
            if d0.signum() != d1.signum() || d1 == 0.0 {
                let t = d0 / (d0 - d1);
                out.push(self.x[i - 1] + t * (self.x[i] - self.x[i - 1]));
            }
        }
        out
    }
}

/// `n` evenly spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![a];
    }
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}
