//! Satellite lens chains: construction, hop-by-hop propagation with loss
//! bookkeeping, and random alignment errors.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use thiserror::Error;

use crate::linkgeom::aperture_mask;
use crate::wavefield::{self, ComplexField, GaussianSpec, WaveError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("invalid lens: {0}")]
    InvalidLens(String),
    #[error("invalid chain: {0}")]
    InvalidChain(String),
    #[error("aperture offset ({x}, {y}) m pushes the aperture outside the window")]
    OffsetOutsideWindow { x: f64, y: f64 },
    #[error("invalid error spec: {0}")]
    InvalidErrors(String),
    #[error("power bookkeeping failed at hop {hop}: residual {residual}")]
    Bookkeeping { hop: usize, residual: f64 },
    #[error(transparent)]
    Wave(#[from] WaveError),
}

pub type Result<T> = std::result::Result<T, ChainError>;

/// Thin lens with a circular stop and a lumped power transmittance
/// (reflection and absorption losses of the telescope optics).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SatelliteLens {
    /// `f64::INFINITY` for a plain aperture.
    pub focal_length: f64,
    pub aperture_diameter: f64,
    pub transmittance: f64,
}

impl SatelliteLens {
    pub fn validate(&self) -> Result<()> {
        if !(self.aperture_diameter.is_finite() && self.aperture_diameter > 0.0) {
            return Err(ChainError::InvalidLens(format!(
                "aperture diameter {} m",
                self.aperture_diameter
            )));
        }
        if !(self.focal_length > 0.0) {
            return Err(ChainError::InvalidLens(format!(
                "focal length {} m",
                self.focal_length
            )));
        }
        if !(0.0..=1.0).contains(&self.transmittance) {
            return Err(ChainError::InvalidLens(format!(
                "transmittance {}",
                self.transmittance
            )));
        }
        Ok(())
    }
}

/// Power accounting for one lens pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LensPass {
    pub clipped: f64,
    pub absorbed: f64,
}

/// Apply a lens whose optical axis is displaced by `offset`.
pub fn apply_lens(
    field: &mut ComplexField,
    lens: &SatelliteLens,
    offset: (f64, f64),
) -> Result<LensPass> {
    lens.validate()?;
    let half = field.grid.window() / 2.0;
    let a = lens.aperture_diameter / 2.0;
    if offset.0.abs() + a > half || offset.1.abs() + a > half {
        return Err(ChainError::OffsetOutsideWindow {
            x: offset.0,
            y: offset.1,
        });
    }
    let p_in = field.power();
    let mask = aperture_mask(&field.grid, offset, lens.aperture_diameter);
    for (v, m) in field.data.iter_mut().zip(&mask) {
        *v *= *m;
    }
    let p_stop = field.power();
    if lens.focal_length.is_finite() {
        let k = field.wavenumber();
        let phase = |c: f64| -> Vec<f64> {
            field
                .grid
                .coords()
                .iter()
                .map(|&x| -k * (x - c) * (x - c) / (2.0 * lens.focal_length))
                .collect()
        };
        let (px, py) = (phase(offset.0), phase(offset.1));
        field.apply_separable_phase(&px, &py);
    }
    field.scale(lens.transmittance.sqrt());
    Ok(LensPass {
        clipped: p_in - p_stop,
        absorbed: p_stop * (1.0 - lens.transmittance),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainSpec {
    pub separation: f64,
    pub hops: usize,
    pub lens: SatelliteLens,
}

impl ChainSpec {
    /// Hop count needed to cover `distance` at `separation` (rounded up).
    pub fn hops_for(distance: f64, separation: f64) -> usize {
        (distance / separation - 1e-9).ceil().max(1.0) as usize
    }
}

/// One satellite preceded by the free-space gap leading to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainElement {
    pub gap: f64,
    pub lens: SatelliteLens,
    pub offset: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub elements: Vec<ChainElement>,
}

pub fn build_chain(spec: &ChainSpec) -> Result<Chain> {
    spec.lens.validate()?;
    if !(spec.separation.is_finite() && spec.separation > 0.0) {
        return Err(ChainError::InvalidChain(format!(
            "separation {} m",
            spec.separation
        )));
    }
    if spec.hops == 0 {
        return Err(ChainError::InvalidChain("zero hops".into()));
    }
    Ok(Chain {
        elements: vec![
            ChainElement {
                gap: spec.separation,
                lens: spec.lens,
                offset: (0.0, 0.0),
            };
            spec.hops
        ],
    })
}

/// Lowest-order eigenmode of a uniform lens guide with spacing `l` and
/// focal length `f`, given just after a lens. Requires `0 < l < 4f`.
pub fn guide_eigenmode(l: f64, f: f64, wavelength: f64) -> Result<GaussianSpec> {
    if !(l > 0.0 && l < 4.0 * f) {
        return Err(ChainError::InvalidChain(format!(
            "spacing {l} m and focal length {f} m give no stable mode"
        )));
    }
    // symmetric solution: waist midway between lenses
    let g = 1.0 - l / (2.0 * f);
    let w_lens2 = wavelength * l / PI / (1.0 - g * g).sqrt();
    let waist = w_lens2.sqrt();
    // wavefront just after the lens converges onto the mid-gap waist
    let zr_mid2 = {
        let w0_2 = w_lens2 * (1.0 + g) / 2.0;
        let zr = PI * w0_2 / wavelength;
        zr * zr
    };
    let half = l / 2.0;
    let r = -(half + zr_mid2 / half);
    Ok(GaussianSpec::curved(waist, r))
}

/// Per-hop power record. Powers are absolute (the launch power is usually 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HopRecord {
    pub hop: usize,
    pub power_in: f64,
    /// After free-space travel and the edge absorber, before the stop.
    pub power_before_aperture: f64,
    pub power_after_aperture: f64,
    pub power_after_transmittance: f64,
    pub cumulative_db: f64,
}

impl HopRecord {
    pub fn walkoff(&self) -> f64 {
        self.power_in - self.power_before_aperture
    }
    pub fn clipped(&self) -> f64 {
        self.power_before_aperture - self.power_after_aperture
    }
    pub fn absorbed(&self) -> f64 {
        self.power_after_aperture - self.power_after_transmittance
    }
    pub fn loss_db(&self) -> f64 {
        -10.0 * (self.power_after_transmittance / self.power_in).log10()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainTrace {
    pub launch_power: f64,
    pub hops: Vec<HopRecord>,
    pub field: ComplexField,
    /// Hops in the chain; larger than `hops.len()` for extrapolated runs.
    pub total_hops: usize,
    pub extrapolated_db: Option<f64>,
    pub steady_state: bool,
}

impl ChainTrace {
    /// Total loss in dB, including any extrapolated tail.
    pub fn loss_db(&self) -> f64 {
        if let Some(db) = self.extrapolated_db {
            return db;
        }
        self.hops.last().map_or(0.0, |h| h.cumulative_db)
    }

    pub fn simulated_db(&self) -> f64 {
        self.hops.last().map_or(0.0, |h| h.cumulative_db)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HopMode {
    Full,
    /// Simulate this many hops, then extend the mean per-hop loss of the
    /// final quarter over the remainder.
    Reduced(usize),
}

/// Pushes `field` through the chain in place of the launch aperture.
pub fn propagate_chain(field: &ComplexField, chain: &Chain) -> Result<ChainTrace> {
    propagate_chain_with(field, chain, HopMode::Full)
}

pub fn propagate_chain_with(
    field: &ComplexField,
    chain: &Chain,
    mode: HopMode,
) -> Result<ChainTrace> {
    let total = chain.elements.len();
    let run = match mode {
        HopMode::Full => total,
        HopMode::Reduced(k) => k.clamp(1, total),
    };
    let launch_power = field.power();
    if launch_power <= 0.0 {
        return Err(WaveError::ZeroPower.into());
    }
    let mut f = field.clone();
    let mut hops = Vec::with_capacity(run);
    for (i, el) in chain.elements.iter().take(run).enumerate() {
        let power_in = f.power();
        f = wavefield::propagate(&f, el.gap)?;
        wavefield::absorb_guard_band(&mut f);
        let before = f.power();
        let pass = apply_lens(&mut f, &el.lens, el.offset)?;
        let after = f.power();
        let residual = before - (after + pass.clipped + pass.absorbed);
        if residual.abs() > 1e-9 * power_in.max(1e-300) {
            return Err(ChainError::Bookkeeping { hop: i, residual });
        }
        hops.push(HopRecord {
            hop: i,
            power_in,
            power_before_aperture: before,
            power_after_aperture: before - pass.clipped,
            power_after_transmittance: after,
            cumulative_db: -10.0 * (after / launch_power).log10(),
        });
    }
    let (extrapolated_db, steady_state) = if run < total {
        let tail = (run / 4).max(1);
        let recent: Vec<f64> = hops[run - tail..].iter().map(|h| h.loss_db()).collect();
        let mean = recent.iter().sum::<f64>() / tail as f64;
        let (lo, hi) = recent
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            });
        // halves of the tail should agree once transients have died out
        let first: f64 = recent[..tail / 2].iter().sum::<f64>() / (tail / 2).max(1) as f64;
        let second: f64 = recent[tail / 2..].iter().sum::<f64>() / (tail - tail / 2) as f64;
        let steady = tail >= 4 && (first - second).abs() <= 0.25 * (hi - lo).max(mean.abs());
        let simulated = hops.last().map_or(0.0, |h| h.cumulative_db);
        (Some(simulated + mean * (total - run) as f64), steady)
    } else {
        (None, true)
    };
    Ok(ChainTrace {
        launch_power,
        hops,
        field: f,
        total_hops: total,
        extrapolated_db,
        steady_state,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ErrorDistribution {
    /// Uniform on `[-bound, bound]`.
    Uniform,
    /// Zero-mean normal with the bound as its standard deviation.
    Gaussian,
}

/// Magnitudes of independent per-satellite alignment errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorSpec {
    /// Relative error of each gap.
    pub separation_frac: f64,
    /// Lateral error of each aperture, per axis, in metres.
    pub lateral: f64,
    /// Relative focal-length error.
    pub focal_frac: f64,
    pub distribution: ErrorDistribution,
}

impl ErrorSpec {
    pub fn none() -> Self {
        Self {
            separation_frac: 0.0,
            lateral: 0.0,
            focal_frac: 0.0,
            distribution: ErrorDistribution::Uniform,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("separation", self.separation_frac),
            ("lateral", self.lateral),
            ("focal", self.focal_frac),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ChainError::InvalidErrors(format!("{name} magnitude {v}")));
            }
        }
        if self.separation_frac >= 1.0 || self.focal_frac >= 1.0 {
            return Err(ChainError::InvalidErrors(
                "relative errors must stay below 100%".into(),
            ));
        }
        Ok(())
    }
}

fn draw(rng: &mut ChaCha8Rng, bound: f64, dist: ErrorDistribution) -> f64 {
    if bound == 0.0 {
        return 0.0;
    }
    match dist {
        ErrorDistribution::Uniform => rng.random_range(-bound..=bound),
        ErrorDistribution::Gaussian => Normal::new(0.0, bound).expect("finite sigma").sample(rng),
    }
}

/// Independently perturbs every element; identical seeds give identical
/// chains.
pub fn perturb_chain(chain: &Chain, errors: &ErrorSpec, seed: u64) -> Result<Chain> {
    errors.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = errors.distribution;
    let elements = chain
        .elements
        .iter()
        .map(|el| {
            let es = draw(&mut rng, errors.separation_frac, d);
            let ex = draw(&mut rng, errors.lateral, d);
            let ey = draw(&mut rng, errors.lateral, d);
            let ef = draw(&mut rng, errors.focal_frac, d);
            let mut lens = el.lens;
            lens.focal_length *= 1.0 + ef;
            ChainElement {
                gap: el.gap * (1.0 + es),
                lens,
                offset: (el.offset.0 + ex, el.offset.1 + ey),
            }
        })
        .collect();
    Ok(Chain { elements })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hop_count_rounds_up() {
        assert_eq!(ChainSpec::hops_for(20_000e3, 120e3), 167);
        assert_eq!(ChainSpec::hops_for(20_000e3, 80e3), 250);
        assert_eq!(ChainSpec::hops_for(20_000e3, 4e3), 5000);
    }

    #[test]
    fn confocal_eigenmode() {
        let m = guide_eigenmode(120e3, 60e3, 800e-9).unwrap();
        assert!((m.waist - (800e-9 * 120e3 / PI).sqrt()).abs() < 1e-12);
        assert!((m.wavefront_radius + 120e3).abs() < 1e-6);
        assert!(guide_eigenmode(120e3, 20e3, 800e-9).is_err());
    }

    #[test]
    fn lens_validation() {
        let bad = SatelliteLens {
            focal_length: 60e3,
            aperture_diameter: 0.6,
            transmittance: 1.5,
        };
        assert!(bad.validate().is_err());
    }
}
