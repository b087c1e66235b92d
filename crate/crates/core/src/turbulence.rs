//! Kolmogorov phase screens and the ground-to-orbit uplink.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use thiserror::Error;

use crate::wavefield::{self, fft2, ComplexField, Grid, WaveError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TurbulenceError {
    #[error("Fried parameter must be positive and finite, got {0} m")]
    InvalidR0(f64),
    #[error("invalid turbulence profile: {0}")]
    InvalidProfile(String),
    #[error("target loss {target} dB is outside the reachable range [{low}, {high}] dB")]
    BracketExhausted { target: f64, low: f64, high: f64 },
    #[error(transparent)]
    Wave(#[from] WaveError),
}

pub type Result<T> = std::result::Result<T, TurbulenceError>;

/// Subharmonic levels added below the lowest FFT frequency.
pub const SUBHARMONIC_LEVELS: u32 = 3;

/// Kolmogorov phase PSD coefficient (rad^2 m^2 with f in cycles/m).
const PSD_COEFF: f64 = 0.023;

/// Phase screen in radians, row-major on `grid`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseScreen {
    pub grid: Grid,
    pub r0: f64,
    pub phase: Vec<f64>,
}

fn psd(f: f64, r0: f64) -> f64 {
    PSD_COEFF * r0.powf(-5.0 / 3.0) * f.powf(-11.0 / 3.0)
}

/// Random Kolmogorov screen by spectral filtering of white noise, with
/// three levels of subharmonics for the large scales the window misses.
pub fn make_screen(grid: &Grid, r0: f64, seed: u64) -> Result<PhaseScreen> {
    if !(r0.is_finite() && r0 > 0.0) {
        return Err(TurbulenceError::InvalidR0(r0));
    }
    let n = grid.n();
    let w = grid.window();
    let df = 1.0 / w;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = || -> f64 { StandardNormal.sample(&mut rng) };

    let mut spec = vec![Complex64::default(); n * n];
    for iy in 0..n {
        let fy = signed(iy, n) * df;
        for ix in 0..n {
            let fx = signed(ix, n) * df;
            let f = (fx * fx + fy * fy).sqrt();
            let (a, b) = (gauss(), gauss());
            if f > 0.0 {
                spec[iy * n + ix] = Complex64::new(a, b) * psd(f, r0).sqrt() * df;
            }
        }
    }
    fft2(&mut spec, n, true);
    let mut phase: Vec<f64> = spec.iter().map(|c| c.re).collect();

    let xs = grid.coords();
    let mut low = vec![0.0; n * n];
    for p in 1..=SUBHARMONIC_LEVELS {
        let dfp = df / 3f64.powi(p as i32);
        for jy in -1i32..=1 {
            for jx in -1i32..=1 {
                let (a, b) = (gauss(), gauss());
                if jx == 0 && jy == 0 {
                    continue;
                }
                let (fx, fy) = (jx as f64 * dfp, jy as f64 * dfp);
                let c = Complex64::new(a, b) * cell_psd(fx, fy, dfp, r0).sqrt() * dfp;
                let ex: Vec<Complex64> = xs
                    .iter()
                    .map(|&x| Complex64::from_polar(1.0, 2.0 * PI * fx * x))
                    .collect();
                for (iy, row) in low.chunks_mut(n).enumerate() {
                    let ey = c * Complex64::from_polar(1.0, 2.0 * PI * fy * xs[iy]);
                    for (v, e) in row.iter_mut().zip(&ex) {
                        *v += (ey * e).re;
                    }
                }
            }
        }
    }
    let mean = low.iter().sum::<f64>() / low.len() as f64;
    for (p, l) in phase.iter_mut().zip(&low) {
        *p += l - mean;
    }
    Ok(PhaseScreen {
        grid: *grid,
        r0,
        phase,
    })
}

/// PSD averaged over the square cell of side `d` centred on `(fx, fy)`.
/// The spectrum is steep near the origin, so a single sample at the
/// centre badly misstates the power of a subharmonic cell.
fn cell_psd(fx: f64, fy: f64, d: f64, r0: f64) -> f64 {
    const M: usize = 8;
    let off = |k: usize| ((k as f64 + 0.5) / M as f64 - 0.5) * d;
    let mut s = 0.0;
    for j in 0..M {
        for i in 0..M {
            let (x, y) = (fx + off(i), fy + off(j));
            s += psd((x * x + y * y).sqrt(), r0);
        }
    }
    s / (M * M) as f64
}

fn signed(i: usize, n: usize) -> f64 {
    if i < n / 2 {
        i as f64
    } else {
        i as f64 - n as f64
    }
}

/// Discrete layers of the turbulent atmosphere.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtmosphereProfile {
    /// Screen altitudes in metres, ascending, first at ground level.
    pub altitudes: Vec<f64>,
    /// Share of the integrated turbulence strength held by each layer.
    pub weights: Vec<f64>,
    /// Integrated Fried parameter of the whole column.
    pub r0: f64,
}

impl AtmosphereProfile {
    /// Five layers at 0, 2.5, 5, 10 and 20 km, strongest at the ground.
    pub fn standard(r0: f64) -> Self {
        Self {
            altitudes: vec![0.0, 2.5e3, 5e3, 10e3, 20e3],
            weights: vec![0.6, 0.15, 0.1, 0.1, 0.05],
            r0,
        }
    }

    pub fn with_r0(&self, r0: f64) -> Self {
        Self { r0, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r0.is_finite() && self.r0 > 0.0) {
            return Err(TurbulenceError::InvalidR0(self.r0));
        }
        if self.altitudes.is_empty() || self.altitudes.len() != self.weights.len() {
            return Err(TurbulenceError::InvalidProfile(
                "need one weight per layer".into(),
            ));
        }
        if self.altitudes.windows(2).any(|w| w[1] <= w[0]) || self.altitudes[0] < 0.0 {
            return Err(TurbulenceError::InvalidProfile(
                "altitudes must ascend from the ground".into(),
            ));
        }
        let sum: f64 = self.weights.iter().sum();
        if self.weights.iter().any(|&w| !(w > 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(TurbulenceError::InvalidProfile(
                "weights must be positive and sum to one".into(),
            ));
        }
        Ok(())
    }

    /// Fried parameter of each layer.
    pub fn layer_r0(&self) -> Vec<f64> {
        self.weights
            .iter()
            .map(|w| self.r0 * w.powf(-3.0 / 5.0))
            .collect()
    }
}

/// Integrated Fried parameter of independent layers.
pub fn combine_r0(layers: &[f64]) -> f64 {
    layers
        .iter()
        .map(|r| r.powf(-5.0 / 3.0))
        .sum::<f64>()
        .powf(-3.0 / 5.0)
}

fn layer_seed(seed: u64, layer: usize) -> u64 {
    crate::scenarios::derive_seed(seed, layer as u64)
}

/// Carries a ground-launched field through the layered atmosphere and on to
/// orbit. The result is sampled on the input grid, re-centred at the
/// satellite.
pub fn uplink_channel(
    field: &ComplexField,
    profile: &AtmosphereProfile,
    orbit_altitude: f64,
    seed: u64,
) -> Result<ComplexField> {
    profile.validate()?;
    let top = *profile.altitudes.last().expect("validated");
    if !(orbit_altitude > top) {
        return Err(TurbulenceError::InvalidProfile(format!(
            "orbit altitude {orbit_altitude} m is inside the turbulent layer"
        )));
    }
    let r0s = profile.layer_r0();
    let mut f = field.clone();
    let mut height = 0.0;
    for (i, (&h, &r0)) in profile.altitudes.iter().zip(&r0s).enumerate() {
        if h > height {
            f = wavefield::propagate(&f, h - height)?;
            wavefield::absorb_guard_band(&mut f);
            height = h;
        }
        let screen = make_screen(&f.grid, r0, layer_seed(seed, i))?;
        f.apply_phase(&screen.phase);
    }
    let out = f.grid;
    Ok(wavefield::fresnel_zoom(&f, orbit_altitude - height, &out)?)
}

/// Same path with the screens removed; the diffraction-only reference.
pub fn vacuum_uplink(
    field: &ComplexField,
    profile: &AtmosphereProfile,
    orbit_altitude: f64,
) -> Result<ComplexField> {
    profile.validate()?;
    let mut f = field.clone();
    let mut height = 0.0;
    for &h in &profile.altitudes {
        if h > height {
            f = wavefield::propagate(&f, h - height)?;
            wavefield::absorb_guard_band(&mut f);
            height = h;
        }
    }
    let out = f.grid;
    Ok(wavefield::fresnel_zoom(&f, orbit_altitude - height, &out)?)
}

/// Everything besides r0 that fixes the mean uplink loss.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UplinkGeometry {
    pub tx_waist: f64,
    pub wavelength: f64,
    pub orbit_altitude: f64,
    /// Diameter of the first satellite's collecting aperture.
    pub rx_aperture: f64,
    pub grid_n: usize,
    pub window: f64,
    pub seeds: usize,
    pub seed: u64,
    /// Layer shape; its own r0 is ignored.
    pub profile: AtmosphereProfile,
}

impl UplinkGeometry {
    pub fn launch(&self) -> Result<ComplexField> {
        let grid = Grid::new(self.window, self.grid_n)?;
        let spec = wavefield::GaussianSpec::collimated(self.tx_waist);
        Ok(wavefield::gaussian_field(&grid, &spec, self.wavelength)?)
    }

    pub fn seed_for(&self, trial: usize) -> u64 {
        crate::scenarios::derive_seed(self.seed, 1000 + trial as u64)
    }
}

/// Ensemble-mean loss into the receiving aperture, from the mean captured
/// fraction. The same seeds are used for every r0 so the curve is smooth.
pub fn mean_uplink_loss(geometry: &UplinkGeometry, r0: f64) -> Result<f64> {
    let launch = geometry.launch()?;
    let profile = geometry.profile.with_r0(r0);
    let mut captured = 0.0;
    for t in 0..geometry.seeds {
        let f = uplink_channel(
            &launch,
            &profile,
            geometry.orbit_altitude,
            geometry.seed_for(t),
        )?;
        captured +=
            wavefield::encircled_power(&f, (0.0, 0.0), geometry.rx_aperture / 2.0) / launch.power();
    }
    Ok(-10.0 * (captured / geometry.seeds as f64).log10())
}

/// Profile whose mean uplink loss matches `target_db` within `tol_db`.
pub fn calibrate_profile(
    target_db: f64,
    tol_db: f64,
    geometry: &UplinkGeometry,
) -> Result<AtmosphereProfile> {
    let r0 = calibrate_r0(target_db, tol_db, |r0| mean_uplink_loss(geometry, r0))?;
    Ok(geometry.profile.with_r0(r0))
}

/// Search bounds for [`calibrate_r0`].
pub const R0_MIN: f64 = 0.01;
pub const R0_MAX: f64 = 1.0;

/// Finds the integrated r0 for which `loss_db(r0)` (an ensemble-mean
/// uplink loss, decreasing in r0) meets `target_db`.
///
/// Bisects in log r0 between [`R0_MIN`] and [`R0_MAX`] and stops once the
/// loss is within `tol_db` of the target.
pub fn calibrate_r0(
    target_db: f64,
    tol_db: f64,
    mut loss_db: impl FnMut(f64) -> Result<f64>,
) -> Result<f64> {
    let hi_loss = loss_db(R0_MIN)?;
    let lo_loss = loss_db(R0_MAX)?;
    if (target_db - lo_loss).abs() <= tol_db {
        return Ok(R0_MAX);
    }
    if (target_db - hi_loss).abs() <= tol_db {
        return Ok(R0_MIN);
    }
    if target_db < lo_loss || target_db > hi_loss {
        return Err(TurbulenceError::BracketExhausted {
            target: target_db,
            low: lo_loss,
            high: hi_loss,
        });
    }
    let (mut a, mut b) = (R0_MIN.ln(), R0_MAX.ln());
    let (mut la, mut lb) = (hi_loss, lo_loss);
    for _ in 0..40 {
        // secant guess in log r0, kept away from the ends of the bracket
        let t = ((la - target_db) / (la - lb)).clamp(0.1, 0.9);
        let m = a + t * (b - a);
        let lm = loss_db(m.exp())?;
        if (lm - target_db).abs() <= tol_db {
            return Ok(m.exp());
        }
        if lm > target_db {
            a = m;
            la = lm;
        } else {
            b = m;
            lb = lm;
        }
    }
    Ok((0.5 * (a + b)).exp())
}

/// Empirical phase structure function at lag `lag` cells along both axes.
pub fn structure_function(screen: &PhaseScreen, lag: usize) -> f64 {
    let n = screen.grid.n();
    let p = &screen.phase;
    let (mut s, mut c) = (0.0, 0usize);
    for iy in 0..n - lag {
        for ix in 0..n - lag {
            let v = p[iy * n + ix];
            let dx = p[iy * n + ix + lag] - v;
            let dy = p[(iy + lag) * n + ix] - v;
            s += dx * dx + dy * dy;
            c += 2;
        }
    }
    s / c as f64
}

/// Kolmogorov structure function `6.88 (r/r0)^(5/3)`.
pub fn kolmogorov_structure(r: f64, r0: f64) -> f64 {
    6.88 * (r / r0).powf(5.0 / 3.0)
}
