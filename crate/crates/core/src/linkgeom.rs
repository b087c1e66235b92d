//! Earth-satellite geometry, atmospheric extinction and pointing loss.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::wavefield::{self, ComplexField, GaussianSpec, Grid, WaveError};

pub const EARTH_RADIUS: f64 = 6_371e3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("zenith angle {0} deg is outside [0, 90)")]
    InvalidZenith(f64),
    #[error("no extinction entry for wavelength {0} m")]
    UnknownWavelength(f64),
    #[error("beam divergence must be positive, got {0} rad")]
    InvalidDivergence(f64),
    #[error("pointing jitter must be non-negative, got {0} rad")]
    InvalidJitter(f64),
    #[error("invalid link geometry: {0}")]
    InvalidLink(String),
    #[error(transparent)]
    Wave(#[from] WaveError),
}

pub type Result<T> = std::result::Result<T, GeomError>;

fn check_zenith(zenith_deg: f64) -> Result<()> {
    if (0.0..90.0).contains(&zenith_deg) {
        Ok(())
    } else {
        Err(GeomError::InvalidZenith(zenith_deg))
    }
}

/// Relative air mass, normalised to exactly 1 at zenith.
///
/// Kasten & Young (1989) interpolation, which stays finite down to the
/// horizon.
pub fn air_mass(zenith_deg: f64) -> Result<f64> {
    check_zenith(zenith_deg)?;
    Ok(kasten_young(zenith_deg) / kasten_young(0.0))
}

fn kasten_young(z: f64) -> f64 {
    1.0 / (z.to_radians().cos() + 0.50572 * (96.07995 - z).powf(-1.6364))
}

/// Zenith extinction per wavelength, scaled by air mass off zenith.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttenuationModel {
    /// `(wavelength m, zenith loss dB)` pairs.
    pub zenith_db: Vec<(f64, f64)>,
}

impl Default for AttenuationModel {
    fn default() -> Self {
        Self {
            zenith_db: vec![(580e-9, 1.0), (800e-9, 0.7), (1550e-9, 0.5)],
        }
    }
}

impl AttenuationModel {
    pub fn zenith_loss_db(&self, wavelength: f64) -> Result<f64> {
        self.zenith_db
            .iter()
            .find(|(l, _)| ((l - wavelength) / wavelength).abs() < 1e-6)
            .map(|&(_, db)| db)
            .ok_or(GeomError::UnknownWavelength(wavelength))
    }
}

pub fn atmospheric_db(model: &AttenuationModel, wavelength: f64, zenith_deg: f64) -> Result<f64> {
    Ok(model.zenith_loss_db(wavelength)? * air_mass(zenith_deg)?)
}

/// Line-of-sight distance from a ground station to a satellite at
/// `altitude` seen at `zenith_deg`.
pub fn slant_range(altitude: f64, zenith_deg: f64) -> Result<f64> {
    check_zenith(zenith_deg)?;
    let r = EARTH_RADIUS;
    let z = zenith_deg.to_radians();
    let rh = r + altitude;
    Ok((rh * rh - r * r * z.sin().powi(2)).sqrt() - r * z.cos())
}

/// Earth-central angle between a station and the sub-satellite point
/// when the satellite sits at `elevation_deg`.
pub fn central_angle(altitude: f64, elevation_deg: f64) -> f64 {
    let e = elevation_deg.to_radians();
    let r = EARTH_RADIUS;
    (r * e.cos() / (r + altitude)).acos() - e
}

/// Elevation of a satellite at `altitude` whose sub-satellite point is
/// `angle` radians of arc away.
pub fn elevation_at(altitude: f64, angle: f64) -> f64 {
    let r = EARTH_RADIUS;
    let rh = r + altitude;
    let s = (rh * rh + r * r - 2.0 * rh * r * angle.cos()).sqrt();
    ((rh * angle.cos() - r) / s).asin().to_degrees()
}

/// Largest great-circle separation of two stations that both see one
/// satellite at or above `min_elevation_deg`.
pub fn max_ground_distance(altitude: f64, min_elevation_deg: f64) -> f64 {
    2.0 * EARTH_RADIUS * central_angle(altitude, min_elevation_deg).max(0.0)
}

/// Mean loss from random pointing error on a Gaussian beam.
///
/// `jitter_rms` is the radial RMS angular error and `divergence` the
/// 1/e^2 half-angle. For a circular Gaussian error distribution the mean
/// on-axis intensity ratio is `1 / (1 + 2 sigma^2 / theta^2)`.
pub fn pointing_jitter_loss(jitter_rms: f64, divergence: f64) -> Result<f64> {
    if !(divergence.is_finite() && divergence > 0.0) {
        return Err(GeomError::InvalidDivergence(divergence));
    }
    if !(jitter_rms.is_finite() && jitter_rms >= 0.0) {
        return Err(GeomError::InvalidJitter(jitter_rms));
    }
    let r = jitter_rms / divergence;
    Ok(10.0 * (1.0 + 2.0 * r * r).log10())
}

/// Transmit side of a satellite-to-ground (or reverse) hop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroundLink {
    pub altitude: f64,
    pub zenith_deg: f64,
    pub tx_aperture: f64,
    pub rx_aperture: f64,
    pub wavelength: f64,
}

impl GroundLink {
    pub fn range(&self) -> Result<f64> {
        slant_range(self.altitude, self.zenith_deg)
    }
}

/// Grid sizes used by [`ground_link_diffraction`].
pub const LINK_TX_SAMPLES: usize = 512;
pub const LINK_RX_SAMPLES: usize = 256;

/// Diffraction loss in dB of `launch`, truncated by the transmit aperture,
/// after free travel along the slant path into the receive aperture.
pub fn ground_link_diffraction(link: &GroundLink, launch: &GaussianSpec) -> Result<f64> {
    let f = link_field_at_receiver(link, launch)?;
    let captured = wavefield::encircled_power(&f, (0.0, 0.0), link.rx_aperture / 2.0);
    if captured <= 0.0 {
        return Err(GeomError::Wave(WaveError::ZeroPower));
    }
    Ok(-10.0 * captured.log10())
}

/// Complex field over (slightly more than) the receive aperture. Launch
/// power is one.
pub fn link_field_at_receiver(link: &GroundLink, launch: &GaussianSpec) -> Result<ComplexField> {
    if !(link.tx_aperture > 0.0 && link.rx_aperture > 0.0) {
        return Err(GeomError::InvalidLink("apertures must be positive".into()));
    }
    let z = link.range()?;
    let tx_window = (2.5 * link.tx_aperture).max(4.2 * launch.waist);
    let tx = Grid::new(tx_window, LINK_TX_SAMPLES)?;
    let mut f = wavefield::gaussian_field(&tx, launch, link.wavelength)?;
    truncate_to_aperture(&mut f, (0.0, 0.0), link.tx_aperture);
    let rx = Grid::new(1.25 * link.rx_aperture, LINK_RX_SAMPLES)?;
    Ok(wavefield::fresnel_zoom(&f, z, &rx)?)
}

/// Zeroes everything outside a circular aperture of `diameter`; edge cells
/// are weighted by their approximate area fraction.
pub fn truncate_to_aperture(field: &mut ComplexField, centre: (f64, f64), diameter: f64) {
    let mask = aperture_mask(&field.grid, centre, diameter);
    for (a, m) in field.data.iter_mut().zip(mask) {
        *a *= m;
    }
}

pub fn aperture_mask(grid: &Grid, centre: (f64, f64), diameter: f64) -> Vec<f64> {
    let xs = grid.coords();
    let dx = grid.spacing();
    let a = diameter / 2.0;
    let mut m = Vec::with_capacity(grid.n() * grid.n());
    for &y in &xs {
        for &x in &xs {
            let r = ((x - centre.0).powi(2) + (y - centre.1).powi(2)).sqrt();
            // amplitude weight so the transmitted power follows area overlap
            let frac = (0.5 - (r - a) / dx).clamp(0.0, 1.0);
            m.push(frac.sqrt());
        }
    }
    m
}

/// Analytic far-field Gaussian capture for a beam of half-angle
/// `divergence` over range `z` into a circular aperture of `rx_diameter`.
pub fn far_field_capture(divergence: f64, z: f64, rx_diameter: f64) -> f64 {
    let w = divergence * z;
    let a = rx_diameter / 2.0;
    1.0 - (-2.0 * a * a / (w * w)).exp()
}

/// Transmit half-angle of a diffraction-limited beam filling `aperture`.
pub fn diffraction_divergence(wavelength: f64, waist: f64) -> f64 {
    wavelength / (PI * waist)
}
