//! Nested entanglement-swapping repeaters with satellite-borne sources, and
//! direct distribution from one geostationary satellite.

use serde::Serialize;

use super::{
    check_fraction, check_positive, direct_rate, Abscissa, RateCurve, RateError, RateUnit, Result,
    SECONDS_PER_DAY, SPEED_OF_LIGHT,
};
use crate::linkgeom::{self, AttenuationModel, EARTH_RADIUS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RepeaterParams {
    pub n_links: u32,
    pub nesting_level: u32,
    /// Loss of a photon pair (both photons) across one elementary link.
    pub per_link_loss_db: f64,
    pub memory_write_eff: f64,
    pub memory_read_eff: f64,
    pub source_eff: f64,
    pub detector_eff: f64,
    pub qnd_eff: f64,
    pub pair_source_rate: f64,
    /// Elementary link length, for the heralding round trip.
    pub link_length: f64,
    /// Modes attempted in parallel per heralding round trip.
    pub multiplexing_modes: f64,
    /// Bell-measurement success before memory read-out losses.
    pub swap_base: f64,
}

impl RepeaterParams {
    pub fn validate(&self) -> Result<()> {
        if self.nesting_level > 16 || self.n_links != 1u32 << self.nesting_level {
            return Err(RateError::Degenerate(format!(
                "{} links do not match nesting level {}",
                self.n_links, self.nesting_level
            )));
        }
        for (name, v) in [
            ("memory_write_eff", self.memory_write_eff),
            ("memory_read_eff", self.memory_read_eff),
            ("source_eff", self.source_eff),
            ("detector_eff", self.detector_eff),
            ("qnd_eff", self.qnd_eff),
            ("swap_base", self.swap_base),
        ] {
            check_fraction(name, v)?;
            check_positive(name, v)?;
        }
        check_positive("pair_source_rate", self.pair_source_rate)?;
        check_positive("multiplexing_modes", self.multiplexing_modes)?;
        if !(self.link_length >= 0.0) {
            return Err(RateError::InvalidParameter {
                name: "link_length",
                value: self.link_length,
            });
        }
        if !(self.per_link_loss_db >= 0.0) {
            return Err(RateError::InvalidParameter {
                name: "per_link_loss_db",
                value: self.per_link_loss_db,
            });
        }
        Ok(())
    }

    /// Heralded pair-storage probability per attempt on one link.
    pub fn p0(&self) -> f64 {
        let t = 10f64.powf(-self.per_link_loss_db / 10.0);
        let herald = self.qnd_eff * self.memory_write_eff;
        t * self.source_eff * herald * herald
    }

    pub fn p_swap(&self) -> f64 {
        self.swap_base * self.memory_read_eff * self.memory_read_eff
    }

    pub fn attempt_interval(&self) -> f64 {
        let signalling = 2.0 * self.link_length / (SPEED_OF_LIGHT * self.multiplexing_modes);
        (1.0 / self.pair_source_rate).max(signalling)
    }
}

/// End-to-end pair rate in Hz.
///
/// Each nesting level multiplies the expected waiting time by
/// `(3/2) / p_swap`; the final pair is read out of the end memories and
/// detected.
pub fn repeater_rate(params: &RepeaterParams) -> Result<f64> {
    params.validate()?;
    let p0 = params.p0();
    if !(p0 > 0.0) {
        return Err(RateError::Degenerate(
            "zero link success probability".into(),
        ));
    }
    let mut t = params.attempt_interval() / p0;
    for _ in 0..params.nesting_level {
        t *= 1.5 / params.p_swap();
    }
    let readout = (params.memory_read_eff * params.detector_eff).powi(2);
    Ok(readout / t)
}

/// Smallest per-link loss above which the repeater outpaces direct
/// transmission of the same source over all links.
pub fn repeater_direct_crossover(params: &RepeaterParams) -> Result<Option<f64>> {
    let mut prev: Option<bool> = None;
    let mut l = 0.0;
    while l <= 200.0 {
        let p = RepeaterParams {
            per_link_loss_db: l,
            ..*params
        };
        let rep = repeater_rate(&p)?;
        let dir = direct_rate(params.pair_source_rate, l * params.n_links as f64);
        let wins = rep > dir;
        if wins && prev == Some(false) {
            return Ok(Some(l));
        }
        prev = Some(wins);
        l += 0.1;
    }
    Ok(None)
}

/// Pair loss of an elementary ground link served by a satellite source at
/// `altitude` over its midpoint; `None` if the stations cannot see it.
pub fn ground_link_pair_loss(
    link_length: f64,
    altitude: f64,
    divergence: f64,
    rx_aperture: f64,
    wavelength: f64,
    atmosphere: &AttenuationModel,
) -> Option<f64> {
    let gamma = link_length / (2.0 * EARTH_RADIUS);
    let elev = linkgeom::elevation_at(altitude, gamma);
    if !(elev > 0.0) {
        return None;
    }
    let rh = EARTH_RADIUS + altitude;
    let s = (rh * rh + EARTH_RADIUS * EARTH_RADIUS - 2.0 * rh * EARTH_RADIUS * gamma.cos()).sqrt();
    let capture = linkgeom::far_field_capture(divergence, s, rx_aperture);
    let atm = linkgeom::atmospheric_db(atmosphere, wavelength, 90.0 - elev).ok()?;
    Some(2.0 * (-10.0 * capture.log10() + atm))
}

/// Pair loss of an inter-satellite elementary link with the source at its
/// midpoint.
pub fn space_link_pair_loss(link_length: f64, divergence: f64, rx_aperture: f64) -> f64 {
    let capture = linkgeom::far_field_capture(divergence, link_length / 2.0, rx_aperture);
    2.0 * -10.0 * capture.log10()
}

/// Direct entanglement distribution from a geostationary source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeoParams {
    pub altitude: f64,
    pub source_rate: f64,
    /// Half-angle beam divergence actually achieved by the transmitters.
    pub divergence: f64,
    pub tx_aperture: f64,
    pub rx_aperture: f64,
    pub wavelength: f64,
}

impl Default for GeoParams {
    fn default() -> Self {
        Self {
            altitude: 35_786e3,
            source_rate: 1e9,
            divergence: 4e-6,
            tx_aperture: 0.5,
            rx_aperture: 1.0,
            wavelength: 580e-9,
        }
    }
}

impl GeoParams {
    /// Divergence, never below the transmit aperture's diffraction limit.
    pub fn effective_divergence(&self) -> f64 {
        self.divergence.max(linkgeom::diffraction_divergence(
            self.wavelength,
            self.tx_aperture / 2.0,
        ))
    }
}

/// Pair rate in Hz for stations `ground_distance` apart, symmetric about
/// the sub-satellite point. Zero once the satellite drops below the horizon.
pub fn geo_direct_rate(
    params: &GeoParams,
    ground_distance: f64,
    atmosphere: &AttenuationModel,
) -> Result<f64> {
    check_positive("source_rate", params.source_rate)?;
    check_positive("rx_aperture", params.rx_aperture)?;
    let gamma = ground_distance / (2.0 * EARTH_RADIUS);
    let elev = linkgeom::elevation_at(params.altitude, gamma);
    if !(elev > 0.0) {
        return Ok(0.0);
    }
    let rh = EARTH_RADIUS + params.altitude;
    let s = (rh * rh + EARTH_RADIUS * EARTH_RADIUS - 2.0 * rh * EARTH_RADIUS * gamma.cos()).sqrt();
    let capture = linkgeom::far_field_capture(params.effective_divergence(), s, params.rx_aperture);
    let atm = linkgeom::atmospheric_db(atmosphere, params.wavelength, 90.0 - elev)
        .map_err(|e| RateError::Degenerate(e.to_string()))?;
    let one_way = -10.0 * capture.log10() + atm;
    Ok(direct_rate(params.source_rate, 2.0 * one_way))
}

/// Daily GEO pair rate over the given ground distances (metres, ascending);
/// the curve abscissa is in km.
pub fn geo_direct_curve(
    params: &GeoParams,
    distances: &[f64],
    atmosphere: &AttenuationModel,
) -> Result<RateCurve> {
    let rate = distances
        .iter()
        .map(|&d| geo_direct_rate(params, d, atmosphere).map(|r| r * SECONDS_PER_DAY))
        .collect::<Result<Vec<_>>>()?;
    RateCurve::new(
        "geo_direct",
        Abscissa::DistanceKm,
        RateUnit::PerDay,
        distances.iter().map(|d| d / 1e3).collect(),
        rate,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> RepeaterParams {
        RepeaterParams {
            n_links: 8,
            nesting_level: 3,
            per_link_loss_db: 0.0,
            memory_write_eff: 1.0,
            memory_read_eff: 1.0,
            source_eff: 1.0,
            detector_eff: 1.0,
            qnd_eff: 1.0,
            pair_source_rate: 1.0,
            link_length: 0.0,
            multiplexing_modes: 1.0,
            swap_base: 1.0,
        }
    }

    #[test]
    fn waiting_time_formula() {
        let r = repeater_rate(&unit()).unwrap();
        assert!((r - (2.0f64 / 3.0).powi(3)).abs() < 1e-15);
    }

    #[test]
    fn link_count_must_match() {
        let p = RepeaterParams {
            n_links: 6,
            ..unit()
        };
        assert!(repeater_rate(&p).is_err());
    }

    #[test]
    fn geo_peaks_at_zero_distance() {
        let a = AttenuationModel::default();
        let g = GeoParams::default();
        let r0 = geo_direct_rate(&g, 0.0, &a).unwrap();
        let r1 = geo_direct_rate(&g, 1000e3, &a).unwrap();
        assert!(r0 > r1);
        assert_eq!(geo_direct_rate(&g, 19_000e3, &a).unwrap(), 0.0);
    }
}
