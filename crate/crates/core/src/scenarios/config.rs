//! Scenario configuration, presets and the field registry shared by the
//! config reader, the sweep driver and the serializer.

use serde::Serialize;
use thiserror::Error;

use crate::chainoptics::{guide_eigenmode, ChainSpec, ErrorDistribution, ErrorSpec, SatelliteLens};
use crate::linkgeom::{AttenuationModel, GroundLink};
use crate::ratemodels::{GeoParams, ProtocolParams, RepeaterParams};
use crate::turbulence::AtmosphereProfile;
use crate::wavefield::GaussianSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
    #[error("unknown parameter '{0}'")]
    UnknownParameter(String),
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error("{field}: expected {expected}")]
    WrongType {
        field: String,
        expected: &'static str,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    AsqnEntanglement,
    AsqnQubitUplink,
    VbgGuide,
    GeoDirect,
    GroundRepeater,
    SpaceRepeater,
    SingleMemorySat,
    DoubleMemorySat,
    RelayPlusRepeater,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 9] = [
        Self::AsqnEntanglement,
        Self::AsqnQubitUplink,
        Self::VbgGuide,
        Self::GeoDirect,
        Self::GroundRepeater,
        Self::SpaceRepeater,
        Self::SingleMemorySat,
        Self::DoubleMemorySat,
        Self::RelayPlusRepeater,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::AsqnEntanglement => "asqn_entanglement",
            Self::AsqnQubitUplink => "asqn_qubit_uplink",
            Self::VbgGuide => "vbg_guide",
            Self::GeoDirect => "geo_direct",
            Self::GroundRepeater => "ground_repeater",
            Self::SpaceRepeater => "space_repeater",
            Self::SingleMemorySat => "single_memory_sat",
            Self::DoubleMemorySat => "double_memory_sat",
            Self::RelayPlusRepeater => "relay_plus_repeater",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, ConfigError> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))
    }

    pub fn description(&self) -> &'static str {
        match self {
            Self::AsqnEntanglement => {
                "relay chain entanglement distribution, 120 km spacing, two downlinks"
            }
            Self::AsqnQubitUplink => "turbulent ground uplink into an 80 km spacing relay chain",
            Self::VbgGuide => "lens guide with 4 km spacing and low-loss elements",
            Self::GeoDirect => "direct double downlink from one geostationary source",
            Self::GroundRepeater => "nested repeater with ground memories and satellite sources",
            Self::SpaceRepeater => "nested repeater with satellite memories and QND heralding",
            Self::SingleMemorySat => "one stored qubit carried between two stations",
            Self::DoubleMemorySat => "two memories loaded on successive passes, then swapped",
            Self::RelayPlusRepeater => "repeater whose elementary links are short relay chains",
        }
    }
}

/// Wave-optics chain between two ground links.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainConfig {
    pub separation: f64,
    pub focal_length: f64,
    pub aperture: f64,
    pub transmittance: f64,
    pub wavelength: f64,
    pub launch_waist: f64,
    /// Launch wavefront radius; infinity for a flat front.
    pub launch_wavefront_radius: f64,
    pub window: f64,
    pub grid_n: usize,
    /// 0 simulates every hop; otherwise this many hops are simulated and
    /// the rest extrapolated.
    pub reduced_hops: usize,
}

impl ChainConfig {
    pub fn lens(&self) -> SatelliteLens {
        SatelliteLens {
            focal_length: self.focal_length,
            aperture_diameter: self.aperture,
            transmittance: self.transmittance,
        }
    }

    pub fn spec(&self, distance: f64) -> ChainSpec {
        ChainSpec {
            separation: self.separation,
            hops: ChainSpec::hops_for(distance, self.separation),
            lens: self.lens(),
        }
    }

    pub fn launch(&self) -> GaussianSpec {
        GaussianSpec::curved(self.launch_waist, self.launch_wavefront_radius)
    }
}

/// Ground stations and the vertical links to the end satellites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkConfig {
    pub orbit_altitude: f64,
    pub zenith_deg: f64,
    pub tx_aperture: f64,
    pub rx_aperture: f64,
    /// Radial RMS pointing error of each downlink.
    pub pointing_jitter: f64,
    pub detector_efficiency: f64,
}

impl LinkConfig {
    pub fn ground_link(&self, wavelength: f64) -> GroundLink {
        GroundLink {
            altitude: self.orbit_altitude,
            zenith_deg: self.zenith_deg,
            tx_aperture: self.tx_aperture,
            rx_aperture: self.rx_aperture,
            wavelength,
        }
    }
}

/// Ground-to-orbit leg of the qubit uplink scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UplinkConfig {
    pub tx_waist: f64,
    pub target_loss_db: f64,
    pub calibration_tolerance_db: f64,
    /// Integrated Fried parameter; 0 requests calibration against the
    /// target loss.
    pub r0: f64,
    pub grid_n: usize,
    pub window: f64,
    pub profile: AtmosphereProfile,
}

/// Monte Carlo settings for the perturbed chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleConfig {
    pub trials: usize,
    pub grid_n: usize,
    pub reduced_hops: usize,
}

/// Geometry feeding the repeater model's elementary links.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RepeaterGeometry {
    /// Altitude of the satellite sources (ground-memory variant).
    pub orbit_altitude: f64,
    pub divergence: f64,
    pub rx_aperture: f64,
    pub wavelength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepDefaults {
    /// Ground distances for rate-versus-distance curves.
    pub distance_min: f64,
    pub distance_max: f64,
    pub points: usize,
    /// Loss range for rate-versus-loss curves.
    pub loss_max_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub total_distance: f64,
    pub chain: ChainConfig,
    pub link: LinkConfig,
    pub attenuation: AttenuationModel,
    pub errors: ErrorSpec,
    pub uplink: UplinkConfig,
    pub protocol: ProtocolParams,
    pub channel_loss_db: f64,
    pub repeater: RepeaterParams,
    pub repeater_geometry: RepeaterGeometry,
    pub geo: GeoParams,
    pub source_rate: f64,
    pub ensemble: EnsembleConfig,
    pub curves: SweepDefaults,
    pub seed: u64,
}

fn base() -> ScenarioConfig {
    let wavelength = 800e-9;
    let separation = 120e3;
    let mode = guide_eigenmode(separation, separation / 2.0, wavelength).expect("stable guide");
    ScenarioConfig {
        kind: ScenarioKind::AsqnEntanglement,
        total_distance: 20_000e3,
        chain: ChainConfig {
            separation,
            focal_length: separation / 2.0,
            aperture: 0.6,
            transmittance: 0.98,
            wavelength,
            launch_waist: mode.waist,
            launch_wavefront_radius: mode.wavefront_radius,
            window: 1.5,
            grid_n: 1024,
            reduced_hops: 0,
        },
        link: LinkConfig {
            orbit_altitude: 500e3,
            zenith_deg: 0.0,
            tx_aperture: 0.6,
            rx_aperture: 1.2,
            pointing_jitter: 0.5e-6,
            detector_efficiency: 0.8,
        },
        attenuation: AttenuationModel::default(),
        errors: ErrorSpec {
            separation_frac: 0.10,
            lateral: 0.006,
            focal_frac: 0.05,
            distribution: ErrorDistribution::Uniform,
        },
        uplink: UplinkConfig {
            tx_waist: 0.15,
            target_loss_db: 22.0,
            calibration_tolerance_db: 0.1,
            r0: 0.0,
            grid_n: 512,
            window: 1.5,
            profile: AtmosphereProfile::standard(0.1),
        },
        protocol: ProtocolParams::default(),
        channel_loss_db: 20.0,
        repeater: RepeaterParams {
            n_links: 8,
            nesting_level: 3,
            per_link_loss_db: 0.0,
            memory_write_eff: 0.9,
            memory_read_eff: 0.9,
            source_eff: 0.9,
            detector_eff: 0.9,
            qnd_eff: 0.32,
            pair_source_rate: 10e6,
            link_length: 0.0,
            multiplexing_modes: 1e4,
            swap_base: 0.5,
        },
        repeater_geometry: RepeaterGeometry {
            orbit_altitude: 1400e3,
            divergence: 4e-6,
            rx_aperture: 1.0,
            wavelength: 580e-9,
        },
        geo: GeoParams::default(),
        source_rate: 1e9,
        ensemble: EnsembleConfig {
            trials: 50,
            grid_n: 512,
            reduced_hops: 0,
        },
        curves: SweepDefaults {
            distance_min: 1000e3,
            distance_max: 20_000e3,
            points: 77,
            loss_max_db: 50.0,
        },
        seed: 1,
    }
}

/// Fully populated configuration for a named scenario.
pub fn preset(name: &str) -> Result<ScenarioConfig, ConfigError> {
    let kind = ScenarioKind::from_name(name)?;
    let mut c = base();
    c.kind = kind;
    match kind {
        ScenarioKind::AsqnEntanglement => {}
        ScenarioKind::AsqnQubitUplink => {
            let sep = 80e3;
            c.chain.separation = sep;
            c.chain.focal_length = sep / 2.0;
            let m = guide_eigenmode(sep, sep / 2.0, c.chain.wavelength).expect("stable guide");
            c.chain.launch_waist = m.waist;
            c.chain.launch_wavefront_radius = m.wavefront_radius;
            c.chain.grid_n = 512;
            c.errors = ErrorSpec::none();
            c.ensemble.trials = 30;
        }
        ScenarioKind::VbgGuide => {
            let sep = 4e3;
            let wavelength = 1550e-9;
            let focal = 4e3;
            c.chain.separation = sep;
            c.chain.focal_length = focal;
            c.chain.aperture = 0.3;
            c.chain.wavelength = wavelength;
            c.chain.transmittance = 10f64.powf(-1e-4 * (sep / 1e3) / 10.0);
            let m = guide_eigenmode(sep, focal, wavelength).expect("stable guide");
            c.chain.launch_waist = m.waist;
            c.chain.launch_wavefront_radius = m.wavefront_radius;
            c.chain.window = 0.75;
            c.chain.grid_n = 256;
            c.errors = ErrorSpec::none();
        }
        ScenarioKind::GeoDirect => {
            c.total_distance = 4000e3;
        }
        ScenarioKind::GroundRepeater => {}
        ScenarioKind::SpaceRepeater => {
            c.repeater.qnd_eff = 0.9;
            c.repeater.pair_source_rate = 20e6;
            // enough modes that the source, not signalling, sets the pace
            c.repeater.multiplexing_modes = 1e6;
        }
        ScenarioKind::SingleMemorySat | ScenarioKind::DoubleMemorySat => {}
        ScenarioKind::RelayPlusRepeater => {
            c.total_distance = 16_000e3;
            c.repeater.link_length = 2000e3;
            c.errors = ErrorSpec::none();
            c.repeater.qnd_eff = 0.9;
            c.repeater.pair_source_rate = 20e6;
            c.repeater.multiplexing_modes = 1e6;
        }
    }
    Ok(c)
}

pub fn preset_names() -> Vec<&'static str> {
    ScenarioKind::ALL.iter().map(|k| k.name()).collect()
}

/// Physical dimension of a configurable field; decides accepted units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    Length,
    /// Plane angle stored in radians.
    Angle,
    /// Plane angle stored in degrees.
    Degrees,
    Time,
    Frequency,
    Decibel,
    Fraction,
    Count,
    Number,
    Seed,
    Text,
    LengthList,
    NumberList,
    /// Wavelength to zenith loss pairs.
    Table,
}

/// Value carried by a registry field, in internal units.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldValue {
    Num(f64),
    Int(u64),
    Text(String),
    List(Vec<f64>),
    /// `(wavelength, zenith dB)` pairs.
    Table(Vec<(f64, f64)>),
}

pub struct FieldDef {
    pub path: &'static str,
    pub dim: Dim,
    pub get: fn(&ScenarioConfig) -> FieldValue,
    pub set: fn(&mut ScenarioConfig, FieldValue) -> Result<(), ConfigError>,
}

fn want_num(path: &str, v: FieldValue) -> Result<f64, ConfigError> {
    match v {
        FieldValue::Num(x) => Ok(x),
        FieldValue::Int(i) => Ok(i as f64),
        _ => Err(ConfigError::WrongType {
            field: path.into(),
            expected: "a number",
        }),
    }
}

fn want_int(path: &str, v: FieldValue) -> Result<u64, ConfigError> {
    match v {
        FieldValue::Int(i) => Ok(i),
        FieldValue::Num(x) if x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(63) => Ok(x as u64),
        _ => Err(ConfigError::WrongType {
            field: path.into(),
            expected: "a non-negative integer",
        }),
    }
}

macro_rules! num {
    ($path:literal, $dim:expr, $($f:ident).+) => {
        FieldDef {
            path: $path,
            dim: $dim,
            get: |c| FieldValue::Num(c.$($f).+),
            set: |c, v| {
                c.$($f).+ = want_num($path, v)?;
                Ok(())
            },
        }
    };
}

macro_rules! int {
    ($path:literal, $dim:expr, $t:ty, $($f:ident).+) => {
        FieldDef {
            path: $path,
            dim: $dim,
            get: |c| FieldValue::Int(c.$($f).+ as u64),
            set: |c, v| {
                let i = want_int($path, v)?;
                c.$($f).+ = <$t>::try_from(i).map_err(|_| ConfigError::Invalid {
                    field: $path.into(),
                    reason: "out of range".into(),
                })?;
                Ok(())
            },
        }
    };
}

use Dim::*;

/// Every configurable field with its dotted path and dimension.
pub static FIELDS: &[FieldDef] = &[
    FieldDef {
        path: "kind",
        dim: Text,
        get: |c| FieldValue::Text(c.kind.name().into()),
        set: |c, v| match v {
            FieldValue::Text(s) => {
                c.kind = ScenarioKind::from_name(&s).map_err(|_| ConfigError::Invalid {
                    field: "kind".into(),
                    reason: format!("unknown scenario kind '{s}'"),
                })?;
                Ok(())
            }
            _ => Err(ConfigError::WrongType {
                field: "kind".into(),
                expected: "a scenario name",
            }),
        },
    },
    num!("total_distance", Length, total_distance),
    int!("seed", Seed, u64, seed),
    num!("source_rate", Frequency, source_rate),
    num!("channel_loss", Decibel, channel_loss_db),
    num!("chain.separation", Length, chain.separation),
    num!("chain.focal_length", Length, chain.focal_length),
    num!("chain.aperture", Length, chain.aperture),
    num!("chain.transmittance", Fraction, chain.transmittance),
    num!("chain.wavelength", Length, chain.wavelength),
    num!("chain.launch_waist", Length, chain.launch_waist),
    num!(
        "chain.launch_wavefront_radius",
        Length,
        chain.launch_wavefront_radius
    ),
    num!("chain.window", Length, chain.window),
    int!("chain.grid_n", Count, usize, chain.grid_n),
    int!("chain.reduced_hops", Count, usize, chain.reduced_hops),
    num!("link.orbit_altitude", Length, link.orbit_altitude),
    num!("link.zenith", Degrees, link.zenith_deg),
    num!("link.tx_aperture", Length, link.tx_aperture),
    num!("link.rx_aperture", Length, link.rx_aperture),
    num!("link.pointing_jitter", Angle, link.pointing_jitter),
    num!(
        "link.detector_efficiency",
        Fraction,
        link.detector_efficiency
    ),
    FieldDef {
        path: "attenuation.zenith_loss",
        dim: Table,
        get: |c| FieldValue::Table(c.attenuation.zenith_db.clone()),
        set: |c, v| match v {
            FieldValue::Table(t) => {
                c.attenuation.zenith_db = t;
                Ok(())
            }
            _ => Err(ConfigError::WrongType {
                field: "attenuation.zenith_loss".into(),
                expected: "a table of wavelength = loss entries",
            }),
        },
    },
    num!("errors.separation", Fraction, errors.separation_frac),
    num!("errors.lateral", Length, errors.lateral),
    num!("errors.focal", Fraction, errors.focal_frac),
    FieldDef {
        path: "errors.distribution",
        dim: Text,
        get: |c| {
            FieldValue::Text(
                match c.errors.distribution {
                    ErrorDistribution::Uniform => "uniform",
                    ErrorDistribution::Gaussian => "gaussian",
                }
                .into(),
            )
        },
        set: |c, v| {
            c.errors.distribution = match v {
                FieldValue::Text(s) if s == "uniform" => ErrorDistribution::Uniform,
                FieldValue::Text(s) if s == "gaussian" => ErrorDistribution::Gaussian,
                _ => {
                    return Err(ConfigError::WrongType {
                        field: "errors.distribution".into(),
                        expected: "\"uniform\" or \"gaussian\"",
                    })
                }
            };
            Ok(())
        },
    },
    num!("uplink.tx_waist", Length, uplink.tx_waist),
    num!("uplink.target_loss", Decibel, uplink.target_loss_db),
    num!(
        "uplink.calibration_tolerance",
        Decibel,
        uplink.calibration_tolerance_db
    ),
    num!("uplink.r0", Length, uplink.r0),
    int!("uplink.grid_n", Count, usize, uplink.grid_n),
    num!("uplink.window", Length, uplink.window),
    FieldDef {
        path: "uplink.layer_altitudes",
        dim: LengthList,
        get: |c| FieldValue::List(c.uplink.profile.altitudes.clone()),
        set: |c, v| match v {
            FieldValue::List(l) => {
                c.uplink.profile.altitudes = l;
                Ok(())
            }
            _ => Err(ConfigError::WrongType {
                field: "uplink.layer_altitudes".into(),
                expected: "a list of lengths",
            }),
        },
    },
    FieldDef {
        path: "uplink.layer_weights",
        dim: NumberList,
        get: |c| FieldValue::List(c.uplink.profile.weights.clone()),
        set: |c, v| match v {
            FieldValue::List(l) => {
                c.uplink.profile.weights = l;
                Ok(())
            }
            _ => Err(ConfigError::WrongType {
                field: "uplink.layer_weights".into(),
                expected: "a list of numbers",
            }),
        },
    },
    num!("protocol.source_rate", Frequency, protocol.source_rate),
    num!(
        "protocol.transmission_period",
        Time,
        protocol.transmission_period
    ),
    num!(
        "protocol.memory_efficiency",
        Fraction,
        protocol.memory_efficiency
    ),
    num!(
        "protocol.detector_efficiency",
        Fraction,
        protocol.detector_efficiency
    ),
    num!(
        "protocol.memory_noise_prob",
        Fraction,
        protocol.memory_noise_prob
    ),
    num!(
        "protocol.background_prob",
        Fraction,
        protocol.background_prob
    ),
    num!(
        "protocol.dark_count_prob",
        Fraction,
        protocol.dark_count_prob
    ),
    num!(
        "protocol.coincidence_window",
        Time,
        protocol.coincidence_window
    ),
    num!(
        "protocol.memory_dephasing_rate",
        Frequency,
        protocol.memory_dephasing_rate
    ),
    num!("protocol.storage_time", Time, protocol.storage_time),
    num!(
        "protocol.swap_efficiency",
        Fraction,
        protocol.swap_efficiency
    ),
    num!(
        "protocol.error_correction_inefficiency",
        Number,
        protocol.error_correction_inefficiency
    ),
    num!(
        "protocol.security_epsilon",
        Fraction,
        protocol.security_epsilon
    ),
    num!(
        "protocol.multiplexing_modes",
        Number,
        protocol.multiplexing_modes
    ),
    int!("repeater.n_links", Count, u32, repeater.n_links),
    int!("repeater.nesting_level", Count, u32, repeater.nesting_level),
    num!(
        "repeater.memory_write_eff",
        Fraction,
        repeater.memory_write_eff
    ),
    num!(
        "repeater.memory_read_eff",
        Fraction,
        repeater.memory_read_eff
    ),
    num!("repeater.source_eff", Fraction, repeater.source_eff),
    num!("repeater.detector_eff", Fraction, repeater.detector_eff),
    num!("repeater.qnd_eff", Fraction, repeater.qnd_eff),
    num!(
        "repeater.pair_source_rate",
        Frequency,
        repeater.pair_source_rate
    ),
    num!(
        "repeater.multiplexing_modes",
        Number,
        repeater.multiplexing_modes
    ),
    num!("repeater.swap_base", Fraction, repeater.swap_base),
    num!("repeater.link_length", Length, repeater.link_length),
    num!(
        "repeater.orbit_altitude",
        Length,
        repeater_geometry.orbit_altitude
    ),
    num!("repeater.divergence", Angle, repeater_geometry.divergence),
    num!(
        "repeater.rx_aperture",
        Length,
        repeater_geometry.rx_aperture
    ),
    num!("repeater.wavelength", Length, repeater_geometry.wavelength),
    num!("geo.altitude", Length, geo.altitude),
    num!("geo.source_rate", Frequency, geo.source_rate),
    num!("geo.divergence", Angle, geo.divergence),
    num!("geo.tx_aperture", Length, geo.tx_aperture),
    num!("geo.rx_aperture", Length, geo.rx_aperture),
    num!("geo.wavelength", Length, geo.wavelength),
    int!("ensemble.trials", Count, usize, ensemble.trials),
    int!("ensemble.grid_n", Count, usize, ensemble.grid_n),
    int!("ensemble.reduced_hops", Count, usize, ensemble.reduced_hops),
    num!("curves.distance_min", Length, curves.distance_min),
    num!("curves.distance_max", Length, curves.distance_max),
    int!("curves.points", Count, usize, curves.points),
    num!("curves.loss_max", Decibel, curves.loss_max_db),
];

pub fn field(path: &str) -> Result<&'static FieldDef, ConfigError> {
    FIELDS
        .iter()
        .find(|f| f.path == path)
        .ok_or_else(|| ConfigError::UnknownParameter(path.to_string()))
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && !v.is_nan() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive, got {v}")))
    }
}

fn fraction(field: &str, v: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(invalid(field, format!("must lie in [0, 1], got {v}")))
    }
}

fn grid_size(field: &str, n: usize) -> Result<(), ConfigError> {
    if n >= 256 && n.is_power_of_two() {
        Ok(())
    } else {
        Err(invalid(
            field,
            format!("must be a power of two of at least 256, got {n}"),
        ))
    }
}

impl ScenarioConfig {
    pub fn get(&self, path: &str) -> Result<FieldValue, ConfigError> {
        Ok((field(path)?.get)(self))
    }

    pub fn set(&mut self, path: &str, value: FieldValue) -> Result<(), ConfigError> {
        (field(path)?.set)(self, value)
    }

    /// Checks every invariant, naming the offending field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("total_distance", self.total_distance)?;
        positive("source_rate", self.source_rate)?;
        if !(self.channel_loss_db >= 0.0) {
            return Err(invalid("channel_loss", "must be non-negative"));
        }
        let ch = &self.chain;
        positive("chain.separation", ch.separation)?;
        positive("chain.focal_length", ch.focal_length)?;
        positive("chain.aperture", ch.aperture)?;
        fraction("chain.transmittance", ch.transmittance)?;
        positive("chain.wavelength", ch.wavelength)?;
        positive("chain.launch_waist", ch.launch_waist)?;
        if ch.launch_wavefront_radius == 0.0 || ch.launch_wavefront_radius.is_nan() {
            return Err(invalid(
                "chain.launch_wavefront_radius",
                "must be non-zero (inf for flat)",
            ));
        }
        positive("chain.window", ch.window)?;
        if ch.aperture > ch.window {
            return Err(invalid(
                "chain.aperture",
                "larger than the simulation window",
            ));
        }
        grid_size("chain.grid_n", ch.grid_n)?;
        let l = &self.link;
        positive("link.orbit_altitude", l.orbit_altitude)?;
        if !(0.0..90.0).contains(&l.zenith_deg) {
            return Err(invalid("link.zenith", "must lie in [0, 90) deg"));
        }
        positive("link.tx_aperture", l.tx_aperture)?;
        positive("link.rx_aperture", l.rx_aperture)?;
        if !(l.pointing_jitter >= 0.0) {
            return Err(invalid("link.pointing_jitter", "must be non-negative"));
        }
        fraction("link.detector_efficiency", l.detector_efficiency)?;
        positive("link.detector_efficiency", l.detector_efficiency)?;
        for &(wl, db) in &self.attenuation.zenith_db {
            positive("attenuation.zenith_loss", wl)?;
            if !(db >= 0.0) {
                return Err(invalid(
                    "attenuation.zenith_loss",
                    "losses must be non-negative",
                ));
            }
        }
        self.errors
            .validate()
            .map_err(|e| invalid("errors", e.to_string()))?;
        let u = &self.uplink;
        positive("uplink.tx_waist", u.tx_waist)?;
        positive("uplink.calibration_tolerance", u.calibration_tolerance_db)?;
        if !(u.r0 >= 0.0) {
            return Err(invalid("uplink.r0", "must be non-negative (0 = calibrate)"));
        }
        grid_size("uplink.grid_n", u.grid_n)?;
        positive("uplink.window", u.window)?;
        u.profile
            .with_r0(1.0)
            .validate()
            .map_err(|e| invalid("uplink.layer_altitudes", e.to_string()))?;
        self.protocol
            .validate()
            .map_err(|e| invalid("protocol", e.to_string()))?;
        if !(self.repeater.link_length >= 0.0) {
            return Err(invalid("repeater.link_length", "must be non-negative"));
        }
        if self.kind == ScenarioKind::RelayPlusRepeater {
            positive("repeater.link_length", self.repeater.link_length)?;
        }
        let r = RepeaterParams {
            per_link_loss_db: 0.0,
            link_length: 0.0,
            ..self.repeater
        };
        r.validate()
            .map_err(|e| invalid("repeater", e.to_string()))?;
        positive(
            "repeater.orbit_altitude",
            self.repeater_geometry.orbit_altitude,
        )?;
        positive("repeater.divergence", self.repeater_geometry.divergence)?;
        positive("repeater.rx_aperture", self.repeater_geometry.rx_aperture)?;
        positive("repeater.wavelength", self.repeater_geometry.wavelength)?;
        positive("geo.altitude", self.geo.altitude)?;
        positive("geo.source_rate", self.geo.source_rate)?;
        positive("geo.divergence", self.geo.divergence)?;
        positive("geo.tx_aperture", self.geo.tx_aperture)?;
        positive("geo.rx_aperture", self.geo.rx_aperture)?;
        positive("geo.wavelength", self.geo.wavelength)?;
        if self.ensemble.trials == 0 {
            return Err(invalid("ensemble.trials", "must be at least 1"));
        }
        grid_size("ensemble.grid_n", self.ensemble.grid_n)?;
        let cv = &self.curves;
        if !(cv.distance_min >= 0.0 && cv.distance_max > cv.distance_min) {
            return Err(invalid(
                "curves.distance_max",
                "must exceed curves.distance_min",
            ));
        }
        if cv.points < 2 {
            return Err(invalid("curves.points", "need at least two points"));
        }
        positive("curves.loss_max", cv.loss_max_db)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates() {
        for name in preset_names() {
            preset(name).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn registry_paths_unique() {
        let mut p: Vec<_> = FIELDS.iter().map(|f| f.path).collect();
        p.sort();
        let n = p.len();
        p.dedup();
        assert_eq!(n, p.len());
    }

    #[test]
    fn set_then_get() {
        let mut c = preset("asqn_entanglement").unwrap();
        c.set("chain.separation", FieldValue::Num(100e3)).unwrap();
        assert_eq!(c.get("chain.separation").unwrap(), FieldValue::Num(100e3));
        assert!(c.set("nope", FieldValue::Num(1.0)).is_err());
        assert!(c.set("chain.grid_n", FieldValue::Num(1.5)).is_err());
    }

    #[test]
    fn negative_aperture_names_field() {
        let mut c = preset("asqn_entanglement").unwrap();
        c.chain.aperture = -1.0;
        match c.validate() {
            Err(ConfigError::Invalid { field, .. }) => assert_eq!(field, "chain.aperture"),
            other => panic!("{other:?}"),
        }
    }
}
