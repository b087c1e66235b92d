//! End-to-end scenarios: loss budgets, rate reports, Monte Carlo ensembles
//! and parameter sweeps built on the physics modules.

mod config;
mod report;

pub use config::*;
pub use report::*;

use rayon::prelude::*;
use thiserror::Error;

use crate::chainoptics::{
    apply_lens, build_chain, perturb_chain, propagate_chain_with, ChainError, ChainSpec,
    ChainTrace, HopMode, SatelliteLens,
};
use crate::linkgeom::{self, GeomError, EARTH_RADIUS};
use crate::ratemodels::{
    self, geo_direct_curve, geo_direct_rate, ground_link_pair_loss, linspace, max_tolerable_loss,
    memory_key_rate, repeater_rate, space_link_pair_loss, Abscissa, MemoryProtocol, RateCurve,
    RateError, RateUnit, SECONDS_PER_DAY,
};
use crate::turbulence::{self, TurbulenceError, UplinkGeometry};
use crate::wavefield::{self, ComplexField, GaussianSpec, Grid, WaveError};

/// Seed for stream `index` derived from a master seed (SplitMix64 finaliser
/// over `seed + (index + 1) * golden`).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StageError {
    #[error(transparent)]
    Wave(#[from] WaveError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Turbulence(#[from] TurbulenceError),
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: StageError,
    },
}

impl ScenarioError {
    /// Failures of a numerical guard (sampling, band limit, calibration
    /// bracket) rather than of the configuration itself.
    pub fn is_numerical_guard(&self) -> bool {
        fn wave(e: &WaveError) -> bool {
            matches!(
                e,
                WaveError::Aliasing { .. }
                    | WaveError::GridTooCoarse { .. }
                    | WaveError::WindowTooSmall { .. }
                    | WaveError::ZeroPower
            )
        }
        match self {
            ScenarioError::Config(_) => false,
            ScenarioError::Stage { source, .. } => match source {
                StageError::Wave(e) => wave(e),
                StageError::Chain(ChainError::Wave(e)) => wave(e),
                StageError::Chain(ChainError::Bookkeeping { .. }) => true,
                StageError::Geometry(GeomError::Wave(e)) => wave(e),
                StageError::Turbulence(TurbulenceError::Wave(e)) => wave(e),
                StageError::Turbulence(TurbulenceError::BracketExhausted { .. }) => true,
                _ => false,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, ScenarioError>;

fn at<E: Into<StageError>>(stage: &'static str) -> impl FnOnce(E) -> ScenarioError {
    move |e| ScenarioError::Stage {
        stage,
        source: e.into(),
    }
}

fn db(t: f64) -> f64 {
    -10.0 * t.log10()
}

// ---------------------------------------------------------------- chains

fn hop_mode(reduced: usize) -> HopMode {
    if reduced == 0 {
        HopMode::Full
    } else {
        HopMode::Reduced(reduced)
    }
}

fn launch_field(cfg: &ScenarioConfig, grid_n: usize) -> Result<ComplexField> {
    let grid = Grid::new(cfg.chain.window, grid_n).map_err(at("chain grid"))?;
    wavefield::gaussian_field(&grid, &cfg.chain.launch(), cfg.chain.wavelength)
        .map_err(at("chain launch"))
}

/// Lossless copy of the configured lens; reflection is booked analytically.
fn lossless(lens: SatelliteLens) -> SatelliteLens {
    SatelliteLens {
        transmittance: 1.0,
        ..lens
    }
}

fn chain_spec(cfg: &ScenarioConfig, distance: f64) -> ChainSpec {
    let mut spec = cfg.chain.spec(distance);
    spec.lens = lossless(spec.lens);
    spec
}

/// Diffraction-only trace of the unperturbed chain spanning `distance`.
pub fn nominal_chain(
    cfg: &ScenarioConfig,
    distance: f64,
    grid_n: usize,
    reduced: usize,
) -> Result<ChainTrace> {
    let chain = build_chain(&chain_spec(cfg, distance)).map_err(at("chain build"))?;
    let field = launch_field(cfg, grid_n)?;
    propagate_chain_with(&field, &chain, hop_mode(reduced)).map_err(at("chain propagation"))
}

/// Excess diffraction of perturbed chains over the nominal chain, one
/// sample per trial, all on the ensemble grid. Trial `i` draws its errors
/// from `derive_seed(seed, i)`.
pub fn error_excess_samples(cfg: &ScenarioConfig, trials: usize, seed: u64) -> Result<Vec<f64>> {
    let ens = cfg.ensemble;
    let chain = build_chain(&chain_spec(cfg, cfg.total_distance)).map_err(at("chain build"))?;
    let field = launch_field(cfg, ens.grid_n)?;
    let mode = hop_mode(ens.reduced_hops);
    let nominal = propagate_chain_with(&field, &chain, mode)
        .map_err(at("chain propagation"))?
        .loss_db();
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let perturbed = perturb_chain(&chain, &cfg.errors, derive_seed(seed, i as u64))
                .map_err(at("chain errors"))?;
            let trace =
                propagate_chain_with(&field, &perturbed, mode).map_err(at("perturbed chain"))?;
            Ok(trace.loss_db() - nominal)
        })
        .collect()
}

fn trace_points(trace: &ChainTrace) -> Vec<TracePoint> {
    trace
        .hops
        .iter()
        .map(|h| TracePoint {
            hop: h.hop + 1,
            cum_db: h.cumulative_db,
        })
        .collect()
}

fn reflection_db(lens: &SatelliteLens, hops: usize) -> f64 {
    hops as f64 * db(lens.transmittance)
}

fn errors_active(cfg: &ScenarioConfig) -> bool {
    let e = &cfg.errors;
    e.separation_frac > 0.0 || e.lateral > 0.0 || e.focal_frac > 0.0
}

/// Ground-to-satellite links at both ends of a relay chain.
struct EndLinks {
    diffraction: f64,
    atmospheric: f64,
    pointing: f64,
    detector: f64,
}

fn end_links(cfg: &ScenarioConfig, launch: &GaussianSpec, passes: f64) -> Result<EndLinks> {
    let wl = cfg.chain.wavelength;
    let link = cfg.link.ground_link(wl);
    let one = linkgeom::ground_link_diffraction(&link, launch).map_err(at("ground link"))?;
    let atm = linkgeom::atmospheric_db(&cfg.attenuation, wl, cfg.link.zenith_deg)
        .map_err(at("atmosphere"))?;
    let point = linkgeom::pointing_jitter_loss(cfg.link.pointing_jitter, launch.divergence(wl))
        .map_err(at("pointing"))?;
    Ok(EndLinks {
        diffraction: passes * one,
        atmospheric: passes * atm,
        pointing: passes * point,
        detector: passes * db(cfg.link.detector_efficiency),
    })
}

// ------------------------------------------------------------ pipelines

/// Runs the pipeline for `config.kind` with the configured ensemble size
/// and seed.
pub fn run_scenario(config: &ScenarioConfig) -> Result<Report> {
    monte_carlo(config, config.ensemble.trials, config.seed)
}

/// Same as [`run_scenario`] with the ensemble size and master seed given
/// explicitly. Only the relay scenarios with mounting errors and the
/// turbulent uplink are random; the rest ignore `trials` and `seed`.
pub fn monte_carlo(config: &ScenarioConfig, trials: usize, seed: u64) -> Result<Report> {
    if trials == 0 {
        return Err(ConfigError::Invalid {
            field: "ensemble.trials".into(),
            reason: "must be at least 1".into(),
        }
        .into());
    }
    let mut cfg = config.clone();
    cfg.ensemble.trials = trials;
    cfg.seed = seed;
    cfg.validate()?;
    let mut report = match cfg.kind {
        ScenarioKind::AsqnEntanglement => asqn_entanglement(&cfg)?,
        ScenarioKind::AsqnQubitUplink => asqn_qubit_uplink(&cfg)?,
        ScenarioKind::VbgGuide => vbg_guide(&cfg)?,
        ScenarioKind::GeoDirect => geo_direct(&cfg)?,
        ScenarioKind::GroundRepeater => ground_repeater(&cfg)?,
        ScenarioKind::SpaceRepeater => space_repeater(&cfg)?,
        ScenarioKind::SingleMemorySat => memory_sat(&cfg, MemoryProtocol::SingleMemory)?,
        ScenarioKind::DoubleMemorySat => memory_sat(&cfg, MemoryProtocol::DoubleMemory)?,
        ScenarioKind::RelayPlusRepeater => relay_plus_repeater(&cfg)?,
    };
    report.provenance = Provenance::of(&cfg);
    for b in &report.budgets {
        b.budget.validate().map_err(at("budget"))?;
    }
    Ok(report)
}

fn asqn_entanglement(cfg: &ScenarioConfig) -> Result<Report> {
    let hops = ChainSpec::hops_for(cfg.total_distance, cfg.chain.separation);
    let trace = nominal_chain(
        cfg,
        cfg.total_distance,
        cfg.chain.grid_n,
        cfg.chain.reduced_hops,
    )?;
    let ends = end_links(cfg, &cfg.chain.launch(), 2.0)?;
    let mut report = Report::new(cfg.kind);
    let mut budget = LossBudget {
        chain_diffraction: trace.loss_db().max(0.0),
        ground_diffraction: ends.diffraction,
        reflection: reflection_db(&cfg.chain.lens(), hops),
        atmospheric: ends.atmospheric,
        pointing: ends.pointing,
        other: ends.detector,
        ..LossBudget::default()
    };
    if errors_active(cfg) {
        let samples = error_excess_samples(cfg, cfg.ensemble.trials, cfg.seed)?;
        let stats = EnsembleStats::from_samples("error_excess_db", &samples);
        budget.error_excess = stats.mean.max(0.0);
        if stats.mean < 0.0 {
            report.notes.push(format!(
                "mean error excess {:.4} dB is negative; booked as zero",
                stats.mean
            ));
        }
        let base = budget.total() - budget.error_excess;
        let totals: Vec<f64> = samples.iter().map(|s| base + s.max(0.0)).collect();
        report
            .ensemble
            .push(EnsembleStats::from_samples("total_db", &totals));
        report.ensemble.push(stats);
    }
    let total = budget.total();
    report.push_result(
        "direct_rate",
        ratemodels::direct_rate(cfg.source_rate, total),
        "Hz",
    );
    report.push_result("total_loss", total, "dB");
    report.push_result("diffraction_total", budget.diffraction_total(), "dB");
    report.push_result("other_aggregate", budget.other_aggregate(), "dB");
    report.push_result("hops", hops as f64, "count");
    note_extrapolation(&mut report, &trace);
    report.trace = trace_points(&trace);
    report.budgets.push(NamedBudget::new("end_to_end", budget));
    Ok(report)
}

fn note_extrapolation(report: &mut Report, trace: &ChainTrace) {
    if let Some(x) = trace.extrapolated_db {
        report.notes.push(format!(
            "chain loss extrapolated from {} of {} hops ({:.4} dB simulated, {:.4} dB total, steady state {})",
            trace.hops.len(),
            trace.total_hops,
            trace.simulated_db(),
            x,
            trace.steady_state
        ));
    }
}

/// Per-trial outcome of the turbulent uplink feeding the relay chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UplinkTrial {
    /// Fraction of the launched power inside the first satellite's aperture.
    pub captured: f64,
    /// Power fraction of the best-matched fundamental Gaussian after the
    /// first satellite's aperture.
    pub matched_fraction: f64,
    /// Chain loss from the first to the last satellite.
    pub chain_db: f64,
}

pub fn uplink_geometry(cfg: &ScenarioConfig) -> UplinkGeometry {
    UplinkGeometry {
        tx_waist: cfg.uplink.tx_waist,
        wavelength: cfg.chain.wavelength,
        orbit_altitude: cfg.link.orbit_altitude,
        rx_aperture: cfg.chain.aperture,
        grid_n: cfg.uplink.grid_n,
        window: cfg.uplink.window,
        seeds: cfg.ensemble.trials,
        seed: cfg.seed,
        profile: cfg.uplink.profile.clone(),
    }
}

/// Integrated r0 used by the uplink: the configured value, or the result
/// of calibrating against the target loss when it is zero.
pub fn uplink_r0(cfg: &ScenarioConfig) -> Result<f64> {
    if cfg.uplink.r0 > 0.0 {
        return Ok(cfg.uplink.r0);
    }
    let geom = uplink_geometry(cfg);
    let profile = turbulence::calibrate_profile(
        cfg.uplink.target_loss_db,
        cfg.uplink.calibration_tolerance_db,
        &geom,
    )
    .map_err(at("r0 calibration"))?;
    Ok(profile.r0)
}

/// First-satellite lens that refocuses the arriving beam onto the guide.
fn uplink_entry_lens(cfg: &ScenarioConfig) -> SatelliteLens {
    let wl = cfg.chain.wavelength;
    let arriving = GaussianSpec::collimated(cfg.uplink.tx_waist).after(cfg.link.orbit_altitude, wl);
    let f = 1.0 / (1.0 / arriving.wavefront_radius + 1.0 / cfg.chain.separation);
    SatelliteLens {
        focal_length: f,
        aperture_diameter: cfg.chain.aperture,
        transmittance: 1.0,
    }
}

/// Runs `trials` turbulent uplinks at integrated `r0` and pushes each
/// through the relay chain. Also returns the mean cumulative chain trace.
pub fn uplink_trials(cfg: &ScenarioConfig, r0: f64) -> Result<(Vec<UplinkTrial>, Vec<TracePoint>)> {
    let geom = uplink_geometry(cfg);
    let launch = geom.launch().map_err(at("uplink launch"))?;
    let p0 = launch.power();
    let profile = cfg.uplink.profile.with_r0(r0);
    let chain = build_chain(&chain_spec(cfg, cfg.total_distance)).map_err(at("chain build"))?;
    let lens1 = uplink_entry_lens(cfg);
    let mode = hop_mode(cfg.chain.reduced_hops);
    let runs: Vec<(UplinkTrial, Vec<f64>)> = (0..cfg.ensemble.trials)
        .into_par_iter()
        .map(|t| {
            let mut f = turbulence::uplink_channel(
                &launch,
                &profile,
                geom.orbit_altitude,
                geom.seed_for(t),
            )
            .map_err(at("uplink"))?;
            let captured =
                wavefield::encircled_power(&f, (0.0, 0.0), cfg.chain.aperture / 2.0) / p0;
            apply_lens(&mut f, &lens1, (0.0, 0.0)).map_err(at("first satellite"))?;
            let matched =
                wavefield::matched_gaussian(&f, (0.0, 0.0)).map_err(at("mode matching"))?;
            let trace = propagate_chain_with(&f, &chain, mode).map_err(at("uplink chain"))?;
            let cum = trace.hops.iter().map(|h| h.cumulative_db).collect();
            Ok((
                UplinkTrial {
                    captured,
                    matched_fraction: matched.fraction,
                    chain_db: trace.loss_db(),
                },
                cum,
            ))
        })
        .collect::<Result<_>>()?;
    let n = runs.len() as f64;
    let hops = runs.first().map_or(0, |r| r.1.len());
    let trace = (0..hops)
        .map(|k| TracePoint {
            hop: k + 1,
            cum_db: runs.iter().map(|r| r.1[k]).sum::<f64>() / n,
        })
        .collect();
    Ok((runs.into_iter().map(|r| r.0).collect(), trace))
}

/// Nominal eigenmode chain on the uplink grid; the reference for excess
/// chain loss.
pub fn uplink_reference_chain(cfg: &ScenarioConfig) -> Result<ChainTrace> {
    let mut c = cfg.clone();
    c.chain.window = cfg.uplink.window;
    nominal_chain(
        &c,
        cfg.total_distance,
        cfg.uplink.grid_n,
        cfg.chain.reduced_hops,
    )
}

fn asqn_qubit_uplink(cfg: &ScenarioConfig) -> Result<Report> {
    let r0 = uplink_r0(cfg)?;
    let reference = uplink_reference_chain(cfg)?;
    let (trials, mean_trace) = uplink_trials(cfg, r0)?;
    let geom = uplink_geometry(cfg);
    let launch = geom.launch().map_err(at("uplink launch"))?;
    let vac = turbulence::vacuum_uplink(
        &launch,
        &cfg.uplink.profile.with_r0(r0),
        geom.orbit_altitude,
    )
    .map_err(at("vacuum uplink"))?;
    let vacuum_db =
        db(wavefield::encircled_power(&vac, (0.0, 0.0), cfg.chain.aperture / 2.0) / launch.power());

    let captured: Vec<f64> = trials.iter().map(|t| t.captured).collect();
    let uplink_db: Vec<f64> = captured.iter().map(|&c| db(c)).collect();
    let matched: Vec<f64> = trials.iter().map(|t| t.matched_fraction).collect();
    let excess: Vec<f64> = trials
        .iter()
        .map(|t| t.chain_db - reference.loss_db())
        .collect();
    let mean_captured = captured.iter().sum::<f64>() / captured.len() as f64;
    let mean_uplink_db = db(mean_captured);
    let excess_stats = EnsembleStats::from_samples("chain_excess_db", &excess);

    let hops = ChainSpec::hops_for(cfg.total_distance, cfg.chain.separation);
    let ends = end_links(cfg, &cfg.chain.launch(), 1.0)?;
    let budget = LossBudget {
        chain_diffraction: reference.loss_db().max(0.0),
        ground_diffraction: vacuum_db + ends.diffraction,
        reflection: reflection_db(&cfg.chain.lens(), hops),
        atmospheric: 2.0 * ends.atmospheric,
        turbulence_excess: (mean_uplink_db - vacuum_db).max(0.0) + excess_stats.mean.max(0.0),
        pointing: ends.pointing,
        other: ends.detector,
        ..LossBudget::default()
    };
    let mut report = Report::new(cfg.kind);
    report.push_result("chain_excess", excess_stats.mean, "dB");
    report.push_result("matched_fraction", mean(&matched), "fraction");
    report.push_result("uplink_loss", mean_uplink_db, "dB");
    report.push_result("vacuum_uplink_loss", vacuum_db, "dB");
    report.push_result("r0", r0, "m");
    report.push_result("total_loss", budget.total(), "dB");
    report.push_result(
        "direct_rate",
        ratemodels::direct_rate(cfg.source_rate, budget.total()),
        "Hz",
    );
    if cfg.uplink.r0 > 0.0 {
        report.notes.push("r0 taken from the configuration".into());
    } else {
        report.notes.push(format!(
            "r0 calibrated to a {} dB mean uplink loss over {} seeds",
            cfg.uplink.target_loss_db, cfg.ensemble.trials
        ));
    }
    report.ensemble.push(excess_stats);
    report
        .ensemble
        .push(EnsembleStats::from_samples("matched_fraction", &matched));
    report
        .ensemble
        .push(EnsembleStats::from_samples("uplink_loss_db", &uplink_db));
    report.trace = mean_trace;
    report.budgets.push(NamedBudget::new("end_to_end", budget));
    Ok(report)
}

fn vbg_guide(cfg: &ScenarioConfig) -> Result<Report> {
    let hops = ChainSpec::hops_for(cfg.total_distance, cfg.chain.separation);
    let trace = nominal_chain(
        cfg,
        cfg.total_distance,
        cfg.chain.grid_n,
        cfg.chain.reduced_hops,
    )?;
    let mut budget = LossBudget {
        chain_diffraction: trace.loss_db().max(0.0),
        reflection: reflection_db(&cfg.chain.lens(), hops),
        ..LossBudget::default()
    };
    let mut report = Report::new(cfg.kind);
    if errors_active(cfg) {
        let samples = error_excess_samples(cfg, cfg.ensemble.trials, cfg.seed)?;
        let stats = EnsembleStats::from_samples("error_excess_db", &samples);
        budget.error_excess = stats.mean.max(0.0);
        report.ensemble.push(stats);
    }
    let total = budget.total();
    report.push_result(
        "direct_rate",
        ratemodels::direct_rate(cfg.source_rate, total),
        "Hz",
    );
    report.push_result("total_loss", total, "dB");
    report.push_result("loss_per_km", total / (cfg.total_distance / 1e3), "dB/km");
    report.push_result("elements", hops as f64, "count");
    note_extrapolation(&mut report, &trace);
    report.trace = trace_points(&trace);
    report.budgets.push(NamedBudget::new("guide", budget));
    Ok(report)
}

fn distances(cfg: &ScenarioConfig) -> Vec<f64> {
    linspace(
        cfg.curves.distance_min,
        cfg.curves.distance_max,
        cfg.curves.points,
    )
}

/// One-way loss split of a satellite-to-ground downlink for stations
/// `ground_distance` apart and the satellite over their midpoint.
fn downlink_split(
    altitude: f64,
    ground_distance: f64,
    divergence: f64,
    rx: f64,
    wavelength: f64,
    cfg: &ScenarioConfig,
) -> Result<(f64, f64)> {
    let gamma = ground_distance / (2.0 * EARTH_RADIUS);
    let elev = linkgeom::elevation_at(altitude, gamma);
    if !(elev > 0.0) {
        return Err(ScenarioError::Stage {
            stage: "geometry",
            source: StageError::Other(format!(
                "satellite at {altitude} m is below the horizon for stations {ground_distance} m apart"
            )),
        });
    }
    let rh = EARTH_RADIUS + altitude;
    let s = (rh * rh + EARTH_RADIUS * EARTH_RADIUS - 2.0 * rh * EARTH_RADIUS * gamma.cos()).sqrt();
    let capture = linkgeom::far_field_capture(divergence, s, rx);
    let atm = linkgeom::atmospheric_db(&cfg.attenuation, wavelength, 90.0 - elev)
        .map_err(at("atmosphere"))?;
    Ok((db(capture), atm))
}

fn geo_direct(cfg: &ScenarioConfig) -> Result<Report> {
    let g = &cfg.geo;
    let (cap, atm) = downlink_split(
        g.altitude,
        cfg.total_distance,
        g.effective_divergence(),
        g.rx_aperture,
        g.wavelength,
        cfg,
    )?;
    let budget = LossBudget {
        ground_diffraction: 2.0 * cap,
        atmospheric: 2.0 * atm,
        ..LossBudget::default()
    };
    let rate = geo_direct_rate(g, cfg.total_distance, &cfg.attenuation).map_err(at("geo rate"))?;
    let curve = geo_direct_curve(g, &distances(cfg), &cfg.attenuation).map_err(at("geo curve"))?;
    let mut report = Report::new(cfg.kind);
    report.push_result("geo_rate", rate * SECONDS_PER_DAY, "per_day");
    report.push_result("geo_rate_hz", rate, "Hz");
    report.push_result("total_loss", budget.total(), "dB");
    report.curves.push(curve);
    report
        .budgets
        .push(NamedBudget::new("double_downlink", budget));
    Ok(report)
}

fn repeater_params(
    cfg: &ScenarioConfig,
    distance: f64,
    pair_loss: f64,
) -> ratemodels::RepeaterParams {
    ratemodels::RepeaterParams {
        per_link_loss_db: pair_loss,
        link_length: distance / cfg.repeater.n_links as f64,
        ..cfg.repeater
    }
}

/// Ground-memory repeater rate per day over `distance`; zero where the
/// sources cannot see both stations of an elementary link.
pub fn ground_repeater_rate(cfg: &ScenarioConfig, distance: f64) -> Result<f64> {
    let g = &cfg.repeater_geometry;
    let link = distance / cfg.repeater.n_links as f64;
    match ground_link_pair_loss(
        link,
        g.orbit_altitude,
        g.divergence,
        g.rx_aperture,
        g.wavelength,
        &cfg.attenuation,
    ) {
        None => Ok(0.0),
        Some(loss) => Ok(repeater_rate(&repeater_params(cfg, distance, loss))
            .map_err(at("repeater rate"))?
            * SECONDS_PER_DAY),
    }
}

/// Space-memory repeater rate per day over `distance`.
pub fn space_repeater_rate(cfg: &ScenarioConfig, distance: f64) -> Result<f64> {
    let g = &cfg.repeater_geometry;
    let link = distance / cfg.repeater.n_links as f64;
    let loss = space_link_pair_loss(link, g.divergence, g.rx_aperture);
    Ok(
        repeater_rate(&repeater_params(cfg, distance, loss)).map_err(at("repeater rate"))?
            * SECONDS_PER_DAY,
    )
}

fn curve_of(
    name: &str,
    xs: &[f64],
    f: impl Fn(f64) -> Result<f64> + Sync,
    unit: RateUnit,
) -> Result<RateCurve> {
    let rate = xs.par_iter().map(|&d| f(d)).collect::<Result<Vec<_>>>()?;
    RateCurve::new(
        name,
        Abscissa::DistanceKm,
        unit,
        xs.iter().map(|d| d / 1e3).collect(),
        rate,
    )
    .map_err(at("curve"))
}

fn ground_repeater(cfg: &ScenarioConfig) -> Result<Report> {
    let g = &cfg.repeater_geometry;
    let link = cfg.total_distance / cfg.repeater.n_links as f64;
    let (cap, atm) = downlink_split(
        g.orbit_altitude,
        link,
        g.divergence,
        g.rx_aperture,
        g.wavelength,
        cfg,
    )?;
    let budget = LossBudget {
        ground_diffraction: 2.0 * cap,
        atmospheric: 2.0 * atm,
        ..LossBudget::default()
    };
    let xs = distances(cfg);
    let rep = curve_of(
        "ground_repeater",
        &xs,
        |d| ground_repeater_rate(cfg, d),
        RateUnit::PerDay,
    )?;
    let geo = geo_direct_curve(&cfg.geo, &xs, &cfg.attenuation).map_err(at("geo curve"))?;
    let mut report = Report::new(cfg.kind);
    report.push_result(
        "repeater_rate",
        ground_repeater_rate(cfg, cfg.total_distance)?,
        "per_day",
    );
    report.push_result("elementary_link_loss", budget.total(), "dB");
    for (i, x) in rep.crossings(&geo).into_iter().enumerate() {
        report.push_result(&format!("geo_crossing_{}", i + 1), x, "km");
    }
    report.curves.push(rep);
    report.curves.push(geo);
    report
        .budgets
        .push(NamedBudget::new("elementary_link", budget));
    Ok(report)
}

fn space_repeater(cfg: &ScenarioConfig) -> Result<Report> {
    let g = &cfg.repeater_geometry;
    let link = cfg.total_distance / cfg.repeater.n_links as f64;
    let budget = LossBudget {
        chain_diffraction: space_link_pair_loss(link, g.divergence, g.rx_aperture),
        ..LossBudget::default()
    };
    let ground = preset(ScenarioKind::GroundRepeater.name())?;
    let ground = ScenarioConfig {
        repeater_geometry: cfg.repeater_geometry,
        attenuation: cfg.attenuation.clone(),
        ..ground
    };
    let xs = distances(cfg);
    let space_curve = curve_of(
        "space_repeater",
        &xs,
        |d| space_repeater_rate(cfg, d),
        RateUnit::PerDay,
    )?;
    let ground_curve = curve_of(
        "ground_repeater",
        &xs,
        |d| ground_repeater_rate(&ground, d),
        RateUnit::PerDay,
    )?;
    let rate = space_repeater_rate(cfg, cfg.total_distance)?;
    let ground_rate = ground_repeater_rate(&ground, cfg.total_distance)?;
    let mut report = Report::new(cfg.kind);
    report.push_result("repeater_rate", rate, "per_day");
    report.push_result("ground_repeater_rate", ground_rate, "per_day");
    if ground_rate > 0.0 {
        report.push_result("space_to_ground_ratio", rate / ground_rate, "ratio");
    }
    report.push_result("elementary_link_loss", budget.total(), "dB");
    report.curves.push(space_curve);
    report.curves.push(ground_curve);
    report
        .budgets
        .push(NamedBudget::new("elementary_link", budget));
    Ok(report)
}

fn memory_sat(cfg: &ScenarioConfig, protocol: MemoryProtocol) -> Result<Report> {
    let p = &cfg.protocol;
    let out = memory_key_rate(p, cfg.channel_loss_db, protocol).map_err(at("key rate"))?;
    let losses = linspace(0.0, cfg.curves.loss_max_db, cfg.curves.points);
    let mut report = Report::new(cfg.kind);
    report.push_result("key_rate", out.key_rate, "bit/s");
    report.push_result("key_length", out.key_length, "bits");
    report.push_result("qber", out.qber, "fraction");
    report.push_result("sifted_bits", out.sifted_bits, "bits");
    for (name, proto) in [
        ("single_memory", MemoryProtocol::SingleMemory),
        ("double_memory", MemoryProtocol::DoubleMemory),
    ] {
        match max_tolerable_loss(p, proto) {
            Ok(l) => report.push_result(&format!("max_loss_{name}"), l, "dB"),
            Err(e) => report.notes.push(format!("{name}: {e}")),
        }
        let rate = losses
            .par_iter()
            .map(|&l| memory_key_rate(p, l, proto).map(|o| o.key_rate))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(at("key rate curve"))?;
        report.curves.push(
            RateCurve::new(
                name,
                Abscissa::LossDb,
                RateUnit::BitsPerSecond,
                losses.clone(),
                rate,
            )
            .map_err(at("curve"))?,
        );
    }
    report.budgets.push(NamedBudget::new(
        "channel",
        LossBudget {
            other: cfg.channel_loss_db,
            ..LossBudget::default()
        },
    ));
    Ok(report)
}

fn relay_plus_repeater(cfg: &ScenarioConfig) -> Result<Report> {
    let sub = cfg.repeater.link_length;
    let hops = ChainSpec::hops_for(sub, cfg.chain.separation);
    let trace = nominal_chain(cfg, sub, cfg.chain.grid_n, cfg.chain.reduced_hops)?;
    let budget = LossBudget {
        chain_diffraction: trace.loss_db().max(0.0),
        reflection: reflection_db(&cfg.chain.lens(), hops),
        ..LossBudget::default()
    };
    let n_links = (cfg.total_distance / sub).round().max(1.0) as u32;
    let params = ratemodels::RepeaterParams {
        n_links,
        per_link_loss_db: budget.total(),
        link_length: sub,
        ..cfg.repeater
    };
    let rate = repeater_rate(&params).map_err(at("repeater rate"))? * SECONDS_PER_DAY;
    let mut report = Report::new(cfg.kind);
    report.push_result("repeater_rate", rate, "per_day");
    report.push_result("sublink_loss", budget.total(), "dB");
    report.push_result("elementary_links", n_links as f64, "count");
    if 2f64.powi(cfg.repeater.nesting_level as i32) as u32 != n_links {
        report.notes.push(format!(
            "{n_links} elementary links do not match nesting level {}",
            cfg.repeater.nesting_level
        ));
    }
    note_extrapolation(&mut report, &trace);
    report.trace = trace_points(&trace);
    report.budgets.push(NamedBudget::new("sublink", budget));
    Ok(report)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

// ---------------------------------------------------------------- sweeps

/// One run per grid value of the numeric field at `path`. The report holds
/// the scenario's headline result and first-budget total against the swept
/// value; the runs themselves are independent and execute in parallel.
pub fn sweep(config: &ScenarioConfig, path: &str, grid: &[f64]) -> Result<Report> {
    let def = field(path)?;
    if matches!(
        def.dim,
        Dim::Text | Dim::LengthList | Dim::NumberList | Dim::Table
    ) {
        return Err(ConfigError::WrongType {
            field: path.into(),
            expected: "a numeric field",
        }
        .into());
    }
    if grid.is_empty() || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ConfigError::Invalid {
            field: path.into(),
            reason: "sweep grid must be non-empty and strictly increasing".into(),
        }
        .into());
    }
    let runs = grid
        .par_iter()
        .map(|&x| {
            let mut c = config.clone();
            let v = match def.dim {
                Dim::Count | Dim::Seed => FieldValue::Int(x as u64),
                _ => FieldValue::Num(x),
            };
            c.set(path, v)?;
            run_scenario(&c)
        })
        .collect::<Result<Vec<_>>>()?;
    let head = runs[0]
        .results
        .first()
        .map(|r| (r.name.clone(), r.unit.clone()));
    let mut report = Report::new(config.kind);
    report.sweep = Some(path.to_string());
    let (name, unit) = head.unwrap_or_else(|| ("value".into(), String::new()));
    let values: Vec<f64> = runs
        .iter()
        .map(|r| r.results.first().map_or(f64::NAN, |m| m.value))
        .collect();
    report.series.push(Series {
        tag: name,
        unit,
        x: grid.to_vec(),
        y: values,
    });
    report.budgets = runs
        .iter()
        .zip(grid)
        .filter_map(|(r, x)| {
            r.budgets
                .first()
                .map(|b| NamedBudget::new(&format!("{path}={x}"), b.budget))
        })
        .collect();
    report.provenance = Provenance::of(config);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ() {
        let a: Vec<u64> = (0..100).map(|i| derive_seed(7, i)).collect();
        let mut b = a.clone();
        b.sort();
        b.dedup();
        assert_eq!(b.len(), 100);
        assert_ne!(derive_seed(7, 0), derive_seed(8, 0));
    }

    #[test]
    fn geo_report_is_consistent() {
        let r = run_scenario(&preset("geo_direct").unwrap()).unwrap();
        let b = &r.budgets[0];
        let hz = r.result("geo_rate_hz").unwrap();
        let expected = ratemodels::direct_rate(1e9, b.total);
        assert!((hz - expected).abs() <= 1e-9 * expected);
    }

    #[test]
    fn unknown_sweep_path() {
        let c = preset("geo_direct").unwrap();
        assert!(matches!(
            sweep(&c, "geo.nope", &[1.0]),
            Err(ScenarioError::Config(ConfigError::UnknownParameter(_)))
        ));
    }
}
