use qnet_core::turbulence::{
    calibrate_r0, combine_r0, kolmogorov_structure, make_screen, mean_uplink_loss,
    structure_function, uplink_channel, vacuum_uplink, AtmosphereProfile, TurbulenceError,
    UplinkGeometry, R0_MAX,
};
use qnet_core::wavefield::{encircled_power, Grid};

fn geometry(seeds: usize) -> UplinkGeometry {
    UplinkGeometry {
        tx_waist: 0.15,
        wavelength: 800e-9,
        orbit_altitude: 500e3,
        rx_aperture: 0.6,
        grid_n: 256,
        window: 1.5,
        seeds,
        seed: 11,
        profile: AtmosphereProfile::standard(0.1),
    }
}

#[test]
fn weak_turbulence_is_nearly_flat() {
    let g = Grid::new(1.5, 256).unwrap();
    let s = make_screen(&g, 1e12, 5).unwrap();
    let rms = (s.phase.iter().map(|p| p * p).sum::<f64>() / s.phase.len() as f64).sqrt();
    assert!(rms < 1e-3, "{rms}");
}

#[test]
fn screens_are_seeded() {
    let g = Grid::new(1.0, 256).unwrap();
    let a = make_screen(&g, 0.1, 9).unwrap();
    assert_eq!(a, make_screen(&g, 0.1, 9).unwrap());
    assert_ne!(a.phase, make_screen(&g, 0.1, 10).unwrap().phase);
    assert_eq!(a.r0, 0.1);
}

#[test]
fn structure_function_is_kolmogorov() {
    let g = Grid::new(2.0, 256).unwrap();
    let r0 = 0.1;
    // from four cells out to an eighth of the window
    let lags = [4usize, 8, 16, 32];
    let mut acc = [0.0; 4];
    let screens = 120;
    for seed in 0..screens {
        let s = make_screen(&g, r0, seed).unwrap();
        for (a, &lag) in acc.iter_mut().zip(&lags) {
            *a += structure_function(&s, lag);
        }
    }
    for (a, &lag) in acc.iter().zip(&lags) {
        let r = lag as f64 * g.spacing();
        let got = a / screens as f64;
        let want = kolmogorov_structure(r, r0);
        assert!(
            (got / want - 1.0).abs() < 0.10,
            "r = {r:.4} m: {got:.3} vs {want:.3}"
        );
    }
}

#[test]
fn layers_recombine_to_column_r0() {
    let p = AtmosphereProfile::standard(0.062);
    assert!((combine_r0(&p.layer_r0()) - 0.062).abs() < 1e-12);
    let bad = AtmosphereProfile {
        weights: vec![0.5, 0.5, 0.1, 0.1, 0.1],
        ..p.clone()
    };
    assert!(bad.validate().is_err());
}

#[test]
fn calibration_on_a_known_curve() {
    // synthetic monotone loss with the root at r0 = 0.07
    let model = |r0: f64| Ok(22.0 + 8.0 * (0.07f64 / r0).ln());
    let r = calibrate_r0(22.0, 1e-4, model).unwrap();
    assert!((r / 0.07 - 1.0).abs() < 1e-4);
    assert!(matches!(
        calibrate_r0(0.0, 0.1, model),
        Err(TurbulenceError::BracketExhausted { .. })
    ));
    let at_top = model(R0_MAX).unwrap();
    assert_eq!(calibrate_r0(at_top, 0.01, model).unwrap(), R0_MAX);
}

#[test]
fn vacuum_uplink_matches_gaussian_capture() {
    let geom = geometry(1);
    let launch = geom.launch().unwrap();
    let vac = vacuum_uplink(&launch, &geom.profile, geom.orbit_altitude).unwrap();
    let got = encircled_power(&vac, (0.0, 0.0), 0.3) / launch.power();
    let zr = std::f64::consts::PI * 0.15f64.powi(2) / 800e-9;
    let w = 0.15 * (1.0 + (500e3 / zr).powi(2)).sqrt();
    let want = 1.0 - (-2.0 * 0.09 / (w * w)).exp();
    assert!(
        (10.0 * (got / want).log10()).abs() < 0.05,
        "{got} vs {want}"
    );
}

#[test]
fn uplink_is_seeded() {
    let geom = geometry(1);
    let launch = geom.launch().unwrap();
    let p = geom.profile.with_r0(0.08);
    let a = uplink_channel(&launch, &p, 500e3, 3).unwrap();
    assert_eq!(a, uplink_channel(&launch, &p, 500e3, 3).unwrap());
    assert!(uplink_channel(&launch, &p, 10e3, 3).is_err());
}

#[test]
fn stronger_turbulence_loses_more() {
    let geom = geometry(6);
    let r0s = [0.03, 0.05, 0.08, 0.15, 0.4];
    let losses: Vec<f64> = r0s
        .iter()
        .map(|&r| mean_uplink_loss(&geom, r).unwrap())
        .collect();
    for w in losses.windows(2) {
        assert!(w[0] > w[1], "{losses:?}");
    }
    let launch = geom.launch().unwrap();
    let vac = vacuum_uplink(&launch, &geom.profile, geom.orbit_altitude).unwrap();
    let vac_db = -10.0 * (encircled_power(&vac, (0.0, 0.0), 0.3) / launch.power()).log10();
    assert!(losses.iter().all(|&l| l > vac_db));
}

#[test]
fn calibrated_r0_is_plausible() {
    let geom = geometry(6);
    let p = qnet_core::turbulence::calibrate_profile(22.0, 0.1, &geom).unwrap();
    assert!((0.03..=0.30).contains(&p.r0), "{}", p.r0);
    assert!((mean_uplink_loss(&geom, p.r0).unwrap() - 22.0).abs() <= 0.1);
}
