use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use qnet_core::wavefield::{
    self, beam_radius, encircled_power, gaussian_field, mode_overlap, propagate, unpropagate,
    ComplexField, GaussianSpec, Grid, WaveError,
};

// closed-form 1/e^2 radius of a collimated Gaussian after z
fn radius_oracle(w0: f64, lambda: f64, z: f64) -> f64 {
    let zr = PI * w0 * w0 / lambda;
    w0 * (1.0 + (z / zr).powi(2)).sqrt()
}

#[test]
fn rayleigh_range_of_guide_mode() {
    let w = 0.1748;
    let zr = PI * w * w / 800e-9;
    assert!((zr - 1.2e5).abs() / 1.2e5 < 1e-3, "{zr}");
}

#[test]
fn launch_is_unit_power() {
    let g = Grid::new(1.5, 1024).unwrap();
    let f = gaussian_field(&g, &GaussianSpec::collimated(0.1748), 800e-9).unwrap();
    assert!((f.power() - 1.0).abs() < 1e-6);
    let r = beam_radius(&f).unwrap();
    assert!((r - 0.1748).abs() / 0.1748 < 1e-3, "{r}");
}

#[test]
fn coarse_grid_is_refused() {
    let g = Grid::new(1.5, 256).unwrap();
    let e = gaussian_field(&g, &GaussianSpec::collimated(1e-3), 800e-9).unwrap_err();
    assert!(matches!(e, WaveError::GridTooCoarse { .. }));
}

#[test]
fn oversize_waist_is_refused() {
    let g = Grid::new(1.0, 256).unwrap();
    let e = gaussian_field(&g, &GaussianSpec::collimated(0.3), 800e-9).unwrap_err();
    assert!(matches!(e, WaveError::WindowTooSmall { .. }));
}

#[test]
fn bad_grid_sizes() {
    assert!(matches!(
        Grid::new(1.0, 300),
        Err(WaveError::InvalidGridSize(300))
    ));
    assert!(matches!(
        Grid::new(1.0, 128),
        Err(WaveError::InvalidGridSize(128))
    ));
    assert!(Grid::new(-1.0, 256).is_err());
}

#[test]
fn zero_distance_is_identity() {
    let g = Grid::new(1.5, 256).unwrap();
    let f = gaussian_field(&g, &GaussianSpec::collimated(0.2), 800e-9).unwrap();
    assert_eq!(propagate(&f, 0.0).unwrap(), f);
}

#[test]
fn negative_distance_is_refused() {
    let g = Grid::new(1.5, 256).unwrap();
    let f = gaussian_field(&g, &GaussianSpec::collimated(0.2), 800e-9).unwrap();
    assert!(matches!(
        propagate(&f, -1.0),
        Err(WaveError::InvalidDistance(_))
    ));
}

#[test]
fn aliasing_reports_safe_distance() {
    let g = Grid::new(1.5, 256).unwrap();
    let f = gaussian_field(&g, &GaussianSpec::collimated(0.2), 800e-9).unwrap();
    let safe = g.max_safe_distance(800e-9);
    match propagate(&f, 10.0 * safe) {
        Err(WaveError::Aliasing { max_safe, .. }) => assert_eq!(max_safe, safe),
        other => panic!("expected aliasing error, got {other:?}"),
    }
    assert!(propagate(&f, 0.5 * safe).is_ok());
}

#[test]
fn collimated_radius_at_one_and_two_spacings() {
    let g = Grid::new(1.5, 1024).unwrap();
    let w0 = 0.1748;
    let f = gaussian_field(&g, &GaussianSpec::collimated(w0), 800e-9).unwrap();
    let a = propagate(&f, 120e3).unwrap();
    let ra = beam_radius(&a).unwrap();
    assert!((ra - 0.2472).abs() / 0.2472 < 5e-3, "{ra}");
    assert!((ra - radius_oracle(w0, 800e-9, 120e3)).abs() / ra < 5e-3);
    // two steps: a single 240 km step is past the safe distance of this grid
    let b = propagate(&a, 120e3).unwrap();
    let rb = beam_radius(&b).unwrap();
    assert!((rb - 0.3909).abs() / 0.3909 < 5e-3, "{rb}");
}

#[test]
fn amplitude_scaling_scales_power_quadratically() {
    let g = Grid::new(1.5, 256).unwrap();
    let mut f = gaussian_field(&g, &GaussianSpec::collimated(0.2), 800e-9).unwrap();
    f.scale(0.5);
    assert!((f.power() - 0.25).abs() < 1e-12);
}

#[test]
fn overlap_ignores_global_phase() {
    let g = Grid::new(1.5, 256).unwrap();
    let f = gaussian_field(&g, &GaussianSpec::curved(0.2, -5e4), 800e-9).unwrap();
    let mut h = f.clone();
    let rot = Complex64::from_polar(1.0, PI / 3.0);
    for v in &mut h.data {
        *v *= rot;
    }
    assert!((mode_overlap(&h, &f).unwrap() - 1.0).abs() < 1e-12);
    assert!((mode_overlap(&f, &f).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn overlap_needs_matching_grids() {
    let a = gaussian_field(
        &Grid::new(1.5, 256).unwrap(),
        &GaussianSpec::collimated(0.2),
        800e-9,
    )
    .unwrap();
    let b = gaussian_field(
        &Grid::new(1.5, 512).unwrap(),
        &GaussianSpec::collimated(0.2),
        800e-9,
    )
    .unwrap();
    assert!(matches!(mode_overlap(&a, &b), Err(WaveError::GridMismatch)));
}

#[test]
fn empty_field_has_no_radius() {
    let f = ComplexField::zeros(Grid::new(1.0, 256).unwrap(), 800e-9).unwrap();
    assert!(matches!(beam_radius(&f), Err(WaveError::ZeroPower)));
    assert!(matches!(f.clone().normalized(), Err(WaveError::ZeroPower)));
}

#[test]
fn encircled_power_matches_gaussian_integral() {
    let g = Grid::new(1.5, 1024).unwrap();
    let w = 0.1748;
    let f = gaussian_field(&g, &GaussianSpec::collimated(w), 800e-9).unwrap();
    for a in [0.1, 0.2, 0.3] {
        let want = 1.0 - (-2.0 * a * a / (w * w)).exp();
        let got = encircled_power(&f, (0.0, 0.0), a);
        assert!((got - want).abs() < 2e-3, "a={a}: {got} vs {want}");
    }
}

#[test]
fn reciprocity() {
    let g = Grid::new(1.5, 512).unwrap();
    let f = gaussian_field(&g, &GaussianSpec::collimated(0.1748), 800e-9).unwrap();
    let back = unpropagate(&propagate(&f, 120e3).unwrap(), 120e3).unwrap();
    let n = f.data.len() as f64;
    let rms = (f
        .data
        .iter()
        .zip(&back.data)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        / n)
        .sqrt();
    let peak = f.data.iter().map(|a| a.norm()).fold(0.0, f64::max);
    assert!(rms / peak < 1e-6, "relative rms {}", rms / peak);
}

#[test]
fn guard_band_leaves_centre_untouched() {
    let g = Grid::new(1.5, 256).unwrap();
    let prof = wavefield::guard_profile(&g);
    let n = g.n();
    assert_eq!(prof[n / 2], 1.0);
    assert!(prof[0] <= 1.001e-3);
    let mut f = gaussian_field(&g, &GaussianSpec::collimated(0.1), 800e-9).unwrap();
    let lost = wavefield::absorb_guard_band(&mut f);
    assert!(lost >= 0.0 && lost < 1e-12);
}

#[test]
fn fresnel_zoom_matches_analytic_far_field() {
    // unapertured Gaussian: the far field is Gaussian with the textbook radius
    let g = Grid::new(1.5, 512).unwrap();
    let w0 = 0.15;
    let lambda = 800e-9;
    let z = 500e3;
    let f = gaussian_field(&g, &GaussianSpec::collimated(w0), lambda).unwrap();
    let wz = radius_oracle(w0, lambda, z);
    let out = Grid::new(6.0 * wz, 256).unwrap();
    let far = wavefield::fresnel_zoom(&f, z, &out).unwrap();
    let r = beam_radius(&far).unwrap();
    assert!((r - wz).abs() / wz < 5e-3, "{r} vs {wz}");
    assert!((far.power() - 1.0).abs() < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn propagation_is_unitary_and_matches_gaussian_oracle(
        w0 in 0.05f64..0.30,
        long in any::<bool>(),
        frac in 0.0f64..1.0,
    ) {
        let lambda = if long { 1550e-9 } else { 800e-9 };
        let zr = PI * w0 * w0 / lambda;
        let z = frac * 3.0 * zr;
        // wide enough that the whole angular spectrum sits inside the passband
        let window = (8.0 * radius_oracle(w0, lambda, 3.0 * zr)).max(1.5);
        let g = Grid::new(window, 1024).unwrap();
        prop_assume!(z <= g.max_safe_distance(lambda));
        let f = gaussian_field(&g, &GaussianSpec::collimated(w0), lambda).unwrap();
        let p = propagate(&f, z).unwrap();
        prop_assert!((p.power() / f.power() - 1.0).abs() < 1e-9, "power ratio {}", p.power() / f.power());
        let r = beam_radius(&p).unwrap();
        let want = radius_oracle(w0, lambda, z);
        prop_assert!((r - want).abs() / want < 5e-3, "radius {} vs {}", r, want);
    }
}
