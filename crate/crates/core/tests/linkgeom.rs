use std::f64::consts::PI;

use proptest::prelude::*;
use qnet_core::linkgeom::{
    air_mass, atmospheric_db, ground_link_diffraction, max_ground_distance, pointing_jitter_loss,
    slant_range, AttenuationModel, GroundLink, EARTH_RADIUS,
};
use qnet_core::wavefield::GaussianSpec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn bessel_j0(x: f64) -> f64 {
    simpson(|t| (x * t.sin()).cos(), 0.0, PI, 200) / PI
}

/// Power captured by a receiver of radius `rx` from a unit-power Gaussian of
/// radius `w` cut by a transmitter of radius `tx`, by the radial Fresnel
/// integral.
fn hankel_capture(w: f64, tx: f64, rx: f64, lambda: f64, z: f64) -> f64 {
    let amp0 = (2.0 / (PI * w * w)).sqrt();
    let k = 2.0 * PI / lambda;
    let field = |r: f64| {
        let re = simpson(
            |p| {
                amp0 * (-p * p / (w * w)).exp()
                    * (k * p * p / (2.0 * z)).cos()
                    * bessel_j0(k * p * r / z)
                    * p
            },
            0.0,
            tx,
            400,
        );
        let im = simpson(
            |p| {
                amp0 * (-p * p / (w * w)).exp()
                    * (k * p * p / (2.0 * z)).sin()
                    * bessel_j0(k * p * r / z)
                    * p
            },
            0.0,
            tx,
            400,
        );
        (k / z).powi(2) * (re * re + im * im)
    };
    simpson(|r| field(r) * 2.0 * PI * r, 0.0, rx, 200)
}

#[test]
fn reach_of_a_low_orbit() {
    let d = max_ground_distance(500e3, 20.0);
    assert!((2000e3..=3000e3).contains(&d), "{} km", d / 1e3);
    assert!(max_ground_distance(500e3, 10.0) > d);
    assert!(max_ground_distance(1000e3, 20.0) > d);
}

#[test]
fn slant_range_limits() {
    assert!((slant_range(500e3, 0.0).unwrap() - 500e3).abs() < 1e-6);
    assert!(slant_range(500e3, 60.0).unwrap() > 500e3);
    assert!(slant_range(500e3, 90.0).is_err());
    // law of cosines at the satellite
    let z: f64 = 50.0;
    let s = slant_range(500e3, z).unwrap();
    let rh = EARTH_RADIUS + 500e3;
    let lhs = rh * rh;
    let rhs = EARTH_RADIUS.powi(2) + s * s + 2.0 * EARTH_RADIUS * s * z.to_radians().cos();
    assert!((lhs - rhs).abs() / lhs < 1e-12);
}

#[test]
fn air_mass_values() {
    assert_eq!(air_mass(0.0).unwrap(), 1.0);
    assert!((air_mass(60.0).unwrap() - 2.0).abs() < 0.01);
    assert!(air_mass(-1.0).is_err());
}

#[test]
fn attenuation_scales_with_air_mass() {
    let m = AttenuationModel::default();
    assert!((atmospheric_db(&m, 800e-9, 0.0).unwrap() - 0.7).abs() < 1e-12);
    let slanted = atmospheric_db(&m, 800e-9, 60.0).unwrap();
    assert!((slanted - 0.7 * air_mass(60.0).unwrap()).abs() < 1e-12);
    assert!(atmospheric_db(&m, 633e-9, 0.0).is_err());
}

#[test]
fn pointing_loss_matches_monte_carlo() {
    let theta = 2e-6;
    let sigma_r = 0.8e-6;
    let per_axis = Normal::new(0.0, sigma_r / 2f64.sqrt()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 200_000;
    let mut acc = 0.0;
    for _ in 0..n {
        let (x, y): (f64, f64) = (per_axis.sample(&mut rng), per_axis.sample(&mut rng));
        acc += (-2.0 * (x * x + y * y) / (theta * theta)).exp();
    }
    let mc = -10.0 * (acc / n as f64).log10();
    let model = pointing_jitter_loss(sigma_r, theta).unwrap();
    assert!((mc - model).abs() < 0.01 * model, "{mc} vs {model}");
    assert_eq!(pointing_jitter_loss(0.0, theta).unwrap(), 0.0);
    assert!(pointing_jitter_loss(1e-6, 0.0).is_err());
}

#[test]
fn truncated_downlink_matches_radial_integral() {
    let lambda = 800e-9;
    let link = GroundLink {
        altitude: 500e3,
        zenith_deg: 0.0,
        tx_aperture: 0.5,
        rx_aperture: 1.0,
        wavelength: lambda,
    };
    let w = 0.2;
    let got = ground_link_diffraction(&link, &GaussianSpec::collimated(w)).unwrap();
    let want = -10.0 * hankel_capture(w, 0.25, 0.5, lambda, 500e3).log10();
    assert!((got - want).abs() < 0.05, "{got} vs {want}");
}

#[test]
fn untruncated_downlink_matches_gaussian() {
    let lambda = 800e-9;
    let w = 0.1748;
    let link = GroundLink {
        altitude: 500e3,
        zenith_deg: 0.0,
        tx_aperture: 1.2,
        rx_aperture: 1.2,
        wavelength: lambda,
    };
    let got = ground_link_diffraction(&link, &GaussianSpec::collimated(w)).unwrap();
    let far = GaussianSpec::collimated(w).after(500e3, lambda).waist;
    let want = -10.0 * (1.0 - (-2.0 * 0.36 / (far * far)).exp()).log10();
    assert!((got - want).abs() < 0.05, "{got} vs {want}");
}

proptest! {
    #[test]
    fn reach_grows_with_altitude_and_shrinks_with_elevation(
        h in 300e3f64..2000e3, dh in 1e3f64..500e3, e in 5.0f64..60.0, de in 0.5f64..20.0,
    ) {
        prop_assert!(max_ground_distance(h + dh, e) > max_ground_distance(h, e));
        prop_assert!(max_ground_distance(h, e + de) < max_ground_distance(h, e));
    }

    #[test]
    fn pointing_loss_grows_with_jitter(s in 0.0f64..5e-6, ds in 1e-9f64..1e-6, theta in 1e-6f64..1e-4) {
        prop_assert!(pointing_jitter_loss(s + ds, theta).unwrap() > pointing_jitter_loss(s, theta).unwrap());
    }

    #[test]
    fn air_mass_grows_with_zenith(z in 0.0f64..85.0, dz in 0.1f64..4.0) {
        prop_assert!(air_mass(z + dz).unwrap() > air_mass(z).unwrap());
    }
}
