mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use common::{cubic, family};
use fieldlab_core::envelope::{build_envelope, default_p0, uniform_grid};
use fieldlab_core::functionals::*;
use fieldlab_core::nonlinearity::KirchhoffFunction;
use fieldlab_core::shooter::{RadialProfile, TailModel};

/// `amp * exp(-r^2)` sampled on `[0, 8]`; the tail beyond is below 1e-27.
fn gaussian(dimension: usize, amp: f64, samples: usize) -> RadialProfile {
    let radii: Vec<f64> = (0..=samples).map(|i| 8.0 * i as f64 / samples as f64).collect();
    let values: Vec<f64> = radii.iter().map(|r| amp * (-r * r).exp()).collect();
    let derivs: Vec<f64> = radii.iter().map(|r| -2.0 * r * amp * (-r * r).exp()).collect();
    let tail = TailModel::matched(dimension, 1.0, 8.0, *values.last().unwrap());
    RadialProfile::from_samples(dimension, radii, values, derivs, Some(tail), cubic(dimension)).unwrap()
}

#[test]
fn gaussian_l2_norm() {
    let u = gaussian(3, 1.0, 4000);
    let exact = (PI / 2.0).powf(1.5);
    assert!((l2_norm_sq(&u).unwrap() - exact).abs() < 1e-10);
    // int 4 r^2 e^{-2 r^2} over R^3 is 3 (pi/2)^{3/2}
    assert!((gradient_norm_sq(&u).unwrap() - 3.0 * exact).abs() < 1e-10);
    let u2 = gaussian(2, 1.0, 4000);
    assert!((l2_norm_sq(&u2).unwrap() - PI / 2.0).abs() < 1e-10);
}

#[test]
fn missing_tail_is_rejected() {
    let mut u = gaussian(3, 1.0, 100);
    u.tail = None;
    assert!(radial_integral(|t| t * t, &u).is_err());
}

#[test]
fn zero_profile_has_zero_energies() {
    let radii: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
    let zeros = vec![0.0; radii.len()];
    let tail = TailModel::matched(3, 1.0, 10.0, 0.0);
    let z = RadialProfile::from_samples(3, radii, zeros.clone(), zeros, Some(tail), cubic(3)).unwrap();
    assert_eq!(energy_sf(&z).unwrap(), 0.0);
    assert_eq!(nehari_residual(&z, &KirchhoffFunction::unit()).unwrap(), 0.0);
    let e = build_envelope(cubic(3), 3, 3.0, uniform_grid(10.0, 1000)).unwrap();
    assert_eq!(energy_aux(&z, &e, 1.0).unwrap(), 0.0);
}

#[test]
fn bump_is_not_a_solution() {
    let u = gaussian(3, 2.0, 2000);
    let m = KirchhoffFunction::unit();
    assert!(pohozaev_residual(&u, &m).unwrap().abs() > 1e-2);
    assert!(nehari_residual(&u, &m).unwrap().abs() > 1e-2);
}

#[test]
fn small_bump_sees_no_envelope() {
    // sup |u| = 0.5 < dead zone 1/sqrt(2): Hbar(u) vanishes
    let u = gaussian(3, 0.5, 2000);
    let e = build_envelope(cubic(3), 3, 3.0, uniform_grid(10.0, 10_000)).unwrap();
    let k = energy_aux(&u, &e, 1.0).unwrap();
    assert_eq!(k, 0.5 * aux_norm_sq(&u, &e, 1.0).unwrap());
}

#[test]
fn solutions_satisfy_identities() {
    for n in [2usize, 3] {
        let fam = family(cubic(n), n, 2);
        for v in &fam {
            let r = functional_report(v, &KirchhoffFunction::unit()).unwrap();
            assert!(r.pohozaev_residual.abs() < 1e-5, "{r:?}");
            assert!(r.nehari_residual.abs() < 1e-5, "{r:?}");
            assert!(r.strong_residual_sup < 1e-6, "{r:?}");
            if n == 3 {
                assert!((energy_sf(v).unwrap() - r.grad_norm_sq / 3.0).abs() < 1e-5 * r.grad_norm_sq);
            } else {
                assert!(r.integral_f.abs() < 1e-5 * r.grad_norm_sq);
            }
        }
    }
}

#[test]
fn kirchhoff_energies() {
    let v = &family(cubic(3), 3, 1)[0];
    let unit = KirchhoffFunction::unit();
    assert_eq!(energy_kt(v, &unit).unwrap(), energy_sf(v).unwrap());
    let (a, b) = (1.5, 0.25);
    let g = gradient_norm_sq(v).unwrap();
    let big_f = radial_integral(|t| v.nonlinearity.antideriv(t), v).unwrap();
    let j = energy_kt(v, &KirchhoffFunction::affine(a, b).unwrap()).unwrap();
    assert!((j - (0.5 * a * g + 0.25 * b * g * g - big_f)).abs() < 1e-10 * j.abs());
    assert_eq!(scaled_energy(0.0, v, &unit).unwrap(), energy_kt(v, &unit).unwrap());
}

#[test]
fn rescaled_sf_energy_follows_scaling() {
    // v(·/e) has I = e^{N-2}/2 g - e^N int F
    let v = &family(cubic(3), 3, 1)[0];
    let w = v.rescaled((-1.0f64).exp()).unwrap();
    let g = gradient_norm_sq(v).unwrap();
    let big_f = radial_integral(|t| v.nonlinearity.antideriv(t), v).unwrap();
    let e = 1.0f64.exp();
    let expected = 0.5 * e * g - e.powi(3) * big_f;
    assert!((energy_sf(&w).unwrap() - expected).abs() < 1e-9 * expected.abs());
}

#[test]
fn misscaled_profile_fails_strong_form() {
    let v = &family(cubic(3), 3, 1)[0];
    let m = KirchhoffFunction::affine(1.0, 1.0).unwrap();
    let g = v.grad_norm_sq().unwrap();
    let t = (-g + (g * g + 4.0).sqrt()) / 2.0;
    let good = v.rescaled(t).unwrap();
    assert!(strong_residual(&good, &m, &v.nonlinearity).unwrap() < 1e-4);
    let bad = v.rescaled(1.1 * t).unwrap();
    assert!(strong_residual(&bad, &m, &v.nonlinearity).unwrap() > 1e-2);
}

#[test]
fn doubling_density_stays_within_reported_tolerance() {
    let coarse = gaussian(3, 1.5, 1000);
    let fine = gaussian(3, 1.5, 2000);
    let m = KirchhoffFunction::unit();
    let a = functional_report(&coarse, &m).unwrap();
    let b = functional_report(&fine, &m).unwrap();
    for (x, y) in [(a.grad_norm_sq, b.grad_norm_sq), (a.l2_norm_sq, b.l2_norm_sq), (a.integral_f, b.integral_f)] {
        assert!((x - y).abs() <= a.quadrature_tol, "{x} {y} {}", a.quadrature_tol);
    }
}

#[test]
fn aux_ground_state_has_positive_energy() {
    use fieldlab_core::envelope::aux_problem_nonlinearity;
    use fieldlab_core::shooter::{solution_family, ShootingOptions};
    let p0 = default_p0(3);
    let e = Arc::new(build_envelope(cubic(3), 3, p0, uniform_grid(20.0, 20_000)).unwrap());
    let fa = Arc::new(aux_problem_nonlinearity(e.clone(), 1.0).unwrap());
    let u = solution_family(fa, 3, 1, &ShootingOptions::default()).unwrap().profiles.remove(0);
    let k = energy_aux(&u, &e, 1.0).unwrap();
    let norm = aux_norm_sq(&u, &e, 1.0).unwrap();
    assert!(k > 0.0);
    assert!(k >= (0.5 - 1.0 / (p0 + 1.0)) * norm - 1e-6, "{k} {norm}");
}
