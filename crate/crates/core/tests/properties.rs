mod common;

use std::sync::{Arc, OnceLock};

use common::cubic;
use fieldlab_core::envelope::{build_envelope, default_p0, uniform_grid};
use fieldlab_core::functionals::{gradient_norm_sq, l2_norm_sq, radial_integral};
use fieldlab_core::nonlinearity::{make_power_nonlinearity, KirchhoffFunction};
use fieldlab_core::shooter::{find_bound_state, integrate_ivp, IntegratorOptions, RadialProfile, ShootingOptions};
use fieldlab_core::transfer::{solve_transfer, TransferOptions};
use proptest::prelude::*;

fn ground_state() -> &'static RadialProfile {
    static P: OnceLock<RadialProfile> = OnceLock::new();
    P.get_or_init(|| find_bound_state(cubic(3), 3, 0, (3.0, 6.0), &ShootingOptions::default()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn trajectories_mirror(s in 0.05f64..60.0, n in 2usize..5) {
        let f = make_power_nonlinearity(1.0, 2.5, n).unwrap();
        let o = IntegratorOptions::default();
        let a = integrate_ivp(&f, n, s, &o).unwrap();
        let b = integrate_ivp(&f, n, -s, &o).unwrap();
        prop_assert_eq!(&a.radii, &b.radii);
        prop_assert!(a.values.iter().zip(&b.values).all(|(x, y)| *x == -*y));
        prop_assert_eq!(a.classification, b.classification);
    }

    #[test]
    fn energy_nonincreasing(s in 0.5f64..40.0, n in 2usize..4) {
        let f = make_power_nonlinearity(1.0, 3.0, n).unwrap();
        let o = IntegratorOptions::default();
        let t = integrate_ivp(&f, n, s, &o).unwrap();
        let e = t.energies(&f);
        let slack = 10.0 * o.rtol * e[0].abs().max(1.0);
        for w in e.windows(2) {
            prop_assert!(w[1] <= w[0] + slack, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn envelope_invariants(mu in 0.3f64..3.0, p in 1.3f64..4.8) {
        let f = Arc::new(make_power_nonlinearity(mu, p, 3).unwrap());
        let p0 = default_p0(3);
        let e = build_envelope(f.clone(), 3, p0, uniform_grid(8.0, 4000)).unwrap();
        for i in 1..e.t.len() {
            let t = e.t[i];
            // sandwich
            prop_assert!(e.omega * t + f.eval(t) <= e.h[i]);
            prop_assert!(e.h[i] <= e.hbar[i]);
            // monotone ratio
            let r = e.hbar[i] / t.powf(p0);
            let r_prev = if i > 1 { e.hbar[i - 1] / e.t[i - 1].powf(p0) } else { 0.0 };
            prop_assert!(r >= r_prev - 1e-12 * r.abs().max(1.0));
            // (p0 + 1) Hbar <= t hbar up to the trapezoid error
            let slack = 1e-3 * (t * e.hbar[i]).max(1e-12) + 1e-12;
            prop_assert!((p0 + 1.0) * e.big_hbar[i] <= t * e.hbar[i] + slack);
        }
    }

    #[test]
    fn scaling_laws_are_exact(t in 0.2f64..5.0) {
        let v = ground_state();
        let u = v.rescaled(t).unwrap();
        let f = v.nonlinearity.clone();
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
        let g = gradient_norm_sq(v).unwrap();
        prop_assert!(rel(gradient_norm_sq(&u).unwrap(), g * t.powi(-1)) < 1e-12);
        prop_assert!(rel(u.grad_norm_sq().unwrap(), g * t.powi(-1)) < 1e-12);
        prop_assert!(rel(l2_norm_sq(&u).unwrap(), l2_norm_sq(v).unwrap() * t.powi(-3)) < 1e-12);
        let fv = radial_integral(|x| f.antideriv(x), v).unwrap();
        prop_assert!(rel(radial_integral(|x| f.antideriv(x), &u).unwrap(), fv * t.powi(-3)) < 1e-12);
        prop_assert_eq!(u.node_count, v.node_count);
    }

    #[test]
    fn transfer_roots_certified(a in 0.1f64..5.0, b in 1e-4f64..10.0, s in 0.5f64..3.0) {
        let v = ground_state();
        let opts = TransferOptions { strong_residual: false, ..Default::default() };
        for m in [KirchhoffFunction::affine(a, b).unwrap(), KirchhoffFunction::power_m(a, b, s).unwrap()] {
            let res = solve_transfer(v, &m, &opts).unwrap();
            for (d, kt) in res.diagnostics.iter().zip(&res.kirchhoff_grad_norms) {
                prop_assert!(d.h_residual.abs() < 1e-10);
                prop_assert_eq!(*kt, d.t.powf(-1.0) * res.grad_norm_sq_v);
            }
        }
    }

    #[test]
    fn two_dimensional_root_is_unique(a in 0.1f64..5.0, b in 0.0f64..10.0) {
        let v = find_bound_state(cubic(2), 2, 0, (1.5, 3.0), &ShootingOptions::default()).unwrap();
        let m = KirchhoffFunction::affine(a, b).unwrap();
        let res = solve_transfer(&v, &m, &TransferOptions { strong_residual: false, ..Default::default() }).unwrap();
        prop_assert_eq!(res.roots.len(), 1);
        let g = res.grad_norm_sq_v;
        // h(v, t) = M(g) t^2 is increasing in t, so a scan over t finds the same root
        let mut lo = 1e-6_f64;
        let mut hi = 1e6;
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if m.eval(g) * mid * mid > 1.0 { hi = mid } else { lo = mid }
        }
        prop_assert!((res.roots[0] - lo).abs() < 1e-12 * lo);
        prop_assert!(res.diagnostics[0].h_residual.abs() < 1e-12);
    }
}

#[test]
fn tail_consistency_across_family() {
    for p in common::family(cubic(3), 3, 4) {
        let (dv, dl) = p.tail_consistency().unwrap();
        assert!(dv < 1e-4 && dl < 1e-4, "nodes {}: {dv:e} {dl:e}", p.node_count);
        // |v| decays monotonically past the last extremum
        let last = p.values.len() - 1;
        assert!(p.values[last].abs() < p.values[last - 1].abs());
    }
}

fn height_shift(atol: f64, rtol: f64) -> f64 {
    let mut base = ShootingOptions::default();
    base.integrator.atol = atol;
    base.integrator.rtol = rtol;
    let mut tight = base;
    tight.integrator.atol *= 0.5;
    tight.integrator.rtol *= 0.5;
    let a = find_bound_state(cubic(3), 3, 0, (3.0, 6.0), &base).unwrap().shoot_height;
    let b = find_bound_state(cubic(3), 3, 0, (3.0, 6.0), &tight).unwrap().shoot_height;
    (a - b).abs()
}

#[test]
fn halving_tolerances_barely_moves_height() {
    let bisection_tol = ShootingOptions::default().bisection_tol;
    // integrator error dominates at the default tolerances
    assert!(height_shift(1e-12, 1e-10) < 1e-10);
    let shift = height_shift(1e-14, 1e-12);
    assert!(shift < 10.0 * bisection_tol, "{shift:e}");
}
