#![allow(dead_code)]

use std::sync::Arc;

use fieldlab_core::nonlinearity::{make_power_nonlinearity, Nonlinearity};
use fieldlab_core::shooter::{solution_family, RadialProfile, ShootingOptions};

pub fn cubic(dimension: usize) -> Arc<Nonlinearity> {
    Arc::new(make_power_nonlinearity(1.0, 3.0, dimension).unwrap())
}

pub fn family(f: Arc<Nonlinearity>, dimension: usize, n_max: usize) -> Vec<RadialProfile> {
    let fam = solution_family(f, dimension, n_max, &ShootingOptions::default()).unwrap();
    assert!(fam.warnings.is_empty(), "{:?}", fam.warnings);
    assert_eq!(fam.profiles.len(), n_max);
    fam.profiles
}

/// Classical fourth-order Runge-Kutta with step doubling, written
/// independently of the production integrator. Used only as an oracle for
/// ground-state heights of `v'' + (N-1)/r v' - v + v^3 = 0`.
pub mod oracle {
    type State = [f64; 2];

    fn rhs(n: f64, r: f64, y: State) -> State {
        let f = -y[0] + y[0] * y[0] * y[0];
        [y[1], -f - (n - 1.0) / r * y[1]]
    }

    fn rk4(n: f64, r: f64, y: State, h: f64) -> State {
        let add = |y: State, k: State, c: f64| [y[0] + c * k[0], y[1] + c * k[1]];
        let k1 = rhs(n, r, y);
        let k2 = rhs(n, r + 0.5 * h, add(y, k1, 0.5 * h));
        let k3 = rhs(n, r + 0.5 * h, add(y, k2, 0.5 * h));
        let k4 = rhs(n, r + h, add(y, k3, h));
        [
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ]
    }

    /// `true` when the trajectory from `v(0) = s > 0` crosses zero before
    /// turning back up.
    pub fn overshoots(dimension: usize, s: f64, atol: f64, rtol: f64) -> bool {
        let n = dimension as f64;
        // second-order start at a radius where the truncated series is exact to roundoff
        let r0 = 1e-4;
        let fs = -s + s * s * s;
        let mut r = r0;
        let mut y = [s - fs * r0 * r0 / (2.0 * n), -fs * r0 / n];
        let mut h = 1e-3;
        while r < 60.0 {
            let full = rk4(n, r, y, h);
            let half = rk4(n, r + 0.5 * h, rk4(n, r, y, 0.5 * h), 0.5 * h);
            let err = ((half[0] - full[0]).abs() / (atol + rtol * half[0].abs()))
                .max((half[1] - full[1]).abs() / (atol + rtol * half[1].abs()))
                / 15.0;
            if err > 1.0 {
                h *= (0.9 * err.powf(-0.2)).max(0.1);
                continue;
            }
            // local extrapolation
            y = [half[0] + (half[0] - full[0]) / 15.0, half[1] + (half[1] - full[1]) / 15.0];
            r += h;
            if y[0] < 0.0 {
                return true;
            }
            if y[1] > 0.0 {
                return false;
            }
            h = (h * (0.9 * err.max(1e-10).powf(-0.2)).min(4.0)).min(0.02);
        }
        panic!("oracle could not classify s = {s}");
    }

    /// Ground-state height by plain bisection on `[lo, hi]`.
    pub fn ground_state_height(dimension: usize, lo: f64, hi: f64, atol: f64, rtol: f64) -> f64 {
        let (mut a, mut b) = (lo, hi);
        assert!(!overshoots(dimension, a, atol, rtol) && overshoots(dimension, b, atol, rtol));
        while b - a > 1e-12 {
            let m = 0.5 * (a + b);
            if overshoots(dimension, m, atol, rtol) {
                b = m;
            } else {
                a = m;
            }
        }
        0.5 * (a + b)
    }
}
