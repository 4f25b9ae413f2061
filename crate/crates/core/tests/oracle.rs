mod common;

use common::{cubic, oracle};
use fieldlab_core::shooter::{find_bound_state, ShootingOptions};

#[test]
fn ground_state_heights_agree_with_rk4_oracle() {
    for (n, lo, hi) in [(3usize, 3.0, 6.0), (2, 1.5, 3.0)] {
        let s_oracle = oracle::ground_state_height(n, lo, hi, 1e-13, 1e-11);
        let p = find_bound_state(cubic(n), n, 0, (lo, hi), &ShootingOptions::default()).unwrap();
        let rel = (p.shoot_height - s_oracle).abs() / s_oracle;
        assert!(rel < 1e-9, "N={n}: {} vs {s_oracle} ({rel:e})", p.shoot_height);
    }
}

#[test]
fn oracle_independent_of_its_tolerance() {
    let a = oracle::ground_state_height(3, 3.0, 6.0, 1e-12, 1e-10);
    let b = oracle::ground_state_height(3, 3.0, 6.0, 1e-13, 1e-11);
    assert!((a - b).abs() < 1e-8, "{a} {b}");
}
