//! Acceptance gate: one PASS/FAIL line per criterion; exits nonzero when any
//! criterion fails.

mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{cubic, oracle};
use fieldlab_core::envelope::{aux_problem_nonlinearity, build_envelope, default_p0, uniform_grid, verify_envelope};
use fieldlab_core::functionals::{aux_norm_sq, energy_aux, energy_kt, energy_sf, functional_report, radial_integral, scaled_energy, scaled_energy_derivative};
use fieldlab_core::nonlinearity::{make_power_nonlinearity, ConditionId, KirchhoffFunction, Verdict};
use fieldlab_core::runner::{run, FSpec, RunConfig, Task};
use fieldlab_core::shooter::{find_bound_state, solution_family, RadialProfile, ShootingOptions};
use fieldlab_core::transfer::{multiplicity_sweep, q_threshold, solve_transfer, transfer_map, TransferOptions, DISTINCT_REL};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn family(dimension: usize, f: Arc<fieldlab_core::nonlinearity::Nonlinearity>, n: usize) -> Result<Vec<RadialProfile>, String> {
    let fam = solution_family(f, dimension, n, &ShootingOptions::default()).map_err(err)?;
    ensure(fam.profiles.len() == n, || format!("found {} of {n} profiles: {:?}", fam.profiles.len(), fam.warnings))?;
    Ok(fam.profiles)
}

fn grads(ps: &[RadialProfile]) -> Result<Vec<f64>, String> {
    ps.iter().map(|p| p.grad_norm_sq().map_err(err)).collect()
}

fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)).collect()
}

/// Scalar-field family through the batch `solve` task.
fn ac1() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let cfg = RunConfig::from_value(serde_json::json!({
        "dimension": 3,
        "f": FSpec::Power { mu: 1.0, p: 3.0 },
        "n_max": 5,
        "cache_dir": dir.path().join("cache"),
        "output": dir.path().join("out"),
    }))
    .map_err(err)?;
    let start = Instant::now();
    run(Task::Solve, &cfg).map_err(err)?;
    let elapsed = start.elapsed();
    let csv = std::fs::read_to_string(dir.path().join("out/solve.csv")).map_err(err)?;
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse::<f64>().unwrap_or(f64::NAN)).collect())
        .collect();
    ensure(rows.len() == 5, || format!("{} rows", rows.len()))?;
    let mut worst: f64 = 0.0;
    for (i, r) in rows.iter().enumerate() {
        ensure(r[1] == i as f64, || format!("row {i} has {} nodes", r[1]))?;
        ensure(r[9].abs() < 1e-5 && r[10].abs() < 1e-5, || format!("row {i}: pohozaev {:e}, nehari {:e}", r[9], r[10]))?;
        worst = worst.max(r[9].abs()).max(r[10].abs());
    }
    ensure(rows.windows(2).all(|w| w[1][3] > w[0][3]), || "gradient norms not increasing".into())?;
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("nodes 0..4, worst residual {worst:.1e}, {:.2}s", elapsed.as_secs_f64()))
}

fn ac2() -> Outcome {
    let v = family(2, cubic(2), 1)?.remove(0);
    let r = functional_report(&v, &KirchhoffFunction::unit()).map_err(err)?;
    let ratio = r.integral_f.abs() / r.grad_norm_sq;
    ensure(ratio < 1e-5, || format!("|int F|/g = {ratio:e}"))?;
    Ok(format!("|int F|/|grad v|^2 = {ratio:.1e}"))
}

fn ac3() -> Outcome {
    let mut worst: f64 = 0.0;
    for v in family(3, cubic(3), 5)? {
        let g = v.grad_norm_sq().map_err(err)?;
        let rel = (energy_sf(&v).map_err(err)? - g / 3.0).abs() / g;
        ensure(rel < 1e-5, || format!("nodes {}: {rel:e}", v.node_count))?;
        worst = worst.max(rel);
    }
    Ok(format!("worst |I - g/3|/g = {worst:.1e}"))
}

fn ac4() -> Outcome {
    let mut msg = Vec::new();
    for (n, lo, hi) in [(3usize, 3.0, 6.0), (2, 1.5, 3.0)] {
        let o = ShootingOptions::default();
        let s = find_bound_state(cubic(n), n, 0, (lo, hi), &o).map_err(err)?.shoot_height;
        let atol = o.integrator.atol / 10.0;
        let rtol = o.integrator.rtol / 10.0;
        let s_oracle = oracle::ground_state_height(n, lo, hi, atol, rtol);
        let rel = (s - s_oracle).abs() / s_oracle;
        ensure(rel < 5e-7, || format!("N={n}: {s} vs oracle {s_oracle}"))?;
        msg.push(format!("N={n} s*={s:.9} (rel diff {rel:.1e})"));
    }
    Ok(msg.join(", "))
}

fn ac5() -> Outcome {
    let m = KirchhoffFunction::affine(1.0, 1.0).map_err(err)?;
    let mut worst_strong: f64 = 0.0;
    for v in family(3, cubic(3), 5)? {
        let res = solve_transfer(&v, &m, &TransferOptions::default()).map_err(err)?;
        let g = res.grad_norm_sq_v;
        let t_exact = (-g + (g * g + 4.0).sqrt()) / 2.0;
        ensure(res.roots.len() == 1, || format!("{} roots", res.roots.len()))?;
        let d = res.diagnostics[0];
        ensure(d.h_residual.abs() < 1e-10, || format!("h residual {:e}", d.h_residual))?;
        ensure((d.t - t_exact).abs() < 1e-10, || format!("t {} vs {t_exact}", d.t))?;
        let strong = d.strong_residual.unwrap_or(f64::NAN);
        ensure(strong < 1e-4, || format!("strong residual {strong:e}"))?;
        worst_strong = worst_strong.max(strong);
    }
    Ok(format!("5 roots certified, worst strong residual {worst_strong:.1e}"))
}

fn ac6() -> Outcome {
    let fam = family(3, cubic(3), 5)?;
    let base = KirchhoffFunction::power_m(1.0, 1.0, 2.0).map_err(err)?;
    let opts = TransferOptions { strong_residual: false, ..Default::default() };
    let mut checked = 0;
    for v in &fam {
        let g = v.grad_norm_sq().map_err(err)?;
        let q_star = 1.0 / (g * g);
        let factors: Vec<f64> = logspace(-2.0, 0.0, 25)
            .into_iter()
            .map(|x| 1.0 / (1.0 + x))
            .chain(logspace(-2.0, 0.0, 25).into_iter().map(|x| 1.0 + x))
            .collect();
        for k in factors {
            let q = k * q_star;
            let m = base.with_q(q).map_err(err)?;
            let res = solve_transfer(v, &m, &opts).map_err(err)?;
            if q * g * g >= 1.0 {
                ensure(res.roots.is_empty(), || format!("q g^2 = {} but roots {:?}", q * g * g, res.roots))?;
            } else {
                let t = (1.0 - q * g * g).sqrt();
                ensure(res.roots.len() == 1 && (res.roots[0] - t).abs() < 1e-10, || {
                    format!("q g^2 = {}: roots {:?} vs {t}", q * g * g, res.roots)
                })?;
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} (profile, q) pairs match the closed form"))
}

fn ac7() -> Outcome {
    let fam = family(3, cubic(3), 3)?;
    let lin = KirchhoffFunction::affine(1.0, 1.0).map_err(err)?;
    let q3 = q_threshold(&lin, &fam, 3).map_err(err)?.q_n;
    let q_grid: Vec<f64> = [1e-3, 0.1, 0.5, 0.9, 0.999].iter().map(|k| k * q3).collect();
    let table = multiplicity_sweep(&lin, &fam, &q_grid, &TransferOptions::default()).map_err(err)?;
    for row in &table.rows {
        ensure(row.n_found >= 3, || format!("q = {}: {} solutions ({})", row.q, row.n_found, row.diagnostics))?;
        let mut k = row.kt_grad.clone();
        k.sort_by(f64::total_cmp);
        ensure(k.windows(2).all(|w| (w[1] - w[0]) > DISTINCT_REL * w[1]), || "norms not distinct".into())?;
    }
    let t0 = 1.0 / 2f64.sqrt();
    for &q in &q_grid {
        let m = lin.with_q(q).map_err(err)?;
        for v in &fam {
            let h = transfer_map(v, &m, t0).map_err(err)?;
            ensure(h < 1.0, || format!("h(v, 1/sqrt 2) = {h} at q = {q}"))?;
        }
    }
    Ok(format!("q_3 = {q3:.6e}, >= 3 distinct solutions on {} q values below it", q_grid.len()))
}

fn ac8() -> Outcome {
    // N = 3, cubic: a root for every b
    let fam3 = family(3, cubic(3), 5)?;
    let b_grid = logspace(-3.0, 3.0, 13);
    let opts = TransferOptions { strong_residual: false, ..Default::default() };
    for &b in &b_grid {
        let m = KirchhoffFunction::affine(1.0, b).map_err(err)?;
        for v in &fam3 {
            let n = solve_transfer(v, &m, &opts).map_err(err)?.roots.len();
            ensure(n == 1, || format!("N=3, b={b}: {n} roots"))?;
        }
    }
    // N = 4 needs a subcritical f: the cubic is critical there
    let f4 = Arc::new(make_power_nonlinearity(1.0, 2.5, 4).map_err(err)?);
    let fam4 = family(4, f4, 5)?;
    let g4 = grads(&fam4)?;
    let b_grid4 = logspace(-5.0, 1.0, 241);
    let family_m = KirchhoffFunction::affine(1.0, 1.0).map_err(err)?;
    let table = multiplicity_sweep(&family_m, &fam4, &b_grid4, &opts).map_err(err)?;
    for (row, &b) in table.rows.iter().zip(&b_grid4) {
        let expected = g4.iter().filter(|&&g| b * g < 1.0).count();
        ensure(row.n_found == expected, || {
            format!("N=4, b={b}: {} solutions, closed form {expected} ({})", row.n_found, row.diagnostics)
        })?;
    }
    // per profile, the first b without a root sits within one grid step of 1/g
    for (v, &g) in fam4.iter().zip(&g4) {
        let mut first_none = None;
        for (i, &b) in b_grid4.iter().enumerate() {
            let m = family_m.with_q(b).map_err(err)?;
            if solve_transfer(v, &m, &opts).map_err(err)?.roots.is_empty() {
                first_none = Some(i);
                break;
            }
        }
        let closed = b_grid4.iter().position(|&b| b * g >= 1.0);
        let (Some(i), Some(j)) = (first_none, closed) else {
            return Err(format!("no crossover for g = {g}"));
        };
        ensure(i.abs_diff(j) <= 1, || format!("crossover for g = {g} at b = {} vs closed form {}", b_grid4[i], b_grid4[j]))?;
    }
    let last = table.rows.last().map(|r| r.n_found).unwrap_or(1);
    ensure(last == 0, || "count does not drop to 0".into())?;
    Ok(format!("N=3 roots for all 13 b; N=4 counts match b g < 1 on 241 b values (g = {:.3e}..{:.3e})", g4[0], g4[4]))
}

fn ac9() -> Outcome {
    let wanted = [
        ConditionId::EnvH1,
        ConditionId::EnvH2,
        ConditionId::EnvH3,
        ConditionId::EnvH5,
        ConditionId::EnvP1,
        ConditionId::EnvP3,
        ConditionId::EnvP5,
    ];
    let mut cases = 0;
    for (n, mu, p) in [(3usize, 1.0, 3.0), (2, 1.0, 3.0), (3, 2.0, 3.0)] {
        let f = Arc::new(make_power_nonlinearity(mu, p, n).map_err(err)?);
        let e = build_envelope(f.clone(), n, default_p0(n), uniform_grid(10.0, 9_999)).map_err(err)?;
        ensure(e.t.len() == 10_000, || "grid size".into())?;
        let reports = verify_envelope(&e, &f);
        for id in wanted {
            let r = reports.iter().find(|r| r.condition_id == id).ok_or("missing report")?;
            ensure(r.verdict == Verdict::Holds, || format!("N={n} mu={mu}: {id:?} {:?} {}", r.verdict, r.message))?;
        }
        let mut bad = e.clone();
        let k = bad.t.len() / 2;
        bad.hbar[k] = 0.5 * bad.h[k];
        let reports = verify_envelope(&bad, &f);
        let r = reports.iter().find(|r| r.condition_id == ConditionId::EnvH1).ok_or("missing report")?;
        ensure(r.verdict == Verdict::Fails, || "corrupted hbar not caught".into())?;
        cases += 1;
    }
    Ok(format!("7 items hold on {cases} envelopes of 10^4 points; corrupted hbar caught"))
}

fn ac10() -> Outcome {
    let fam = family(3, cubic(3), 3)?;
    let ms = [
        KirchhoffFunction::affine(1.0, 1.0).map_err(err)?,
        KirchhoffFunction::power_m(1.0, 0.5, 2.0).map_err(err)?,
    ];
    let mut worst: f64 = 0.0;
    for u in &fam {
        for m in &ms {
            for theta in [-1.0f64, 0.0, 1.0] {
                let phi = scaled_energy(theta, u, m).map_err(err)?;
                let w = u.rescaled((-theta).exp()).map_err(err)?;
                let j = energy_kt(&w, m).map_err(err)?;
                let tol = functional_report(&w, m).map_err(err)?.quadrature_tol;
                let rel = (phi - j).abs() / tol;
                ensure((phi - j).abs() < 10.0 * tol, || format!("theta={theta}: {phi} vs {j}, tol {tol:e}"))?;
                worst = worst.max(rel);
            }
            let exact = scaled_energy_derivative(0.0, u, m).map_err(err)?;
            let g = u.grad_norm_sq().map_err(err)?;
            let big_f = radial_integral(|t| u.nonlinearity.antideriv(t), u).map_err(err)?;
            let closed = 0.5 * m.eval(g) * g - 3.0 * big_f;
            ensure((exact - closed).abs() <= 1e-12 * closed.abs().max(1.0), || "closed form mismatch".into())?;
            let errs: Vec<f64> = [0.1, 0.05, 0.025]
                .iter()
                .map(|&h| {
                    let fd = (scaled_energy(h, u, m).unwrap() - scaled_energy(-h, u, m).unwrap()) / (2.0 * h);
                    (fd - closed).abs()
                })
                .collect();
            for w in errs.windows(2) {
                let ratio = w[0] / w[1];
                ensure((3.5..4.5).contains(&ratio), || format!("FD error ratio {ratio} ({errs:?})"))?;
            }
        }
    }
    Ok(format!("worst |Phi - J|/tol = {worst:.2}; FD errors shrink 4x per halving"))
}

fn ac11() -> Outcome {
    let p0 = default_p0(3);
    let e = Arc::new(build_envelope(cubic(3), 3, p0, uniform_grid(20.0, 20_000)).map_err(err)?);
    let fa = Arc::new(aux_problem_nonlinearity(e.clone(), 1.0).map_err(err)?);
    let u = family(3, fa, 1)?.remove(0);
    let k = energy_aux(&u, &e, 1.0).map_err(err)?;
    let norm = aux_norm_sq(&u, &e, 1.0).map_err(err)?;
    let bound = (0.5 - 1.0 / (p0 + 1.0)) * norm;
    ensure(k > 0.0 && k >= bound - 1e-6, || format!("K = {k}, bound {bound}"))?;
    Ok(format!("K = {k:.6}, (1/2 - 1/(p0+1))|u|^2 = {bound:.6}"))
}

fn main() {
    let criteria: [(&str, &str, fn() -> Outcome); 11] = [
        ("AC1", "scalar-field family v1..v5 via solve", ac1),
        ("AC2", "N=2 Pohozaev degeneration", ac2),
        ("AC3", "energy identity I = g/3", ac3),
        ("AC4", "shoot heights vs independent oracle", ac4),
        ("AC5", "transfer exactness for M = 1 + t", ac5),
        ("AC6", "nonexistence threshold for M = 1 + q t^2", ac6),
        ("AC7", "multiplicity below q_3", ac7),
        ("AC8", "dichotomy for M = 1 + b t", ac8),
        ("AC9", "envelope suite", ac9),
        ("AC10", "scaling identity and theta derivative", ac10),
        ("AC11", "auxiliary problem energy bound", ac11),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("{id} PASS {name}: {detail} [{secs:.2}s]"),
            Err(why) => {
                failed += 1;
                println!("{id} FAIL {name}: {why} [{secs:.2}s]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
