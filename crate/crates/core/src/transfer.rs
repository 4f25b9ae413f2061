//! Rescaling scalar-field solutions into Kirchhoff solutions.
//!
//! A scalar-field solution `v` gives the Kirchhoff solution `u = v(t ·)`
//! exactly when `h(v, t) = M(t^{2-N} |grad v|^2) t^2 = 1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FieldlabError, Result};
use crate::functionals;
use crate::nonlinearity::KirchhoffFunction;
use crate::shooter::RadialProfile;

/// `h(v, t) = M(t^{2-N} g) t^2`.
pub fn transfer_map(v: &RadialProfile, m: &KirchhoffFunction, t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(FieldlabError::InvalidParameter(format!("t must be positive, got {t}")));
    }
    let g = v.grad_norm_sq()?;
    Ok(h_of(m, v.dimension, g, t))
}

fn h_of(m: &KirchhoffFunction, dimension: usize, g: f64, t: f64) -> f64 {
    m.eval(t.powf(2.0 - dimension as f64) * g) * t * t
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransferOptions {
    pub t_min: f64,
    pub t_max: f64,
    /// Logarithmic panels of the root scan.
    pub panels: usize,
    /// Compute the strong-form residual of every transferred profile.
    pub strong_residual: bool,
}

impl Default for TransferOptions {
    fn default() -> Self {
        Self { t_min: 1e-6, t_max: 1e6, panels: 200, strong_residual: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootDiagnostics {
    pub t: f64,
    pub h_residual: f64,
    pub strong_residual: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransferResult {
    pub source_nodes: usize,
    pub source_shoot_height: f64,
    pub grad_norm_sq_v: f64,
    pub roots: Vec<f64>,
    #[serde(skip)]
    pub profiles: Vec<RadialProfile>,
    pub kirchhoff_grad_norms: Vec<f64>,
    pub diagnostics: Vec<RootDiagnostics>,
}

/// `u(·) = v(t ·)` with exactly transformed norms and tail.
pub fn build_kt_solution(v: &RadialProfile, t: f64) -> Result<RadialProfile> {
    v.rescaled(t)
}

fn bisect_root(phi: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = phi(a);
    loop {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = phi(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    if phi(a).abs() <= phi(b).abs() {
        a
    } else {
        b
    }
}

const EXTEND_DECADES: usize = 290;

/// All roots of `h(v, ·) = 1`: closed form for `N = 2`, otherwise a
/// logarithmic scan followed by bisection on every sign change, extended by
/// decades past either end when the end values point to a root outside. An empty
/// root list means no Kirchhoff solution arises from `v`.
pub fn solve_transfer(v: &RadialProfile, m: &KirchhoffFunction, opts: &TransferOptions) -> Result<TransferResult> {
    let g = v.grad_norm_sq()?;
    let n = v.dimension;
    let check_m1 = |x: f64| -> Result<()> {
        let mx = m.eval(x);
        if !(mx > 0.0) || !mx.is_finite() {
            return Err(FieldlabError::ConditionViolated {
                condition: "M1",
                message: format!("M({x}) = {mx} is not positive"),
            });
        }
        Ok(())
    };
    let mut roots = Vec::new();
    if n == 2 {
        check_m1(g)?;
        roots.push(1.0 / m.eval(g).sqrt());
    } else {
        if !(opts.t_min > 0.0 && opts.t_max > opts.t_min && opts.panels >= 1) {
            return Err(FieldlabError::InvalidParameter("transfer scan range must satisfy 0 < t_min < t_max".into()));
        }
        let phi = |t: f64| h_of(m, n, g, t) - 1.0;
        let ratio = (opts.t_max / opts.t_min).ln() / opts.panels as f64;
        let grid: Vec<f64> = (0..=opts.panels)
            .map(|i| if i == opts.panels { opts.t_max } else { opts.t_min * (ratio * i as f64).exp() })
            .collect();
        for &t in &grid {
            check_m1(t.powf(2.0 - n as f64) * g)?;
        }
        let vals: Vec<f64> = grid.iter().map(|&t| phi(t)).collect();
        for i in 0..opts.panels {
            let (a, b) = (vals[i], vals[i + 1]);
            if a == 0.0 {
                roots.push(grid[i]);
            } else if b != 0.0 && (a < 0.0) != (b < 0.0) {
                roots.push(bisect_root(phi, grid[i], grid[i + 1]));
            }
        }
        if vals[opts.panels] == 0.0 {
            roots.push(grid[opts.panels]);
        }
        // h < 1 at t_max or h > 1 at t_min: a root lies outside the range,
        // so keep stepping by decades until the sign flips
        let extend = |mut t: f64, mut val: f64, factor: f64| -> Result<Option<f64>> {
            for _ in 0..EXTEND_DECADES {
                let next = t * factor;
                let v = phi(next);
                if !v.is_finite() {
                    break;
                }
                check_m1(next.powf(2.0 - n as f64) * g)?;
                if v == 0.0 {
                    return Ok(Some(next));
                }
                if (v < 0.0) != (val < 0.0) {
                    let (a, b) = if factor < 1.0 { (next, t) } else { (t, next) };
                    return Ok(Some(bisect_root(phi, a, b)));
                }
                t = next;
                val = v;
            }
            Ok(None)
        };
        if vals[0] > 0.0 {
            if let Some(r) = extend(grid[0], vals[0], 0.1)? {
                roots.insert(0, r);
            }
        }
        if vals[opts.panels] < 0.0 {
            if let Some(r) = extend(grid[opts.panels], vals[opts.panels], 10.0)? {
                roots.push(r);
            }
        }
    }

    let mut profiles = Vec::with_capacity(roots.len());
    let mut diagnostics = Vec::with_capacity(roots.len());
    let mut kt = Vec::with_capacity(roots.len());
    for &t in &roots {
        let u = build_kt_solution(v, t)?;
        let strong = if opts.strong_residual {
            Some(functionals::strong_residual(&u, m, &v.nonlinearity)?)
        } else {
            None
        };
        diagnostics.push(RootDiagnostics { t, h_residual: h_of(m, n, g, t) - 1.0, strong_residual: strong });
        kt.push(t.powf(2.0 - n as f64) * g);
        profiles.push(u);
    }
    Ok(TransferResult {
        source_nodes: v.node_count,
        source_shoot_height: v.shoot_height,
        grad_norm_sq_v: g,
        roots,
        profiles,
        kirchhoff_grad_norms: kt,
        diagnostics,
    })
}

/// Inputs and value of the threshold `q_n` for `M = m0 + q lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub n: usize,
    pub q_n: f64,
    pub g_values: Vec<f64>,
    pub formula_inputs: ThresholdInputs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdInputs {
    pub m0: f64,
    pub dimension: usize,
    pub lambda_arguments: Vec<f64>,
    pub lambda_values: Vec<f64>,
}

/// `q_n = m0 / (1 + max_{i <= n} lambda((2 m0)^{(N-2)/2} g_i))`.
pub fn q_threshold(family: &KirchhoffFunction, profiles: &[RadialProfile], n: usize) -> Result<ThresholdReport> {
    let d = family
        .decomposition()
        .ok_or_else(|| FieldlabError::InvalidParameter("M has no m0 + q lambda decomposition".into()))?;
    if n == 0 || n > profiles.len() {
        return Err(FieldlabError::InvalidParameter(format!(
            "need 1 <= n <= {} profiles, got n = {n}",
            profiles.len()
        )));
    }
    let dimension = profiles[0].dimension;
    if dimension < 3 {
        return Err(FieldlabError::InvalidParameter("the threshold q_n needs N >= 3".into()));
    }
    let c = (2.0 * d.m0).powf(0.5 * (dimension as f64 - 2.0));
    let g_values = profiles[..n].iter().map(|p| p.grad_norm_sq()).collect::<Result<Vec<_>>>()?;
    let lambda_arguments: Vec<f64> = g_values.iter().map(|g| c * g).collect();
    let lambda_values: Vec<f64> = lambda_arguments.iter().map(|&x| d.lambda(x)).collect();
    let max = lambda_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(ThresholdReport {
        n,
        q_n: d.m0 / (1.0 + max),
        g_values,
        formula_inputs: ThresholdInputs { m0: d.m0, dimension, lambda_arguments, lambda_values },
    })
}

/// Relative separation below which two Kirchhoff gradient norms are treated
/// as the same solution.
pub const DISTINCT_REL: f64 = 1e-6;

/// Number of pairwise-distinct values (relative separation `> DISTINCT_REL`).
pub fn count_distinct(values: &[f64]) -> usize {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mut count = 0;
    let mut last: Option<f64> = None;
    for x in v {
        match last {
            Some(l) if (x - l).abs() <= DISTINCT_REL * x.abs().max(l.abs()) => {}
            _ => {
                count += 1;
                last = Some(x);
            }
        }
    }
    count
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub q: f64,
    pub n_found: usize,
    pub t: Vec<f64>,
    pub kt_grad: Vec<f64>,
    pub energies: Vec<f64>,
    pub diagnostics: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityTable {
    pub family: serde_json::Value,
    pub rows: Vec<SweepRow>,
    /// `q_n` for `n = 1..=profiles` when defined.
    pub thresholds: Vec<ThresholdReport>,
}

fn sweep_row(family: &KirchhoffFunction, profiles: &[RadialProfile], q: f64, opts: &TransferOptions) -> SweepRow {
    let run = || -> Result<SweepRow> {
        let m = family.with_q(q)?;
        let mut t = Vec::new();
        let mut kt_grad = Vec::new();
        let mut energies = Vec::new();
        let mut flags = Vec::new();
        for (i, v) in profiles.iter().enumerate() {
            let res = solve_transfer(v, &m, opts)?;
            for (k, u) in res.profiles.iter().enumerate() {
                let d = res.diagnostics[k];
                if d.h_residual.abs() >= 1e-10 {
                    flags.push(format!("v{}:h_residual={:e}", i + 1, d.h_residual));
                }
                t.push(res.roots[k]);
                kt_grad.push(res.kirchhoff_grad_norms[k]);
                energies.push(functionals::energy_kt(u, &m)?);
            }
            if res.roots.is_empty() {
                flags.push(format!("v{}:no_root", i + 1));
            }
        }
        Ok(SweepRow { q, n_found: count_distinct(&kt_grad), t, kt_grad, energies, diagnostics: flags.join(";") })
    };
    run().unwrap_or_else(|e| SweepRow {
        q,
        n_found: 0,
        t: Vec::new(),
        kt_grad: Vec::new(),
        energies: Vec::new(),
        diagnostics: format!("error: {e}"),
    })
}

/// Transfers every profile for each `q` of the grid (in parallel over `q`).
pub fn multiplicity_sweep(
    family: &KirchhoffFunction,
    profiles: &[RadialProfile],
    q_grid: &[f64],
    opts: &TransferOptions,
) -> Result<MultiplicityTable> {
    if q_grid.windows(2).any(|w| !(w[1] > w[0])) || q_grid.iter().any(|q| !(*q > 0.0)) {
        return Err(FieldlabError::InvalidParameter("q grid must be positive and strictly increasing".into()));
    }
    let rows: Vec<SweepRow> = q_grid.par_iter().map(|&q| sweep_row(family, profiles, q, opts)).collect();
    let thresholds = if profiles.first().is_some_and(|p| p.dimension >= 3) {
        (1..=profiles.len())
            .map(|n| q_threshold(family, profiles, n))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    Ok(MultiplicityTable { family: family.descriptor(), rows, thresholds })
}
