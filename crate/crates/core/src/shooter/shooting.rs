use std::sync::Arc;

use log::{debug, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::integrator::{integrate_ivp, Classification, IntegratorOptions, Trajectory};
use super::profile::{RadialProfile, TailModel};
use crate::error::{FieldlabError, Result};
use crate::nonlinearity::Nonlinearity;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShootingOptions {
    pub integrator: IntegratorOptions,
    /// Absolute bracket width at which bisection stops.
    pub bisection_tol: f64,
    pub max_iterations: usize,
    /// The profile is truncated where `|v|` falls below this fraction of its
    /// last extremum; the analytic tail takes over from there.
    pub tail_rel: f64,
    pub family_cap: usize,
    /// Multiplicative step of the upward scan in `s`.
    pub scan_factor: f64,
    /// Upper end of the scan.
    pub scan_max: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            integrator: IntegratorOptions::default(),
            bisection_tol: 1e-13,
            max_iterations: 200,
            tail_rel: 1e-3,
            family_cap: 8,
            scan_factor: 1.05,
            scan_max: 1e4,
        }
    }
}

/// Node-indexed bound states `v_1, v_2, ...` (node counts `0, 1, ...`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyResult {
    pub profiles: Vec<RadialProfile>,
    pub warnings: Vec<String>,
}

/// Smallest `t > 0` with `omega t + f(t) > 0`, to within `1e-12`.
pub fn dead_zone(f: &Nonlinearity) -> Result<f64> {
    let lin = |t: f64| f.omega * t + f.eval(t);
    let mut prev = 0.0;
    let mut t = 1e-8;
    while t <= 1e8 {
        if lin(t) > 0.0 {
            let (mut a, mut b) = (prev, t);
            while b - a > 1e-12 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if lin(mid) > 0.0 {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            return Ok(a);
        }
        prev = t;
        t *= 1.1;
    }
    Err(FieldlabError::Numerical("omega t + f(t) never turns positive on (0, 1e8]".into()))
}

fn shoot(f: &Nonlinearity, dimension: usize, s: f64, nodes: usize, opts: &ShootingOptions) -> Result<Trajectory> {
    let io = IntegratorOptions { max_crossings: Some(nodes), ..opts.integrator };
    integrate_ivp(f, dimension, s, &io)
}

/// Whether the trajectory overshoots a bound state with `nodes` zeros.
/// Runs that reach the maximal radius unresolved are decided by whether `v`
/// is still heading towards zero.
fn overshoots(t: &Trajectory, nodes: usize) -> bool {
    let k = t.crossings();
    if k != nodes {
        return k > nodes;
    }
    match t.classification {
        Classification::Trapped(_) => false,
        _ => {
            let (v, dv) = (*t.values.last().unwrap(), *t.derivs.last().unwrap());
            v * dv < 0.0
        }
    }
}

/// Bisection on the shoot height between an undershooting end (exactly
/// `nodes` zeros) and an overshooting end (more than `nodes`).
pub fn find_bound_state(
    f: Arc<Nonlinearity>,
    dimension: usize,
    nodes: usize,
    bracket: (f64, f64),
    opts: &ShootingOptions,
) -> Result<RadialProfile> {
    if !(opts.bisection_tol > 0.0) {
        return Err(FieldlabError::InvalidParameter("bisection tolerance must be positive".into()));
    }
    let (a, b) = bracket;
    if !(a.is_finite() && b.is_finite()) || a == b || a.signum() != b.signum() {
        return Err(FieldlabError::InvalidBracket(format!(
            "({a}, {b}) must be two distinct nonzero heights of the same sign"
        )));
    }
    let ta = shoot(&f, dimension, a, nodes, opts)?;
    let tb = shoot(&f, dimension, b, nodes, opts)?;
    let (oa, ob) = (overshoots(&ta, nodes), overshoots(&tb, nodes));
    let valid_under = |t: &Trajectory, o: bool| !o && t.crossings() == nodes;
    let (mut under, mut over) = match (oa, ob) {
        (false, true) if valid_under(&ta, oa) => (a, b),
        (true, false) if valid_under(&tb, ob) => (b, a),
        _ => {
            return Err(FieldlabError::InvalidBracket(format!(
                "need one end with exactly {nodes} zero crossings and one overshooting end; \
                 s = {a} gives {:?}, s = {b} gives {:?}",
                ta.classification, tb.classification
            )))
        }
    };

    let mut iterations = 0;
    while (over - under).abs() >= opts.bisection_tol {
        if iterations >= opts.max_iterations {
            return Err(FieldlabError::BisectionExhausted {
                iterations,
                lo: under.min(over),
                hi: under.max(over),
            });
        }
        iterations += 1;
        let mid = 0.5 * (under + over);
        if mid == under || mid == over {
            break;
        }
        if overshoots(&shoot(&f, dimension, mid, nodes, opts)?, nodes) {
            over = mid;
        } else {
            under = mid;
        }
    }
    let s = 0.5 * (under + over);
    debug!("bisection for {nodes} nodes converged to s = {s} after {iterations} iterations");
    let traj = shoot(&f, dimension, s, nodes, opts)?;
    let mut profile = truncate_with_tail(&f, traj, nodes, opts.tail_rel)?;
    if profile.node_count != nodes {
        return Err(FieldlabError::Invariant(format!(
            "profile at s = {s} has {} nodes, expected {nodes}",
            profile.node_count
        )));
    }
    profile.integrator = Some(opts.integrator);
    Ok(profile)
}

/// Cuts the trajectory inside the final monotone decay and attaches the
/// exponential tail there.
fn truncate_with_tail(f: &Arc<Nonlinearity>, t: Trajectory, nodes: usize, tail_rel: f64) -> Result<RadialProfile> {
    if t.crossing_radii.len() < nodes {
        return Err(FieldlabError::Invariant(format!(
            "trajectory at s = {} has {} zero crossings, expected {nodes}",
            t.shoot_height,
            t.crossing_radii.len()
        )));
    }
    // search between the last wanted zero and an overshooting one, if any
    let start = match nodes {
        0 => 0,
        k => t.radii.partition_point(|&r| r < t.crossing_radii[k - 1]),
    };
    let n = match t.crossing_radii.get(nodes) {
        Some(&rc) => t.radii.partition_point(|&r| r < rc),
        None => t.values.len(),
    };
    // point of smallest |v| after the last crossing, then the extremum before it
    let i_min = (start..n)
        .min_by(|&i, &j| t.values[i].abs().total_cmp(&t.values[j].abs()))
        .ok_or_else(|| FieldlabError::Numerical("empty trajectory".into()))?;
    let mut i_ext = i_min;
    while i_ext > start && t.values[i_ext - 1].abs() >= t.values[i_ext].abs() {
        i_ext -= 1;
    }
    if i_ext == start && start > 0 {
        return Err(FieldlabError::Numerical("no extremum after the last zero crossing".into()));
    }
    let threshold = tail_rel * t.values[i_ext].abs();
    let cut = (i_ext..=i_min)
        .rev()
        .find(|&i| t.values[i].abs() >= threshold)
        .unwrap_or(i_ext);
    if cut < 2 || t.values[cut] == 0.0 {
        return Err(FieldlabError::Numerical(format!(
            "decay region too short to match a tail (cut index {cut})"
        )));
    }
    let rc = t.radii[cut];
    let kappa = f.decay_rate();
    if !(kappa > 0.0) {
        return Err(FieldlabError::InvalidParameter("omega must be positive for an exponential tail".into()));
    }
    let tail = TailModel::matched(t.dimension, kappa, rc, t.values[cut]);
    let shoot_height = t.shoot_height;
    let mut p = RadialProfile::from_samples(
        t.dimension,
        t.radii[..=cut].to_vec(),
        t.values[..=cut].to_vec(),
        t.derivs[..=cut].to_vec(),
        Some(tail),
        f.clone(),
    )?;
    p.shoot_height = shoot_height;
    Ok(p)
}

fn crossing_count(f: &Nonlinearity, dimension: usize, s: f64, cap: usize, opts: &ShootingOptions) -> Result<usize> {
    let t = shoot(f, dimension, s, cap, opts)?;
    let k = t.crossings();
    Ok(if overshoots(&t, k) { k + 1 } else { k }.min(cap + 1))
}

/// Scans `s` upward from the dead zone in multiplicative steps, isolates one
/// bracket per node count, and bisects the brackets concurrently.
pub fn solution_family(
    f: Arc<Nonlinearity>,
    dimension: usize,
    n_max: usize,
    opts: &ShootingOptions,
) -> Result<FamilyResult> {
    if n_max == 0 || n_max > opts.family_cap {
        return Err(FieldlabError::InvalidParameter(format!(
            "n_max must lie in 1..={}, got {n_max}",
            opts.family_cap
        )));
    }
    if !(opts.scan_factor > 1.0) {
        return Err(FieldlabError::InvalidParameter("scan factor must exceed 1".into()));
    }
    let cap = n_max - 1;
    let delta = dead_zone(&f)?;
    let mut s_prev = delta.max(1e-8);
    let mut c_prev = crossing_count(&f, dimension, s_prev, cap, opts)?;
    // brackets[n] = (under, over) for n nodes
    let mut brackets: Vec<Option<(f64, f64)>> = vec![None; n_max];
    let mut warnings = Vec::new();

    const CHUNK: usize = 16;
    'scan: while c_prev <= cap && s_prev < opts.scan_max {
        let heights: Vec<f64> = (1..=CHUNK as i32).map(|k| s_prev * opts.scan_factor.powi(k)).collect();
        let counts: Vec<Result<usize>> = heights
            .par_iter()
            .map(|&s| crossing_count(&f, dimension, s, cap, opts))
            .collect();
        for (s, c) in heights.into_iter().zip(counts) {
            let c = c?;
            if c > c_prev {
                split(&f, dimension, cap, opts, (s_prev, c_prev), (s, c), &mut brackets)?;
            } else if c < c_prev {
                warnings.push(format!("crossing count dropped from {c_prev} to {c} at s = {s}"));
            }
            s_prev = s;
            c_prev = c_prev.max(c);
            if c_prev > cap || s_prev >= opts.scan_max {
                break 'scan;
            }
        }
    }

    let found: Vec<(usize, (f64, f64))> = brackets
        .iter()
        .enumerate()
        .map_while(|(n, b)| b.map(|b| (n, b)))
        .collect();
    if found.len() < n_max {
        let msg = format!(
            "scan up to s = {s_prev} located {} of {n_max} brackets; returning a partial family",
            found.len()
        );
        warn!("{msg}");
        warnings.push(msg);
    }
    let profiles: Vec<RadialProfile> = found
        .par_iter()
        .map(|&(n, b)| find_bound_state(f.clone(), dimension, n, b, opts))
        .collect::<Result<_>>()?;

    for (n, w) in profiles.windows(2).enumerate() {
        let (g0, g1) = (w[0].grad_norm_sq()?, w[1].grad_norm_sq()?);
        if !(g1 > g0) {
            let msg = format!(
                "gradient norms not strictly increasing: |grad v_{}|^2 = {g0} >= |grad v_{}|^2 = {g1}",
                n + 1,
                n + 2
            );
            warn!("{msg}");
            warnings.push(msg);
        }
    }
    Ok(FamilyResult { profiles, warnings })
}

/// Refines `(lo, hi)` until every count jump is by exactly one, recording
/// `(under, over)` brackets.
fn split(
    f: &Nonlinearity,
    dimension: usize,
    cap: usize,
    opts: &ShootingOptions,
    lo: (f64, usize),
    hi: (f64, usize),
    brackets: &mut [Option<(f64, f64)>],
) -> Result<()> {
    if hi.1 <= lo.1 {
        return Ok(());
    }
    if hi.1 == lo.1 + 1 {
        if lo.1 <= cap && brackets[lo.1].is_none() {
            brackets[lo.1] = Some((lo.0, hi.0));
        }
        return Ok(());
    }
    let mid = 0.5 * (lo.0 + hi.0);
    if mid == lo.0 || mid == hi.0 || (hi.0 - lo.0) < opts.bisection_tol {
        return Err(FieldlabError::Numerical(format!(
            "could not separate crossing counts {} and {} between s = {} and {}",
            lo.1, hi.1, lo.0, hi.0
        )));
    }
    let c = crossing_count(f, dimension, mid, cap, opts)?;
    let c = c.clamp(lo.1, hi.1);
    split(f, dimension, cap, opts, lo, (mid, c), brackets)?;
    split(f, dimension, cap, opts, (mid, c), hi, brackets)
}
