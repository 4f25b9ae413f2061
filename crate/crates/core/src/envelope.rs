//! Truncated envelopes `h`, `hbar` of a nonlinearity, their primitives, and
//! the auxiliary nonlinearity they induce.
//!
//! For `t >= 0`, `h(t) = max(omega t + f(t), 0)` and
//! `hbar(t) = t^p0 * max_{0 < s <= t} h(s)/s^p0`; both are extended oddly.
//! Primitives are cumulative trapezoid sums on the build grid.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::format::fmt17;
use crate::nonlinearity::{
    critical_exponent, ConditionId, ConditionReport, Nonlinearity, Verdict,
};
use crate::error::{FieldlabError, Result};

/// Sampled envelope. Fields are public so fixtures can perturb samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Envelope {
    pub base: Arc<Nonlinearity>,
    pub omega: f64,
    pub p0: f64,
    pub delta: f64,
    pub t: Vec<f64>,
    pub h: Vec<f64>,
    pub hbar: Vec<f64>,
    pub big_h: Vec<f64>,
    pub big_hbar: Vec<f64>,
    /// running max of `h(s)/s^p0` up to each grid point
    pub ratio: Vec<f64>,
}

/// Midpoint of the admissible exponent interval; 3 when `N = 2`.
pub fn default_p0(dimension: usize) -> f64 {
    if dimension <= 2 {
        3.0
    } else {
        0.5 * (1.0 + critical_exponent(dimension))
    }
}

/// `n + 1` equally spaced points on `[0, t_max]`.
pub fn uniform_grid(t_max: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| t_max * i as f64 / n as f64).collect()
}

/// Builds the envelope of `f` on `grid` (which must start at 0).
pub fn build_envelope(
    f: Arc<Nonlinearity>,
    dimension: usize,
    p0: f64,
    grid: Vec<f64>,
) -> Result<Envelope> {
    let crit = critical_exponent(dimension);
    if !(p0 > 1.0 && p0 < crit) {
        return Err(FieldlabError::InvalidParameter(format!(
            "p0 = {p0} outside (1, {crit}) for N = {dimension}"
        )));
    }
    if grid.len() < 2 || grid[0] != 0.0 {
        return Err(FieldlabError::InvalidParameter(
            "envelope grid must start at 0 and have at least two points".into(),
        ));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(FieldlabError::InvalidParameter(
            "envelope grid must be strictly increasing".into(),
        ));
    }
    let omega = f.omega;
    let lin = |t: f64| omega * t + f.eval(t);

    let n = grid.len();
    let mut h = vec![0.0; n];
    let mut hbar = vec![0.0; n];
    let mut ratio = vec![0.0; n];
    let mut running = 0.0_f64;
    for i in 1..n {
        let t = grid[i];
        h[i] = lin(t).max(0.0);
        let r = h[i] / t.powf(p0);
        if r >= running {
            running = r;
            hbar[i] = h[i];
        } else {
            hbar[i] = t.powf(p0) * running;
        }
        ratio[i] = running;
    }

    let mut big_h = vec![0.0; n];
    let mut big_hbar = vec![0.0; n];
    for i in 1..n {
        let dt = grid[i] - grid[i - 1];
        big_h[i] = big_h[i - 1] + 0.5 * dt * (h[i] + h[i - 1]);
        big_hbar[i] = big_hbar[i - 1] + 0.5 * dt * (hbar[i] + hbar[i - 1]);
    }

    let delta = match (1..n).find(|&i| lin(grid[i]) > 0.0) {
        Some(j) => {
            let (mut a, mut b) = (grid[j - 1], grid[j]);
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
            a
        }
        None => grid[n - 1],
    };

    Ok(Envelope {
        base: f,
        omega,
        p0,
        delta,
        t: grid,
        h,
        hbar,
        big_h,
        big_hbar,
        ratio,
    })
}

impl Envelope {
    /// Index `i` with `t[i] <= x < t[i+1]`, or the last index beyond the grid.
    fn cell(&self, x: f64) -> usize {
        match self.t.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => i,
            Err(i) => i - 1,
        }
    }

    fn last(&self) -> usize {
        self.t.len() - 1
    }

    pub fn h(&self, t: f64) -> f64 {
        let x = t.abs();
        t.signum() * (self.omega * x + self.base.eval(x)).max(0.0)
    }

    /// `hbar` with the running max held constant from the left between grid
    /// points, which keeps `hbar(t)/t^p0` monotone everywhere.
    pub fn hbar(&self, t: f64) -> f64 {
        let x = t.abs();
        if x == 0.0 {
            return 0.0;
        }
        let i = self.cell(x);
        let v = if self.t[i] == x {
            self.hbar[i]
        } else {
            x.powf(self.p0) * self.ratio[i]
        };
        t.signum() * v
    }

    /// Trapezoid-consistent primitive of `h` (exact integral of the
    /// piecewise-linear interpolant of the samples).
    pub fn big_h(&self, t: f64) -> f64 {
        let x = t.abs();
        let i = self.cell(x);
        if i == self.last() {
            let hx = self.h(x);
            return self.big_h[i] + 0.5 * (x - self.t[i]) * (self.h[i] + hx);
        }
        let w = (x - self.t[i]) / (self.t[i + 1] - self.t[i]);
        let hx = self.h[i] + w * (self.h[i + 1] - self.h[i]);
        self.big_h[i] + 0.5 * (x - self.t[i]) * (self.h[i] + hx)
    }

    pub fn big_hbar(&self, t: f64) -> f64 {
        self.hbar_interp_integral(t)
    }

    /// Piecewise-linear interpolant of the `hbar` samples; beyond the grid the
    /// last ratio is held, `hbar(t) = ratio_last * t^p0`.
    pub fn hbar_interp(&self, t: f64) -> f64 {
        let x = t.abs();
        let i = self.cell(x);
        let v = if i == self.last() {
            if x == self.t[i] {
                self.hbar[i]
            } else {
                self.ratio[i] * x.powf(self.p0)
            }
        } else {
            let w = (x - self.t[i]) / (self.t[i + 1] - self.t[i]);
            self.hbar[i] + w * (self.hbar[i + 1] - self.hbar[i])
        };
        t.signum() * v
    }

    /// Exact primitive of [`Envelope::hbar_interp`]; coincides with the
    /// trapezoid sums at grid points.
    pub fn hbar_interp_integral(&self, t: f64) -> f64 {
        let x = t.abs();
        let i = self.cell(x);
        if i == self.last() {
            let q = self.p0 + 1.0;
            return self.big_hbar[i] + self.ratio[i] * (x.powf(q) - self.t[i].powf(q)) / q;
        }
        let hx = self.hbar_interp(x);
        self.big_hbar[i] + 0.5 * (x - self.t[i]) * (self.hbar[i] + hx)
    }

    /// Writes `t,h,hbar,H,Hbar` rows at 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,h,hbar,H,Hbar")?;
        for i in 0..self.t.len() {
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt17(self.t[i]),
                fmt17(self.h[i]),
                fmt17(self.hbar[i]),
                fmt17(self.big_h[i]),
                fmt17(self.big_hbar[i])
            )?;
        }
        Ok(())
    }

    /// Cumulative trapezoid error estimates for `H` and `Hbar` at each point.
    fn quadrature_slack(&self, samples: &[f64]) -> Vec<f64> {
        let n = self.t.len();
        let mut out = vec![0.0; n];
        let slope = |j: usize| (samples[j] - samples[j - 1]) / (self.t[j] - self.t[j - 1]);
        for j in 1..n {
            let dt = self.t[j] - self.t[j - 1];
            let curvature = if j + 1 < n {
                (slope(j + 1) - slope(j)).abs()
            } else if j >= 2 {
                (slope(j) - slope(j - 1)).abs()
            } else {
                0.0
            };
            out[j] = out[j - 1] + 2.0 * dt * dt * curvature / 12.0;
        }
        for (o, s) in out.iter_mut().zip(samples) {
            *o += 1e-13 * s.abs().max(1.0);
        }
        out
    }
}

fn rel_tol(x: f64) -> f64 {
    1e-12 * x.abs().max(1.0)
}

/// Builds a report from the first violating grid point, if any.
fn pointwise(
    id: ConditionId,
    e: &Envelope,
    holds_msg: &str,
    mut violation: impl FnMut(usize) -> Option<f64>,
) -> ConditionReport {
    for i in 0..e.t.len() {
        if let Some(v) = violation(i) {
            return ConditionReport::new(
                id,
                Verdict::Fails,
                vec![(e.t[i], v)],
                format!("violated at t = {}", e.t[i]),
            );
        }
    }
    ConditionReport::new(id, Verdict::Holds, vec![], holds_msg.to_string())
}

/// Checks the pointwise envelope properties at every grid point.
pub fn verify_envelope(e: &Envelope, f: &Nonlinearity) -> Vec<ConditionReport> {
    let w = e.omega;
    let p0 = e.p0;
    let mut out = Vec::with_capacity(10);

    out.push(pointwise(ConditionId::EnvH1, e, "omega t + f(t) <= h <= hbar", |i| {
        let t = e.t[i];
        let lin = w * t + f.eval(t);
        if lin > e.h[i] + rel_tol(lin) {
            Some(lin - e.h[i])
        } else if e.h[i] > e.hbar[i] + rel_tol(e.h[i]) {
            Some(e.h[i] - e.hbar[i])
        } else {
            None
        }
    }));
    out.push(pointwise(ConditionId::EnvH2, e, "h, hbar >= 0", |i| {
        (e.h[i] < 0.0 || e.hbar[i] < 0.0).then(|| e.h[i].min(e.hbar[i]))
    }));
    out.push(if e.delta > 0.0 {
        let mut r = pointwise(ConditionId::EnvH3, e, "", |i| {
            (e.t[i] <= e.delta && (e.h[i] != 0.0 || e.hbar[i] != 0.0)).then(|| e.h[i].max(e.hbar[i]))
        });
        if r.verdict == Verdict::Holds {
            r.evidence = vec![(e.delta, 0.0)];
            r.message = format!("h = hbar = 0 on [0, delta], delta = {:.15}", e.delta);
        }
        r
    } else {
        ConditionReport::new(ConditionId::EnvH3, Verdict::Fails, vec![(0.0, e.delta)], "no dead zone found")
    });
    out.push(match (0..e.t.len()).find(|&i| e.h[i] > 0.0) {
        Some(i) => ConditionReport::new(ConditionId::EnvH4, Verdict::Holds, vec![(e.t[i], e.h[i])], format!("witness xi = {}", e.t[i])),
        None => ConditionReport::new(ConditionId::EnvH4, Verdict::Inconclusive, vec![], "no grid point with h > 0"),
    });
    let mut prev = 0.0_f64;
    out.push(pointwise(ConditionId::EnvH5, e, "hbar(t)/t^p0 nondecreasing", |i| {
        if i == 0 {
            return None;
        }
        let r = e.hbar[i] / e.t[i].powf(p0);
        let bad = r < prev - rel_tol(prev);
        let gap = prev - r;
        prev = prev.max(r);
        bad.then_some(gap)
    }));

    let slack_h = e.quadrature_slack(&e.h);
    let slack_hbar = e.quadrature_slack(&e.hbar);
    out.push(pointwise(ConditionId::EnvP1, e, "omega t^2/2 + F(t) <= H <= Hbar", |i| {
        let t = e.t[i];
        let lower = 0.5 * w * t * t + f.antideriv(t);
        if lower > e.big_h[i] + slack_h[i] + rel_tol(lower) {
            Some(lower - e.big_h[i])
        } else if e.big_h[i] > e.big_hbar[i] + rel_tol(e.big_hbar[i]) {
            Some(e.big_h[i] - e.big_hbar[i])
        } else {
            None
        }
    }));
    out.push(pointwise(ConditionId::EnvP2, e, "H, Hbar >= 0", |i| {
        (e.big_h[i] < 0.0 || e.big_hbar[i] < 0.0).then(|| e.big_h[i].min(e.big_hbar[i]))
    }));
    out.push(pointwise(ConditionId::EnvP3, e, "H = Hbar = 0 on [0, delta]", |i| {
        (e.t[i] <= e.delta && (e.big_h[i] != 0.0 || e.big_hbar[i] != 0.0))
            .then(|| e.big_h[i].max(e.big_hbar[i]))
    }));
    let zeta = f.zeta;
    let margin = e.big_hbar(zeta) - 0.5 * w * zeta * zeta;
    out.push(if margin > 0.0 {
        ConditionReport::new(ConditionId::EnvP4, Verdict::Holds, vec![(zeta, margin)], format!("Hbar(zeta) - omega zeta^2/2 = {margin:.6e}"))
    } else {
        ConditionReport::new(ConditionId::EnvP4, Verdict::Fails, vec![(zeta, margin)], "Hbar(zeta) <= omega zeta^2/2")
    });
    out.push(pointwise(ConditionId::EnvP5, e, "0 <= (p0+1) Hbar <= t hbar", |i| {
        let lhs = (p0 + 1.0) * e.big_hbar[i];
        let rhs = e.t[i] * e.hbar[i];
        if lhs < 0.0 {
            Some(lhs)
        } else if lhs > rhs + (p0 + 1.0) * slack_hbar[i] + rel_tol(rhs) {
            Some(lhs - rhs)
        } else {
            None
        }
    }));
    out
}

/// Nonlinearity of the auxiliary problem `-m0 Δu + omega u = hbar(u)`,
/// rewritten as `-Δu = (hbar(u) - omega u)/m0`.
pub fn aux_problem_nonlinearity(e: Arc<Envelope>, m0: f64) -> Result<Nonlinearity> {
    if !(m0 > 0.0) {
        return Err(FieldlabError::InvalidParameter(format!("m0 must be positive, got {m0}")));
    }
    let zeta = e.base.zeta;
    Ok(Nonlinearity::aux_derived(e, m0, zeta))
}
