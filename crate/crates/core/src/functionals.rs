//! Radial quadrature of the energies and identities on sampled profiles.
//!
//! Integrals over `R^N` reduce to `|S^{N-1}| int_0^inf g(u(r)) r^{N-1} dr`;
//! the sampled part uses composite Simpson on the (nonuniform) integrator
//! grid and the tail part integrates the analytic tail model numerically.

use serde::{Deserialize, Serialize};

use crate::envelope::Envelope;
use crate::error::{FieldlabError, Result};
use crate::nonlinearity::{KirchhoffFunction, Nonlinearity};
use crate::shooter::{RadialProfile, TailModel};

/// `|S^{N-1}| = 2 pi^{N/2} / Gamma(N/2)`.
pub fn surface_area(dimension: usize) -> f64 {
    use std::f64::consts::PI;
    let n = dimension as f64;
    // Gamma(N/2) for integer N
    let gamma = if dimension % 2 == 0 {
        (1..dimension / 2).map(|k| k as f64).product::<f64>()
    } else {
        let k = (dimension - 1) / 2;
        (0..k).map(|j| j as f64 + 0.5).product::<f64>() * PI.sqrt()
    };
    2.0 * PI.powf(0.5 * n) / gamma
}

/// Composite Simpson weights on an arbitrary strictly increasing grid; an odd
/// trailing interval gets the three-point end correction.
pub fn simpson_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    if n < 2 {
        return w;
    }
    if n == 2 {
        let h = x[1] - x[0];
        return vec![0.5 * h, 0.5 * h];
    }
    let intervals = n - 1;
    let paired = intervals - intervals % 2;
    let mut i = 0;
    while i + 2 <= paired {
        let h0 = x[i + 1] - x[i];
        let h1 = x[i + 2] - x[i + 1];
        let hs = h0 + h1;
        w[i] += hs / 6.0 * (2.0 - h1 / h0);
        w[i + 1] += hs * hs * hs / (6.0 * h0 * h1);
        w[i + 2] += hs / 6.0 * (2.0 - h0 / h1);
        i += 2;
    }
    if intervals % 2 == 1 {
        let h1 = x[n - 1] - x[n - 2];
        let h0 = x[n - 2] - x[n - 3];
        w[n - 1] += (2.0 * h1 * h1 + 3.0 * h1 * h0) / (6.0 * (h0 + h1));
        w[n - 2] += (h1 * h1 + 3.0 * h1 * h0) / (6.0 * h0);
        w[n - 3] -= h1 * h1 * h1 / (6.0 * h0 * (h0 + h1));
    }
    w
}

/// Simpson integral of samples `y` over grid `x`.
pub fn simpson(x: &[f64], y: &[f64]) -> f64 {
    simpson_weights(x).iter().zip(y).map(|(w, y)| w * y).sum()
}

const TAIL_SPAN: f64 = 60.0;
const TAIL_INTERVALS: usize = 2000;

fn tail_integral(tail: &TailModel, dimension: usize, g: &dyn Fn(f64, f64, f64) -> f64, n: usize) -> f64 {
    let r0 = tail.match_radius;
    let span = TAIL_SPAN / tail.decay_rate;
    let h = span / n as f64;
    let p = dimension as f64 - 1.0;
    let mut acc = 0.0;
    for i in 0..=n {
        let r = r0 + h * i as f64;
        let c = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let v = tail.value(r);
        acc += c * g(r, v, tail.deriv(r)) * r.powf(p);
    }
    acc * h / 3.0
}

/// `int_{R^N} g(r, u, u')` together with an error estimate from halving the
/// sample density (grid and tail).
fn integrate(u: &RadialProfile, g: &dyn Fn(f64, f64, f64) -> f64) -> Result<(f64, f64)> {
    let tail = u
        .tail
        .as_ref()
        .ok_or_else(|| FieldlabError::InvalidParameter("profile has no tail model; radial integrals need one".into()))?;
    let p = u.dimension as f64 - 1.0;
    let y: Vec<f64> = (0..u.radii.len())
        .map(|i| {
            let r = u.radii[i];
            g(r, u.values[i], u.derivs[i]) * if i == 0 { 0.0f64.powf(p) } else { r.powf(p) }
        })
        .collect();
    let fine = simpson(&u.radii, &y);
    let coarse_idx: Vec<usize> = (0..u.radii.len()).step_by(2).chain(
        // keep the last sample so both rules cover the same interval
        std::iter::once(u.radii.len() - 1).filter(|i| i % 2 == 1),
    ).collect();
    let xc: Vec<f64> = coarse_idx.iter().map(|&i| u.radii[i]).collect();
    let yc: Vec<f64> = coarse_idx.iter().map(|&i| y[i]).collect();
    let coarse = simpson(&xc, &yc);
    let tail_fine = tail_integral(tail, u.dimension, g, TAIL_INTERVALS);
    let tail_coarse = tail_integral(tail, u.dimension, g, TAIL_INTERVALS / 2);
    let s = surface_area(u.dimension);
    let value = s * (fine + tail_fine);
    // Richardson: the fourth-order rule's error is about 1/15 of the
    // difference; the floor covers accumulated rounding
    let w = simpson_weights(&u.radii);
    let magnitude: f64 = w.iter().zip(&y).map(|(w, y)| (w * y).abs()).sum::<f64>() + tail_fine.abs();
    let rounding = (y.len() as f64).sqrt() * f64::EPSILON * s * magnitude;
    let err = s * ((fine - coarse).abs() + (tail_fine - tail_coarse).abs()) / 15.0 + rounding;
    Ok((value, err))
}

/// `int_{R^N} g(u)`.
pub fn radial_integral(g: impl Fn(f64) -> f64, u: &RadialProfile) -> Result<f64> {
    integrate(u, &|_, v, _| g(v)).map(|(v, _)| v)
}

/// `int |grad u|^2` from the stored derivative samples.
pub fn gradient_norm_sq(u: &RadialProfile) -> Result<f64> {
    integrate(u, &|_, _, d| d * d).map(|(v, _)| v)
}

pub fn l2_norm_sq(u: &RadialProfile) -> Result<f64> {
    integrate(u, &|_, v, _| v * v).map(|(v, _)| v)
}

fn integral_f(u: &RadialProfile) -> Result<(f64, f64)> {
    let f = &u.nonlinearity;
    integrate(u, &|_, v, _| f.antideriv(v))
}

/// `I(v) = 1/2 |grad v|^2 - int F(v)`.
pub fn energy_sf(v: &RadialProfile) -> Result<f64> {
    Ok(0.5 * gradient_norm_sq(v)? - integral_f(v)?.0)
}

/// `J(u) = 1/2 Mhat(|grad u|^2) - int F(u)`.
pub fn energy_kt(u: &RadialProfile, m: &KirchhoffFunction) -> Result<f64> {
    Ok(0.5 * m.antideriv(gradient_norm_sq(u)?) - integral_f(u)?.0)
}

/// `K(u) = 1/2 (m0 |grad u|^2 + omega |u|_2^2) - int Hbar(u)`.
pub fn energy_aux(u: &RadialProfile, e: &Envelope, m0: f64) -> Result<f64> {
    let norm = m0 * gradient_norm_sq(u)? + e.omega * l2_norm_sq(u)?;
    let hbar = radial_integral(|t| e.big_hbar(t), u)?;
    Ok(0.5 * norm - hbar)
}

/// `m0 |grad u|^2 + omega |u|_2^2`.
pub fn aux_norm_sq(u: &RadialProfile, e: &Envelope, m0: f64) -> Result<f64> {
    Ok(m0 * gradient_norm_sq(u)? + e.omega * l2_norm_sq(u)?)
}

/// `Phi(theta, u) = 1/2 Mhat(e^{(N-2) theta} g) - e^{N theta} int F(u)` with the
/// cached `g`.
pub fn scaled_energy(theta: f64, u: &RadialProfile, m: &KirchhoffFunction) -> Result<f64> {
    let n = u.dimension as f64;
    let g = u.grad_norm_sq()?;
    let big_f = integral_f(u)?.0;
    Ok(0.5 * m.antideriv(((n - 2.0) * theta).exp() * g) - (n * theta).exp() * big_f)
}

/// `d/dtheta Phi(theta, u)`.
pub fn scaled_energy_derivative(theta: f64, u: &RadialProfile, m: &KirchhoffFunction) -> Result<f64> {
    let n = u.dimension as f64;
    let g = u.grad_norm_sq()?;
    let big_f = integral_f(u)?.0;
    let a = ((n - 2.0) * theta).exp();
    Ok(0.5 * (n - 2.0) * a * m.eval(a * g) * g - n * (n * theta).exp() * big_f)
}

/// `((N-2)/2) M(g) g - N int F(u)`, normalized by `max(1, N |int F(u)|)`.
pub fn pohozaev_residual(u: &RadialProfile, m: &KirchhoffFunction) -> Result<f64> {
    let n = u.dimension as f64;
    let g = gradient_norm_sq(u)?;
    let big_f = integral_f(u)?.0;
    Ok((0.5 * (n - 2.0) * m.eval(g) * g - n * big_f) / (n * big_f.abs()).max(1.0))
}

/// `M(g) g - int f(u) u`, normalized by `max(1, |int f(u) u|)`.
pub fn nehari_residual(u: &RadialProfile, m: &KirchhoffFunction) -> Result<f64> {
    let g = gradient_norm_sq(u)?;
    let f = &u.nonlinearity;
    let fu = radial_integral(|t| f.eval(t) * t, u)?;
    Ok((m.eval(g) * g - fu) / fu.abs().max(1.0))
}

/// Derivative at `x[i]` of the Lagrange interpolant through `x[j..j+k]`.
fn lagrange_derivative(x: &[f64], y: &[f64], i: usize, lo: usize, hi: usize) -> f64 {
    let xi = x[i];
    let mut acc = 0.0;
    for j in lo..hi {
        // l_j'(x_i)
        let mut denom = 1.0;
        for m in lo..hi {
            if m != j {
                denom *= x[j] - x[m];
            }
        }
        let mut num = 0.0;
        for skip in lo..hi {
            if skip == j {
                continue;
            }
            let mut prod = 1.0;
            for m in lo..hi {
                if m != j && m != skip {
                    prod *= xi - x[m];
                }
            }
            num += prod;
        }
        acc += y[j] * num / denom;
    }
    acc
}

/// Supremum over the interior samples of
/// `|M(g) (u'' + (N-1)/r u') + f(u)| / sup |f(u)|`, with `u''` from
/// five-point differentiation of the stored `u'` samples.
pub fn strong_residual(u: &RadialProfile, m: &KirchhoffFunction, f: &Nonlinearity) -> Result<f64> {
    let n = u.radii.len();
    if n < 5 {
        return Err(FieldlabError::InvalidParameter("strong residual needs at least 5 samples".into()));
    }
    let g = gradient_norm_sq(u)?;
    let mg = m.eval(g);
    let scale = u.values.iter().map(|&v| f.eval(v).abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(0.0);
    }
    let damping = u.dimension as f64 - 1.0;
    let mut sup = 0.0_f64;
    for i in 1..n - 1 {
        let lo = i.saturating_sub(2).min(n - 5);
        let d2 = lagrange_derivative(&u.radii, &u.derivs, i, lo, lo + 5);
        let r = u.radii[i];
        let res = (mg * (d2 + damping / r * u.derivs[i]) + f.eval(u.values[i])).abs();
        sup = sup.max(res);
    }
    Ok(sup / scale)
}

/// All functionals of one profile for a given `M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub grad_norm_sq: f64,
    pub l2_norm_sq: f64,
    pub integral_f: f64,
    /// `J(u)`; equals `I(u)` for `M = 1`.
    pub energy: f64,
    pub pohozaev_residual: f64,
    pub nehari_residual: f64,
    pub strong_residual_sup: f64,
    pub quadrature_tol: f64,
}

pub fn functional_report(u: &RadialProfile, m: &KirchhoffFunction) -> Result<FunctionalReport> {
    let f = u.nonlinearity.clone();
    let (g, eg) = integrate(u, &|_, _, d| d * d)?;
    let (l2, el) = integrate(u, &|_, v, _| v * v)?;
    let (big_f, ef) = integral_f(u)?;
    let (fu, efu) = integrate(u, &|_, v, _| f.eval(v) * v)?;
    let n = u.dimension as f64;
    let report = FunctionalReport {
        grad_norm_sq: g,
        l2_norm_sq: l2,
        integral_f: big_f,
        energy: 0.5 * m.antideriv(g) - big_f,
        pohozaev_residual: (0.5 * (n - 2.0) * m.eval(g) * g - n * big_f) / (n * big_f.abs()).max(1.0),
        nehari_residual: (m.eval(g) * g - fu) / fu.abs().max(1.0),
        strong_residual_sup: strong_residual(u, m, &f)?,
        quadrature_tol: eg.max(el).max(ef).max(efu).max(f64::MIN_POSITIVE),
    };
    let all = [
        report.grad_norm_sq,
        report.l2_norm_sq,
        report.integral_f,
        report.energy,
        report.pohozaev_residual,
        report.nehari_residual,
        report.strong_residual_sup,
    ];
    if all.iter().any(|x| !x.is_finite()) {
        return Err(FieldlabError::Numerical(format!("nonfinite functional values: {report:?}")));
    }
    Ok(report)
}
