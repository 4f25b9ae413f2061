use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::IntegratorOptions;
use crate::error::{FieldlabError, Result};
use crate::functionals;
use crate::nonlinearity::Nonlinearity;

/// Exponential tail `v(r) ≈ C r^{-(N-1)/2} e^{-κ r} S(κ r)` beyond the match
/// radius, where `S` is the Hankel asymptotic series of `K_ν`, `ν = (N-2)/2`.
/// For odd `N` the series terminates and the tail solves the linearized
/// equation exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailModel {
    pub match_radius: f64,
    pub amplitude: f64,
    pub decay_rate: f64,
    pub algebraic_power: f64,
}

const SERIES_TERMS: usize = 10;

impl TailModel {
    fn order(&self) -> f64 {
        self.algebraic_power - 0.5
    }

    /// `(S(z), S'(z))`.
    fn series(&self, z: f64) -> (f64, f64) {
        let nu = self.order();
        let mu = 4.0 * nu * nu;
        let (mut s, mut ds) = (1.0_f64, 0.0_f64);
        let mut a = 1.0;
        let mut zk = 1.0;
        for k in 1..=SERIES_TERMS {
            let kf = k as f64;
            a *= (mu - (2.0 * kf - 1.0).powi(2)) / (8.0 * kf);
            if a == 0.0 {
                break;
            }
            zk *= z;
            let term = a / zk;
            if term.abs() < 1e-17 * s.abs() {
                break;
            }
            s += term;
            ds -= kf * term / z;
        }
        (s, ds)
    }

    fn shape(&self, r: f64) -> f64 {
        let z = self.decay_rate * r;
        r.powf(-self.algebraic_power) * (-z).exp() * self.series(z).0
    }

    /// Builds a tail through `(radius, value)`.
    pub fn matched(dimension: usize, decay_rate: f64, radius: f64, value: f64) -> Self {
        let mut tail = Self {
            match_radius: radius,
            amplitude: 1.0,
            decay_rate,
            algebraic_power: 0.5 * (dimension as f64 - 1.0),
        };
        tail.amplitude = value / tail.shape(radius);
        tail
    }

    pub fn value(&self, r: f64) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        self.amplitude * self.shape(r)
    }

    pub fn log_derivative(&self, r: f64) -> f64 {
        let z = self.decay_rate * r;
        let (s, ds) = self.series(z);
        -self.algebraic_power / r - self.decay_rate + self.decay_rate * ds / s
    }

    pub fn deriv(&self, r: f64) -> f64 {
        self.value(r) * self.log_derivative(r)
    }

    /// Tail of `u(·) = v(t ·)`.
    pub fn rescaled(&self, t: f64) -> Self {
        Self {
            match_radius: self.match_radius / t,
            amplitude: self.amplitude * t.powf(-self.algebraic_power),
            decay_rate: self.decay_rate * t,
            algebraic_power: self.algebraic_power,
        }
    }
}

/// `‖∇u‖²` and `‖u‖²` cached at construction and carried through exact
/// scaling laws under rescaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CachedNorms {
    pub grad_norm_sq: f64,
    pub l2_norm_sq: f64,
}

/// Sampled radial function with its derivative and exponential tail.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialProfile {
    pub dimension: usize,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
    pub node_count: usize,
    pub shoot_height: f64,
    pub tail: Option<TailModel>,
    pub nonlinearity: Arc<Nonlinearity>,
    /// `t` with `u(·) = v(t ·)`; 1 for shooter output.
    pub scale: f64,
    pub norms: Option<CachedNorms>,
    #[serde(default)]
    pub integrator: Option<IntegratorOptions>,
}

/// Number of strict sign changes, skipping exact zeros.
pub fn count_sign_changes(values: &[f64]) -> usize {
    let mut count = 0;
    let mut sign = 0.0;
    for &v in values {
        if v == 0.0 {
            continue;
        }
        if sign != 0.0 && v.signum() != sign {
            count += 1;
        }
        sign = v.signum();
    }
    count
}

impl RadialProfile {
    /// Validates the samples and caches the norms (when a tail is attached).
    pub fn from_samples(
        dimension: usize,
        radii: Vec<f64>,
        values: Vec<f64>,
        derivs: Vec<f64>,
        tail: Option<TailModel>,
        nonlinearity: Arc<Nonlinearity>,
    ) -> Result<Self> {
        if dimension < 2 {
            return Err(FieldlabError::InvalidParameter(format!("dimension must be at least 2, got {dimension}")));
        }
        if radii.len() < 3 || radii.len() != values.len() || radii.len() != derivs.len() {
            return Err(FieldlabError::InvalidParameter("profile needs at least 3 matching samples".into()));
        }
        if radii[0] != 0.0 || derivs[0] != 0.0 {
            return Err(FieldlabError::InvalidParameter("profile must start at r = 0 with v'(0) = 0".into()));
        }
        if radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(FieldlabError::InvalidParameter("radii must be strictly increasing".into()));
        }
        if let Some(t) = &tail {
            if !(t.decay_rate > 0.0) {
                return Err(FieldlabError::InvalidParameter("tail decay rate must be positive".into()));
            }
        }
        let mut p = Self {
            dimension,
            node_count: count_sign_changes(&values),
            shoot_height: values[0],
            radii,
            values,
            derivs,
            tail,
            nonlinearity,
            scale: 1.0,
            norms: None,
            integrator: None,
        };
        if p.tail.is_some() {
            p.norms = Some(CachedNorms {
                grad_norm_sq: functionals::gradient_norm_sq(&p)?,
                l2_norm_sq: functionals::l2_norm_sq(&p)?,
            });
        }
        Ok(p)
    }

    /// Cached `‖∇u‖²`.
    pub fn grad_norm_sq(&self) -> Result<f64> {
        self.norms
            .map(|n| n.grad_norm_sq)
            .ok_or_else(|| FieldlabError::InvalidParameter("profile has no cached norms (missing tail)".into()))
    }

    pub fn match_radius(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    pub fn value_at(&self, r: f64) -> f64 {
        let last = self.match_radius();
        if r >= last {
            return self.tail.map_or(0.0, |t| t.value(r));
        }
        let i = match self.radii.binary_search_by(|x| x.total_cmp(&r)) {
            Ok(i) => return self.values[i],
            Err(i) => i - 1,
        };
        // cubic Hermite on (value, derivative) pairs
        let (r0, r1) = (self.radii[i], self.radii[i + 1]);
        let h = r1 - r0;
        let s = (r - r0) / h;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
            s * (1.0 - s) * (1.0 - s),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        h00 * self.values[i] + h10 * h * self.derivs[i] + h01 * self.values[i + 1] + h11 * h * self.derivs[i + 1]
    }

    /// Relative mismatch in value and log-derivative between the sampled
    /// profile and the tail model at the match radius.
    pub fn tail_consistency(&self) -> Option<(f64, f64)> {
        let tail = self.tail?;
        let r = self.match_radius();
        let v = *self.values.last().unwrap();
        let d = *self.derivs.last().unwrap();
        let value_rel = (tail.value(r) - v).abs() / v.abs();
        let ld = d / v;
        let ld_model = tail.log_derivative(r);
        Some((value_rel, (ld_model - ld).abs() / ld.abs()))
    }

    /// `u(·) = v(t ·)`: radii divided by `t`, derivatives multiplied by `t`,
    /// tail decay multiplied by `t`, norms scaled by `t^{2-N}` and `t^{-N}`.
    pub fn rescaled(&self, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(FieldlabError::InvalidParameter(format!("scale must be positive, got {t}")));
        }
        let nf = self.dimension as f64;
        Ok(Self {
            dimension: self.dimension,
            radii: self.radii.iter().map(|r| r / t).collect(),
            values: self.values.clone(),
            derivs: self.derivs.iter().map(|d| d * t).collect(),
            node_count: self.node_count,
            shoot_height: self.shoot_height,
            tail: self.tail.map(|tail| tail.rescaled(t)),
            nonlinearity: self.nonlinearity.clone(),
            scale: self.scale * t,
            norms: self.norms.map(|n| CachedNorms {
                grad_norm_sq: n.grad_norm_sq * t.powf(2.0 - nf),
                l2_norm_sq: n.l2_norm_sq * t.powf(-nf),
            }),
            integrator: self.integrator,
        })
    }

    /// Pointwise negation.
    pub fn negated(&self) -> Self {
        let mut p = self.clone();
        p.values.iter_mut().for_each(|v| *v = -*v);
        p.derivs.iter_mut().for_each(|v| *v = -*v);
        p.shoot_height = -p.shoot_height;
        if let Some(t) = p.tail.as_mut() {
            t.amplitude = -t.amplitude;
        }
        p
    }
}
