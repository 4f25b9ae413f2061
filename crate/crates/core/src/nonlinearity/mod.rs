//! The nonlinearity `f`, the Kirchhoff coefficient `M`, and sampled checks of
//! the standing assumptions placed on both.

mod conditions;
mod kirchhoff;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::envelope::Envelope;
use crate::error::{FieldlabError, Result};

pub use conditions::{
    check_f_conditions, check_m_conditions, ConditionId, ConditionReport, SamplingGrid, Verdict,
};
pub use kirchhoff::{Decomposition, KirchhoffFunction, KirchhoffKind};

/// Which closed form (or table) backs a [`Nonlinearity`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum NonlinearityKind {
    /// `f(t) = -mu*t + |t|^(p-1) t`.
    Power { mu: f64, p: f64 },
    /// Piecewise-linear samples on `t >= 0`, extended oddly.
    Tabulated(Table),
    /// `f_A(t) = (hbar(t) - omega*t) / m0` built from an envelope.
    AuxDerived { envelope: Arc<Envelope>, m0: f64 },
}

/// Samples of `f` on a nonnegative grid starting at 0, with the exact
/// antiderivative of the piecewise-linear interpolant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Table {
    t: Vec<f64>,
    f: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Table {
    fn locate(&self, t: f64) -> usize {
        // index i with t[i] <= t < t[i+1], clamped to the last cell
        match self.t.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => i.min(self.t.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.t.len() - 2),
        }
    }

    fn eval(&self, t: f64) -> f64 {
        let i = self.locate(t);
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        let w = (t - t0) / (t1 - t0);
        self.f[i] + w * (self.f[i + 1] - self.f[i])
    }

    fn antideriv(&self, t: f64) -> f64 {
        let i = self.locate(t);
        let fi = self.f[i];
        self.cumulative[i] + 0.5 * (t - self.t[i]) * (fi + self.eval(t))
    }
}

/// An odd nonlinearity together with its antiderivative and the constants
/// `omega` (linear decay rate at the origin) and `zeta` (a point where the
/// antiderivative is positive).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Nonlinearity {
    pub kind: NonlinearityKind,
    pub omega: f64,
    pub zeta: f64,
    pub growth_exponent: f64,
}

/// Tag describing the family without its payload.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FamilyTag {
    Power { mu: f64, p: f64 },
    Tabulated,
    AuxDerived,
}

/// Critical Sobolev exponent `(N+2)/(N-2)`, infinite for `N = 2`.
pub fn critical_exponent(dimension: usize) -> f64 {
    if dimension <= 2 {
        f64::INFINITY
    } else {
        (dimension as f64 + 2.0) / (dimension as f64 - 2.0)
    }
}

/// Builds the canonical family `f(t) = -mu*t + |t|^(p-1) t`.
pub fn make_power_nonlinearity(mu: f64, p: f64, dimension: usize) -> Result<Nonlinearity> {
    if dimension < 2 {
        return Err(FieldlabError::InvalidParameter(format!(
            "dimension must be at least 2, got {dimension}"
        )));
    }
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(FieldlabError::ConditionViolated {
            condition: "f1p",
            message: format!("mu must be positive so that f(t)/t -> -mu < 0, got {mu}"),
        });
    }
    if !(p > 1.0) || !p.is_finite() {
        return Err(FieldlabError::InvalidParameter(format!(
            "power p must exceed 1, got {p}"
        )));
    }
    let critical = critical_exponent(dimension);
    if p >= critical {
        return Err(FieldlabError::ConditionViolated {
            condition: "f2",
            message: format!(
                "p = {p} is not subcritical for N = {dimension}: need p < (N+2)/(N-2) = {critical}"
            ),
        });
    }
    Ok(Nonlinearity::power_unchecked(mu, p))
}

impl Nonlinearity {
    /// Power family without validation; used to build counterexamples such
    /// as `f(t) = t^3`.
    pub fn power_unchecked(mu: f64, p: f64) -> Self {
        // F(t) = t^2 (t^(p-1)/(p+1) - mu/2); at zeta = (mu (p+1))^(1/(p-1))
        // this equals mu*zeta^2/2 > 0.
        let zeta = if mu > 0.0 {
            (mu * (p + 1.0)).powf(1.0 / (p - 1.0))
        } else {
            1.0
        };
        Self {
            kind: NonlinearityKind::Power { mu, p },
            omega: 0.5 * mu,
            zeta,
            growth_exponent: p,
        }
    }

    /// Tabulated nonlinearity from samples on `t >= 0`. The first sample must
    /// be at `t = 0` with `f = 0`. When `omega` is `None` it is estimated as
    /// `-1/2 * max f(t)/t` over the smallest decade of the table.
    pub fn tabulated(t: Vec<f64>, f: Vec<f64>, omega: Option<f64>) -> Result<Self> {
        if t.len() < 3 || t.len() != f.len() {
            return Err(FieldlabError::InvalidParameter(
                "table needs at least 3 matching (t, f) samples".into(),
            ));
        }
        if t[0] != 0.0 || f[0] != 0.0 {
            return Err(FieldlabError::InvalidParameter(
                "table must start at t = 0 with f(0) = 0 (odd f)".into(),
            ));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(FieldlabError::InvalidParameter(
                "table abscissae must be strictly increasing".into(),
            ));
        }
        let mut cumulative = vec![0.0; t.len()];
        for i in 1..t.len() {
            cumulative[i] = cumulative[i - 1] + 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]);
        }
        let omega = match omega {
            Some(w) => w,
            None => {
                let first = t[1];
                let max_ratio = t
                    .iter()
                    .zip(&f)
                    .skip(1)
                    .take_while(|(ti, _)| **ti <= 10.0 * first)
                    .map(|(ti, fi)| fi / ti)
                    .fold(f64::NEG_INFINITY, f64::max);
                -0.5 * max_ratio
            }
        };
        let zeta = t
            .iter()
            .zip(&cumulative)
            .find(|(_, c)| **c > 0.0)
            .or_else(|| {
                t.iter()
                    .zip(&cumulative)
                    .max_by(|a, b| a.1.total_cmp(b.1))
            })
            .map(|(ti, _)| *ti)
            .unwrap_or(1.0);
        Ok(Self {
            kind: NonlinearityKind::Tabulated(Table { t, f, cumulative }),
            omega,
            zeta,
            growth_exponent: f64::NAN,
        })
    }

    pub(crate) fn aux_derived(envelope: Arc<Envelope>, m0: f64, zeta: f64) -> Self {
        let omega = envelope.omega / (2.0 * m0);
        let growth = envelope.p0;
        Self {
            kind: NonlinearityKind::AuxDerived { envelope, m0 },
            omega,
            zeta,
            growth_exponent: growth,
        }
    }

    pub fn family_tag(&self) -> FamilyTag {
        match &self.kind {
            NonlinearityKind::Power { mu, p } => FamilyTag::Power { mu: *mu, p: *p },
            NonlinearityKind::Tabulated(_) => FamilyTag::Tabulated,
            NonlinearityKind::AuxDerived { .. } => FamilyTag::AuxDerived,
        }
    }

    /// Linear decay rate of solutions at infinity, `sqrt(2 omega)`.
    pub fn decay_rate(&self) -> f64 {
        (2.0 * self.omega).sqrt()
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match &self.kind {
            NonlinearityKind::Power { mu, p } => -mu * t + t.abs().powf(p - 1.0) * t,
            NonlinearityKind::Tabulated(table) => t.signum() * table.eval(t.abs()),
            NonlinearityKind::AuxDerived { envelope, m0 } => {
                (envelope.hbar_interp(t) - envelope.omega * t) / m0
            }
        }
    }

    /// `F(t) = int_0^t f`.
    #[inline]
    pub fn antideriv(&self, t: f64) -> f64 {
        match &self.kind {
            NonlinearityKind::Power { mu, p } => {
                -0.5 * mu * t * t + t.abs().powf(p + 1.0) / (p + 1.0)
            }
            NonlinearityKind::Tabulated(table) => table.antideriv(t.abs()),
            NonlinearityKind::AuxDerived { envelope, m0 } => {
                (envelope.hbar_interp_integral(t) - 0.5 * envelope.omega * t * t) / m0
            }
        }
    }

    /// Stable identifier used for cache keys and reports.
    pub fn descriptor(&self) -> serde_json::Value {
        match &self.kind {
            NonlinearityKind::Power { mu, p } => {
                serde_json::json!({"family": "power", "mu": mu, "p": p})
            }
            NonlinearityKind::Tabulated(table) => serde_json::json!({
                "family": "tabulated",
                "points": table.t.len(),
                "omega": self.omega,
            }),
            NonlinearityKind::AuxDerived { envelope, m0 } => serde_json::json!({
                "family": "aux_derived",
                "base": envelope.base.descriptor(),
                "p0": envelope.p0,
                "m0": m0,
                "grid_points": envelope.t.len(),
            }),
        }
    }
}
