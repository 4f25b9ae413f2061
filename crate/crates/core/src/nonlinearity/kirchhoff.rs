use serde::{Deserialize, Serialize};

use crate::error::{FieldlabError, Result};

/// Closed-form families for the Kirchhoff coefficient `M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KirchhoffKind {
    /// `M(t) = value`.
    Constant {
        #[serde(default = "one")]
        value: f64,
    },
    /// `M(t) = a + b t`.
    Affine { a: f64, b: f64 },
    /// `M(t) = m0 + q t^s`.
    PowerM { m0: f64, q: f64, s: f64 },
    /// `M(t) = 1 + (q/2)(e^t - 1)`.
    ExpM { q: f64 },
}

fn one() -> f64 {
    1.0
}

/// The splitting `M = m0 + q * lambda` with `lambda >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    pub m0: f64,
    pub q: f64,
    kind: KirchhoffKind,
}

impl Decomposition {
    pub fn lambda(&self, t: f64) -> f64 {
        match self.kind {
            KirchhoffKind::Constant { .. } => 0.0,
            KirchhoffKind::Affine { .. } => t,
            KirchhoffKind::PowerM { s, .. } => t.powf(s),
            KirchhoffKind::ExpM { .. } => 0.5 * t.exp_m1(),
        }
    }

    /// `Lambda(t) = int_0^t lambda`.
    pub fn big_lambda(&self, t: f64) -> f64 {
        match self.kind {
            KirchhoffKind::Constant { .. } => 0.0,
            KirchhoffKind::Affine { .. } => 0.5 * t * t,
            KirchhoffKind::PowerM { s, .. } => t.powf(s + 1.0) / (s + 1.0),
            KirchhoffKind::ExpM { .. } => 0.5 * (t.exp_m1() - t),
        }
    }
}

/// A nondegenerate Kirchhoff coefficient `M : [0, inf) -> (0, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KirchhoffFunction {
    pub kind: KirchhoffKind,
}

impl KirchhoffFunction {
    pub fn new(kind: KirchhoffKind) -> Result<Self> {
        let bad = |msg: String| Err(FieldlabError::InvalidParameter(msg));
        match kind {
            KirchhoffKind::Constant { value } if !(value > 0.0 && value.is_finite()) => {
                return bad(format!("constant M must be positive, got {value}"))
            }
            KirchhoffKind::Affine { a, b } if !(a > 0.0 && b >= 0.0) => {
                return bad(format!("affine M needs a > 0 and b >= 0, got a={a}, b={b}"))
            }
            KirchhoffKind::PowerM { m0, q, s } if !(m0 > 0.0 && q >= 0.0 && s > 0.0) => {
                return bad(format!(
                    "power_m needs m0 > 0, q >= 0, s > 0, got m0={m0}, q={q}, s={s}"
                ))
            }
            KirchhoffKind::ExpM { q } if !(q >= 0.0) => {
                return bad(format!("exp_m needs q >= 0, got {q}"))
            }
            _ => {}
        }
        Ok(Self { kind })
    }

    /// `M ≡ 1`, the scalar-field case.
    pub fn unit() -> Self {
        Self {
            kind: KirchhoffKind::Constant { value: 1.0 },
        }
    }

    pub fn affine(a: f64, b: f64) -> Result<Self> {
        Self::new(KirchhoffKind::Affine { a, b })
    }

    pub fn power_m(m0: f64, q: f64, s: f64) -> Result<Self> {
        Self::new(KirchhoffKind::PowerM { m0, q, s })
    }

    pub fn exp_m(q: f64) -> Result<Self> {
        Self::new(KirchhoffKind::ExpM { q })
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match self.kind {
            KirchhoffKind::Constant { value } => value,
            KirchhoffKind::Affine { a, b } => a + b * t,
            KirchhoffKind::PowerM { m0, q, s } => m0 + q * t.powf(s),
            KirchhoffKind::ExpM { q } => 1.0 + 0.5 * q * t.exp_m1(),
        }
    }

    /// `M̂(t) = int_0^t M`.
    pub fn antideriv(&self, t: f64) -> f64 {
        match self.kind {
            KirchhoffKind::Constant { value } => value * t,
            KirchhoffKind::Affine { a, b } => a * t + 0.5 * b * t * t,
            KirchhoffKind::PowerM { m0, q, s } => m0 * t + q * t.powf(s + 1.0) / (s + 1.0),
            KirchhoffKind::ExpM { q } => t + 0.5 * q * (t.exp_m1() - t),
        }
    }

    /// The floor `m0` with `M(t) >= m0`.
    pub fn m0(&self) -> f64 {
        match self.kind {
            KirchhoffKind::Constant { value } => value,
            KirchhoffKind::Affine { a, .. } => a,
            KirchhoffKind::PowerM { m0, .. } => m0,
            KirchhoffKind::ExpM { .. } => 1.0,
        }
    }

    pub fn decomposition(&self) -> Option<Decomposition> {
        let (m0, q) = match self.kind {
            KirchhoffKind::Constant { value } => (value, 1.0),
            KirchhoffKind::Affine { a, b } => (a, b),
            KirchhoffKind::PowerM { m0, q, .. } => (m0, q),
            KirchhoffKind::ExpM { q } => (1.0, q),
        };
        Some(Decomposition {
            m0,
            q,
            kind: self.kind,
        })
    }

    /// Same family with the coupling `q` (the slope `b` for the affine
    /// family) replaced.
    pub fn with_q(&self, q: f64) -> Result<Self> {
        let kind = match self.kind {
            KirchhoffKind::Constant { .. } => {
                return Err(FieldlabError::InvalidParameter(
                    "the constant family has no coupling parameter".into(),
                ))
            }
            KirchhoffKind::Affine { a, .. } => KirchhoffKind::Affine { a, b: q },
            KirchhoffKind::PowerM { m0, s, .. } => KirchhoffKind::PowerM { m0, q, s },
            KirchhoffKind::ExpM { .. } => KirchhoffKind::ExpM { q },
        };
        Self::new(kind)
    }

    pub fn is_unit(&self) -> bool {
        matches!(self.kind, KirchhoffKind::Constant { value } if value == 1.0)
    }

    pub fn descriptor(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("kirchhoff descriptor serializes")
    }
}
