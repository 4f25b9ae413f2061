use serde::{Deserialize, Serialize};

use crate::error::{FieldlabError, Result};
use crate::nonlinearity::Nonlinearity;

/// Step-size control and termination settings for [`integrate_ivp`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorOptions {
    pub atol: f64,
    pub rtol: f64,
    /// Defaults to `50 / sqrt(2 omega)` when `None`.
    pub max_radius: Option<f64>,
    /// Blow-up bound is `blowup_factor * (1 + |s|)`.
    pub blowup_factor: f64,
    /// Largest accepted step; keeps the output grid fine enough for quadrature.
    pub max_step: f64,
    pub max_steps: usize,
    /// Stop as soon as the number of zero crossings exceeds this count.
    pub max_crossings: Option<usize>,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            atol: 1e-12,
            rtol: 1e-10,
            max_radius: None,
            blowup_factor: 1e6,
            max_step: 0.05,
            max_steps: 5_000_000,
            max_crossings: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Decay,
    Trapped(usize),
    Crossing(usize),
}

impl Classification {
    pub fn crossings(&self) -> Option<usize> {
        match self {
            Classification::Decay => None,
            Classification::Trapped(k) | Classification::Crossing(k) => Some(*k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    EnergyNegative,
    MaxRadius,
    Blowup,
    CrossingLimit,
}

/// Sampled solution of the radial initial value problem
/// `v'' + (N-1)/r v' + f(v) = 0`, `v(0) = s`, `v'(0) = 0`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dimension: usize,
    pub shoot_height: f64,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
    /// Interpolated radii of the zero crossings.
    pub crossing_radii: Vec<f64>,
    pub classification: Classification,
    pub termination: Termination,
    pub final_energy: f64,
}

impl Trajectory {
    pub fn crossings(&self) -> usize {
        self.crossing_radii.len()
    }

    /// `E(r) = v'^2/2 + F(v)` at every sample.
    pub fn energies(&self, f: &Nonlinearity) -> Vec<f64> {
        self.values
            .iter()
            .zip(&self.derivs)
            .map(|(v, d)| 0.5 * d * d + f.antideriv(*v))
            .collect()
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

type State = [f64; 2];

#[inline]
fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

struct RadialOde<'a> {
    f: &'a Nonlinearity,
    damping: f64,
}

impl RadialOde<'_> {
    #[inline]
    fn rhs(&self, r: f64, y: &State) -> State {
        [y[1], -self.damping / r * y[1] - self.f.eval(y[0])]
    }
}

/// Integrates the radial ODE from `v(0) = s`, classifying the outcome.
///
/// The first step off the singular origin uses the series
/// `v(r) ≈ s - f(s) r^2 / (2N)`. Integration stops once the local energy
/// turns negative (no further zeros can occur), when `|v|` exceeds the
/// blow-up bound, when the crossing limit is exceeded, or at the maximal
/// radius.
pub fn integrate_ivp(
    f: &Nonlinearity,
    dimension: usize,
    s: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    if s == 0.0 || !s.is_finite() {
        return Err(FieldlabError::InvalidParameter(format!(
            "shoot height must be finite and nonzero (s = 0 gives the trivial solution), got {s}"
        )));
    }
    if dimension < 2 {
        return Err(FieldlabError::InvalidParameter(format!("dimension must be at least 2, got {dimension}")));
    }
    if !(opts.atol > 0.0 && opts.rtol > 0.0 && opts.max_step > 0.0) {
        return Err(FieldlabError::InvalidParameter("integrator tolerances must be positive".into()));
    }
    let nf = dimension as f64;
    let ode = RadialOde { f, damping: nf - 1.0 };
    let max_radius = opts
        .max_radius
        .unwrap_or_else(|| 50.0 / f.decay_rate().max(1e-3));
    let bound = opts.blowup_factor * (1.0 + s.abs());
    let energy = |y: &State| 0.5 * y[1] * y[1] + f.antideriv(y[0]);

    let r1 = 1e-6 * (1.0 + s.abs());
    let fs = f.eval(s);
    let mut r = r1;
    let mut y: State = [s - fs * r1 * r1 / (2.0 * nf), -fs * r1 / nf];

    let mut radii = vec![0.0, r];
    let mut values = vec![s, y[0]];
    let mut derivs = vec![0.0, y[1]];
    let mut crossing_radii = Vec::new();
    let mut sign = s.signum();

    let finish = |termination: Termination,
                  radii: Vec<f64>,
                  values: Vec<f64>,
                  derivs: Vec<f64>,
                  crossing_radii: Vec<f64>,
                  e: f64| {
        let k = crossing_radii.len();
        let last = values.last().copied().unwrap_or(s);
        let classification = match termination {
            Termination::EnergyNegative => Classification::Trapped(k),
            Termination::MaxRadius if last.abs() < 1e-8 * s.abs() => Classification::Decay,
            _ => Classification::Crossing(k),
        };
        Trajectory {
            dimension,
            shoot_height: s,
            radii,
            values,
            derivs,
            crossing_radii,
            classification,
            termination,
            final_energy: e,
        }
    };

    let e0 = energy(&y);
    if e0 < 0.0 {
        return Ok(finish(Termination::EnergyNegative, radii, values, derivs, crossing_radii, e0));
    }

    let mut h = (1e-3 / (1.0 + s.abs())).min(opts.max_step);
    let mut k1 = ode.rhs(r, &y);
    let mut steps = 0usize;
    loop {
        if steps >= opts.max_steps {
            return Err(FieldlabError::Numerical(format!(
                "step budget of {} exhausted at r = {r}",
                opts.max_steps
            )));
        }
        steps += 1;
        h = h.min(max_radius - r).min(opts.max_step);

        let k2 = ode.rhs(r + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = ode.rhs(r + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = ode.rhs(r + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = ode.rhs(
            r + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = ode.rhs(
            r + h,
            &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = axpy(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = ode.rhs(r + h, &y_new);

        let mut err_sq = 0.0;
        for i in 0..2 {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err_sq += (e / sc) * (e / sc);
        }
        let err = (err_sq / 2.0).sqrt();

        if !err.is_finite() || !y_new[0].is_finite() || !y_new[1].is_finite() {
            if h > 1e-14 * r.max(1.0) {
                h *= 0.2;
                continue;
            }
            return Ok(finish(Termination::Blowup, radii, values, derivs, crossing_radii, f64::NAN));
        }
        if err > 1.0 {
            h *= (0.9 * err.powf(-0.2)).max(0.2);
            continue;
        }

        let r_new = r + h;
        if y_new[0] != 0.0 && y_new[0].signum() != sign {
            let w = y[0] / (y[0] - y_new[0]);
            crossing_radii.push(r + w * h);
            sign = y_new[0].signum();
        }
        r = r_new;
        y = y_new;
        k1 = k7;
        radii.push(r);
        values.push(y[0]);
        derivs.push(y[1]);

        let e = energy(&y);
        if let Some(limit) = opts.max_crossings {
            if crossing_radii.len() > limit {
                return Ok(finish(Termination::CrossingLimit, radii, values, derivs, crossing_radii, e));
            }
        }
        if y[0].abs() > bound {
            return Ok(finish(Termination::Blowup, radii, values, derivs, crossing_radii, e));
        }
        if e < 0.0 {
            return Ok(finish(Termination::EnergyNegative, radii, values, derivs, crossing_radii, e));
        }
        if r >= max_radius {
            return Ok(finish(Termination::MaxRadius, radii, values, derivs, crossing_radii, e));
        }

        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
}
