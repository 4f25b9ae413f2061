use serde::{Deserialize, Serialize};

use super::{critical_exponent, KirchhoffFunction, Nonlinearity};
use crate::error::{FieldlabError, Result};

/// Identifier of a checked hypothesis or envelope property.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConditionId {
    #[serde(rename = "f0")]
    F0,
    #[serde(rename = "f1p")]
    F1p,
    #[serde(rename = "f2")]
    F2,
    #[serde(rename = "f3")]
    F3,
    M1,
    M2,
    M3,
    M2p,
    #[serde(rename = "env-h1")]
    EnvH1,
    #[serde(rename = "env-h2")]
    EnvH2,
    #[serde(rename = "env-h3")]
    EnvH3,
    #[serde(rename = "env-h4")]
    EnvH4,
    #[serde(rename = "env-h5")]
    EnvH5,
    #[serde(rename = "env-H1")]
    EnvP1,
    #[serde(rename = "env-H2")]
    EnvP2,
    #[serde(rename = "env-H3")]
    EnvP3,
    #[serde(rename = "env-H4")]
    EnvP4,
    #[serde(rename = "env-H5")]
    EnvP5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

/// Outcome of one sampled check. A `Fails` verdict always carries at least
/// one counterexample sample in `evidence`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition_id: ConditionId,
    pub verdict: Verdict,
    pub evidence: Vec<(f64, f64)>,
    pub message: String,
}

impl ConditionReport {
    pub(crate) fn new(
        condition_id: ConditionId,
        verdict: Verdict,
        evidence: Vec<(f64, f64)>,
        message: impl Into<String>,
    ) -> Self {
        debug_assert!(verdict != Verdict::Fails || !evidence.is_empty());
        Self {
            condition_id,
            verdict,
            evidence,
            message: message.into(),
        }
    }
}

/// Logarithmically spaced sample points `t_min * 10^(k / per_decade)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub per_decade: usize,
}

impl Default for SamplingGrid {
    fn default() -> Self {
        Self {
            t_min: 1e-6,
            t_max: 1e6,
            per_decade: 512,
        }
    }
}

impl SamplingGrid {
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.t_min > 0.0) || !(self.t_max > self.t_min) || self.per_decade == 0 {
            return Err(FieldlabError::InvalidParameter(format!(
                "sampling grid is empty: {self:?}"
            )));
        }
        let decades = (self.t_max / self.t_min).log10();
        let count = (decades * self.per_decade as f64).round() as usize;
        Ok((0..=count)
            .map(|k| self.t_min * 10f64.powf(k as f64 / self.per_decade as f64))
            .collect())
    }

    fn decade_of(&self, t: f64) -> i64 {
        ((t / self.t_min).log10() + 1e-9).floor() as i64
    }

    fn decades(&self) -> f64 {
        (self.t_max / self.t_min).log10()
    }
}

/// Per-decade extreme samples of a sampled function.
#[derive(Debug, Clone, Copy)]
struct DecadeStat {
    min: (f64, f64),
    max: (f64, f64),
    max_abs: (f64, f64),
}

fn decade_stats(grid: &SamplingGrid, samples: &[(f64, f64)]) -> Vec<DecadeStat> {
    let mut out: Vec<(i64, DecadeStat)> = Vec::new();
    for &(t, v) in samples.iter().filter(|(_, v)| !v.is_nan()) {
        let d = grid.decade_of(t);
        match out.last_mut() {
            Some((last, stat)) if *last == d => {
                if v < stat.min.1 {
                    stat.min = (t, v);
                }
                if v > stat.max.1 {
                    stat.max = (t, v);
                }
                if v.abs() > stat.max_abs.1.abs() {
                    stat.max_abs = (t, v);
                }
            }
            _ => out.push((
                d,
                DecadeStat {
                    min: (t, v),
                    max: (t, v),
                    max_abs: (t, v),
                },
            )),
        }
    }
    out.into_iter().map(|(_, s)| s).collect()
}

const WINDOW_DECADES: usize = 3;

fn upper_window(stats: Vec<DecadeStat>) -> Option<Vec<DecadeStat>> {
    (stats.len() >= WINDOW_DECADES).then(|| stats[stats.len() - WINDOW_DECADES..].to_vec())
}

/// Classifies `phi(t) -> 0` from the largest decades of the window.
fn classify_vanishing(
    id: ConditionId,
    grid: &SamplingGrid,
    samples: &[(f64, f64)],
    what: &str,
) -> ConditionReport {
    let Some(window) = upper_window(decade_stats(grid, samples)) else {
        return ConditionReport::new(
            id,
            Verdict::Inconclusive,
            vec![],
            format!("{what}: fewer than {WINDOW_DECADES} sampled decades"),
        );
    };
    let mags: Vec<f64> = window.iter().map(|s| s.max_abs.1.abs()).collect();
    let last = *window.last().unwrap();
    let last_mag = *mags.last().unwrap();
    if last_mag == 0.0 {
        return ConditionReport::new(id, Verdict::Holds, vec![last.max_abs], format!("{what} vanishes identically on the upper decades"));
    }
    let decreasing = mags.windows(2).all(|w| w[1] < w[0]);
    if decreasing && last_mag < 0.5 * mags[0] {
        return ConditionReport::new(
            id,
            Verdict::Holds,
            vec![window[0].max_abs, last.max_abs],
            format!("{what} decays across the upper decades (max |.| {:.3e} -> {:.3e})", mags[0], last_mag),
        );
    }
    let stalled = mags.windows(2).all(|w| w[1] >= 0.9 * w[0]);
    if stalled {
        return ConditionReport::new(
            id,
            Verdict::Fails,
            vec![last.max_abs],
            format!("{what} does not decay: max |.| {:.3e} -> {:.3e}", mags[0], last_mag),
        );
    }
    ConditionReport::new(
        id,
        Verdict::Inconclusive,
        vec![last.max_abs],
        format!("{what}: non-monotone trend on the upper decades"),
    )
}

/// Classifies `liminf phi = +inf` from per-decade minima.
fn classify_diverging_up(
    id: ConditionId,
    grid: &SamplingGrid,
    samples: &[(f64, f64)],
    what: &str,
) -> ConditionReport {
    let Some(window) = upper_window(decade_stats(grid, samples)) else {
        return ConditionReport::new(id, Verdict::Inconclusive, vec![], format!("{what}: too few decades"));
    };
    let mins: Vec<f64> = window.iter().map(|s| s.min.1).collect();
    let (first, last) = (mins[0], *mins.last().unwrap());
    let increasing = mins.windows(2).all(|w| w[1] > w[0]);
    if increasing && last > 0.0 && (first <= 0.0 || last >= 4.0 * first) {
        return ConditionReport::new(
            id,
            Verdict::Holds,
            vec![window[0].min, window.last().unwrap().min],
            format!("{what} grows without bound (decade minima {first:.3e} -> {last:.3e})"),
        );
    }
    if last <= first {
        return ConditionReport::new(
            id,
            Verdict::Fails,
            vec![window.last().unwrap().min],
            format!("{what} does not grow (decade minima {first:.3e} -> {last:.3e})"),
        );
    }
    ConditionReport::new(
        id,
        Verdict::Inconclusive,
        vec![window.last().unwrap().min],
        format!("{what}: growth too slow or irregular to classify"),
    )
}

/// Classifies `limsup phi <= 0` from per-decade maxima.
fn classify_limsup_nonpositive(
    id: ConditionId,
    grid: &SamplingGrid,
    samples: &[(f64, f64)],
    what: &str,
) -> ConditionReport {
    let Some(window) = upper_window(decade_stats(grid, samples)) else {
        return ConditionReport::new(id, Verdict::Inconclusive, vec![], format!("{what}: too few decades"));
    };
    let maxs: Vec<f64> = window.iter().map(|s| s.max.1).collect();
    let last = *maxs.last().unwrap();
    let last_sample = window.last().unwrap().max;
    if last <= 0.0 && maxs.windows(2).all(|w| w[1] <= w[0]) {
        return ConditionReport::new(id, Verdict::Holds, vec![last_sample], format!("{what} stays nonpositive (last decade max {last:.3e})"));
    }
    if last > 0.0 && maxs.windows(2).all(|w| w[1] >= w[0]) {
        return ConditionReport::new(id, Verdict::Fails, vec![last_sample], format!("{what} is positive and nondecreasing (last decade max {last:.3e})"));
    }
    ConditionReport::new(id, Verdict::Inconclusive, vec![last_sample], format!("{what}: trend not classifiable"))
}

fn sample(points: &[f64], phi: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
    points.iter().map(|&t| (t, phi(t))).collect()
}

/// Samples the hypotheses on `f` for dimension `dimension`.
pub fn check_f_conditions(
    f: &Nonlinearity,
    dimension: usize,
    grid: &SamplingGrid,
) -> Result<Vec<ConditionReport>> {
    let points = grid.points()?;
    if grid.decades() < WINDOW_DECADES as f64 {
        return Err(FieldlabError::InvalidParameter(format!(
            "sampling grid must span at least {WINDOW_DECADES} decades"
        )));
    }
    let mut reports = Vec::with_capacity(4);

    // (f0): oddness of f and evenness of F
    let mut worst: Option<(f64, f64)> = None;
    for &t in &points {
        let (fp, fm) = (f.eval(t), f.eval(-t));
        let (big_p, big_m) = (f.antideriv(t), f.antideriv(-t));
        let odd_gap = (fp + fm).abs() / fp.abs().max(1.0);
        let even_gap = (big_p - big_m).abs() / big_p.abs().max(1.0);
        let gap = odd_gap.max(even_gap);
        if gap > 1e-12 && worst.map_or(true, |(_, g)| gap > g) {
            worst = Some((t, gap));
        }
    }
    reports.push(match worst {
        None => ConditionReport::new(ConditionId::F0, Verdict::Holds, vec![(points[0], 0.0)], "f odd and F even at every sampled pair"),
        Some(ev) => ConditionReport::new(ConditionId::F0, Verdict::Fails, vec![ev], "f(t) + f(-t) (or F(t) - F(-t)) nonzero"),
    });

    // (f1'): limsup_{t->0} f(t)/t < 0 on the lowest decades
    let ratio = sample(&points, |t| f.eval(t) / t);
    let stats = decade_stats(grid, &ratio);
    reports.push(if stats.len() < WINDOW_DECADES {
        ConditionReport::new(ConditionId::F1p, Verdict::Inconclusive, vec![], "too few decades near 0")
    } else {
        let low = &stats[..WINDOW_DECADES];
        let maxs: Vec<f64> = low.iter().map(|s| s.max.1).collect();
        if let Some(bad) = ratio
            .iter()
            .take_while(|(t, _)| grid.decade_of(*t) == 0)
            .find(|(_, r)| !(*r < 0.0))
        {
            ConditionReport::new(ConditionId::F1p, Verdict::Fails, vec![*bad], format!("f(t)/t = {:.3e} >= 0 near 0", bad.1))
        } else if maxs.iter().any(|m| !(*m < 0.0)) {
            ConditionReport::new(ConditionId::F1p, Verdict::Inconclusive, vec![low[2].max], "f(t)/t changes sign within the lowest decades")
        } else {
            let shrinking = maxs.windows(2).all(|w| w[0].abs() < w[1].abs())
                && maxs[0].abs() < 0.5 * maxs[2].abs();
            let monotone = maxs.windows(2).all(|w| w[1] >= w[0])
                || maxs.windows(2).all(|w| w[1] <= w[0]);
            if shrinking {
                ConditionReport::new(ConditionId::F1p, Verdict::Inconclusive, vec![low[0].max], "f(t)/t creeps towards 0 as t -> 0")
            } else if monotone {
                ConditionReport::new(ConditionId::F1p, Verdict::Holds, vec![low[0].max], format!("limsup f(t)/t ~ {:.6e} < 0", maxs[0]))
            } else {
                ConditionReport::new(ConditionId::F1p, Verdict::Inconclusive, vec![low[0].max], "non-monotone f(t)/t near 0")
            }
        }
    });

    // (f2): subcritical growth
    reports.push(if dimension >= 3 {
        let crit = critical_exponent(dimension);
        let phi = sample(&points, |t| f.eval(t) / t.powf(crit));
        classify_vanishing(ConditionId::F2, grid, &phi, &format!("f(t)/t^{crit}"))
    } else {
        // log of f(t) e^{-alpha t^2} for the smallest tested alpha
        let alpha = 1e-3;
        let psi = sample(&points, |t| f.eval(t).abs().ln() - alpha * t * t);
        let Some(window) = upper_window(decade_stats(grid, &psi)) else {
            return Err(FieldlabError::InvalidParameter("too few decades".into()));
        };
        let maxs: Vec<f64> = window.iter().map(|s| s.max.1).collect();
        let last = window.last().unwrap().max;
        if maxs.windows(2).all(|w| w[1] < w[0]) && last.1 < -50.0 {
            ConditionReport::new(ConditionId::F2, Verdict::Holds, vec![last], format!("ln|f(t)| - {alpha} t^2 -> -inf"))
        } else if maxs.windows(2).all(|w| w[1] >= w[0]) {
            ConditionReport::new(ConditionId::F2, Verdict::Fails, vec![last], format!("f(t) e^(-{alpha} t^2) does not decay"))
        } else {
            ConditionReport::new(ConditionId::F2, Verdict::Inconclusive, vec![last], "irregular growth")
        }
    });

    // (f3): F(zeta) > 0
    let f_zeta = f.antideriv(f.zeta);
    reports.push(if f_zeta > 0.0 {
        ConditionReport::new(ConditionId::F3, Verdict::Holds, vec![(f.zeta, f_zeta)], format!("F(zeta) = {f_zeta:.6e} > 0 at zeta = {}", f.zeta))
    } else if let Some(&(t, v)) = sample(&points, |t| f.antideriv(t)).iter().find(|(_, v)| *v > 0.0) {
        ConditionReport::new(ConditionId::F3, Verdict::Holds, vec![(t, v)], format!("stored zeta is not a witness but F({t}) = {v:.6e} > 0"))
    } else {
        let best = sample(&points, |t| f.antideriv(t))
            .into_iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        ConditionReport::new(ConditionId::F3, Verdict::Fails, vec![best], "F <= 0 at every sample")
    });

    Ok(reports)
}

/// Samples the hypotheses on `M`. For `N = 2` only (M1) is evaluated.
pub fn check_m_conditions(
    m: &KirchhoffFunction,
    dimension: usize,
    grid: &SamplingGrid,
) -> Result<Vec<ConditionReport>> {
    let mut points = grid.points()?;
    if dimension < 2 {
        return Err(FieldlabError::InvalidParameter(format!("dimension must be at least 2, got {dimension}")));
    }
    let m0 = m.m0();
    let mut reports = Vec::with_capacity(4);

    points.insert(0, 0.0);
    let values = sample(&points, |t| m.eval(t));
    points.remove(0);
    let below = values
        .iter()
        .filter(|(_, v)| !(*v >= m0 * (1.0 - 1e-12)))
        .min_by(|a, b| a.1.total_cmp(&b.1));
    reports.push(match below {
        None => ConditionReport::new(ConditionId::M1, Verdict::Holds, vec![values[0]], format!("M(t) >= m0 = {m0} at every sample")),
        Some(&(t, v)) if v.is_nan() => ConditionReport::new(ConditionId::M1, Verdict::Inconclusive, vec![(t, v)], "M is NaN at a sample"),
        Some(&ev) => ConditionReport::new(ConditionId::M1, Verdict::Fails, vec![ev], format!("M({}) = {:.6e} < m0 = {m0}", ev.0, ev.1)),
    });
    if dimension == 2 {
        return Ok(reports);
    }

    let nf = dimension as f64;
    let g = sample(&points, |t| m.antideriv(t) - (1.0 - 2.0 / nf) * m.eval(t) * t);
    reports.push(classify_diverging_up(ConditionId::M2, grid, &g, "M̂(t) - (1 - 2/N) M(t) t"));
    let growth = 2.0 / (nf - 2.0);
    let phi = sample(&points, |t| m.eval(t) / t.powf(growth));
    reports.push(classify_vanishing(ConditionId::M3, grid, &phi, &format!("M(t)/t^{growth}")));
    reports.push(classify_limsup_nonpositive(ConditionId::M2p, grid, &g, "M̂(t) - (1 - 2/N) M(t) t"));
    Ok(reports)
}
