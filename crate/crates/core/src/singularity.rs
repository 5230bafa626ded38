//! Curvature norm, power-law fits and Hamilton's singularity types with the
//! time exponent 1/(1−p) of the flow.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::curvature::sectional;
use crate::flow::{FlowKind, Status, Trajectory};
use crate::geometry::{DiagonalMetric, GeometryKind};
use crate::linalg::fit_line;
use crate::{Error, Result};

/// sup |Rm|; on a homogeneous space the sup is attained everywhere, and for
/// a frame-diagonal curvature operator it is the largest |K(F_i∧F_j)|.
pub fn curvature_norm(kind: GeometryKind, g: &DiagonalMetric) -> Result<f64> {
    Ok(sectional(kind, g)?.max_abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitLaw {
    /// value ≈ coefficient · t^exponent
    Power,
    /// value ≈ coefficient · e^{exponent·t}
    Exponential,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticFit {
    pub law: FitLaw,
    pub exponent: f64,
    pub coefficient: f64,
    /// RMS residual of the fit in log(value).
    pub residual: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

fn windowed(samples: &[(f64, f64)], window: (f64, f64)) -> Result<(Vec<f64>, Vec<f64>)> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::FitFailed(format!("empty window ({lo}, {hi})")));
    }
    let inside: Vec<(f64, f64)> = samples.iter().copied().filter(|&(t, _)| t >= lo && t <= hi).collect();
    if inside.len() < 16 {
        return Err(Error::FitFailed(format!(
            "window ({lo:e}, {hi:e}) holds {} samples, need at least 16",
            inside.len()
        )));
    }
    if let Some(&(t, v)) = inside.iter().find(|&&(_, v)| !(v > 0.0 && v.is_finite())) {
        return Err(Error::FitFailed(format!("nonpositive value {v} at t = {t}")));
    }
    Ok(inside.into_iter().unzip())
}

/// Least-squares line in (log t, log value).
pub fn fit_power_law(samples: &[(f64, f64)], window: (f64, f64)) -> Result<AsymptoticFit> {
    let (ts, vs) = windowed(samples, window)?;
    if ts.iter().any(|&t| t <= 0.0) {
        return Err(Error::FitFailed("power law needs positive abscissae".into()));
    }
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = vs.iter().map(|v| v.ln()).collect();
    let (c0, c1, res) = fit_line(&lx, &ly)?;
    Ok(AsymptoticFit { law: FitLaw::Power, exponent: c1, coefficient: c0.exp(), residual: res, window, samples: ts.len() })
}

/// Least-squares line in (t, log value).
pub fn fit_exponential(samples: &[(f64, f64)], window: (f64, f64)) -> Result<AsymptoticFit> {
    let (ts, vs) = windowed(samples, window)?;
    let ly: Vec<f64> = vs.iter().map(|v| v.ln()).collect();
    let (c0, c1, res) = fit_line(&ts, &ly)?;
    Ok(AsymptoticFit {
        law: FitLaw::Exponential,
        exponent: c1,
        coefficient: c0.exp(),
        residual: res,
        window,
        samples: ts.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SingularityType {
    I,
    IIa,
    IIb,
    III,
}

impl fmt::Display for SingularityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SingularityType::I => "I",
            SingularityType::IIa => "IIa",
            SingularityType::IIb => "IIb",
            SingularityType::III => "III",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    /// Bound on |exponent| of the scaled curvature that still counts as bounded.
    pub threshold: f64,
    /// Width of the fit window in decades.
    pub decades: f64,
    /// Power fits worse than this are compared against an exponential fit.
    pub residual_tol: f64,
    /// Smallest usable T₀ − t, in units of ε·T₀; below it the difference of
    /// two nearly equal doubles has lost too many digits.
    pub resolvable_ulps: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig { threshold: 0.05, decades: 2.0, residual_tol: 0.02, resolvable_ulps: 1e6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularityReport {
    pub geometry: GeometryKind,
    pub flow: FlowKind,
    #[serde(rename = "type")]
    pub singularity_type: SingularityType,
    pub p: i32,
    #[serde(rename = "T0")]
    pub t0: Option<f64>,
    pub exponent: f64,
    pub residual: f64,
    pub scaled_fit: AsymptoticFit,
    /// Whether the type survives moving T₀ by ± its fit residual.
    pub stable: bool,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub m_history: Vec<(f64, f64)>,
}

pub fn classify(traj: &Trajectory) -> Result<SingularityReport> {
    classify_with(traj, &ClassifierConfig::default())
}

pub fn classify_with(traj: &Trajectory, cfg: &ClassifierConfig) -> Result<SingularityReport> {
    let p = traj.flow.p();
    let power = 1.0 / (1.0 - f64::from(p));
    let m_history: Vec<(f64, f64)> =
        traj.samples.iter().map(|s| (s.t, traj.curvatures(s).max_abs())).collect();
    let mut notes = Vec::new();

    let (kind, t0, fit, stable) = match traj.status {
        Status::HorizonReached { .. } => {
            let Some(&(t_hi, _)) = m_history.iter().rev().find(|&&(t, m)| t > 0.0 && m > 0.0) else {
                notes.push("curvature vanishes identically (flat metric)".into());
                let fit = AsymptoticFit {
                    law: FitLaw::Power,
                    exponent: 0.0,
                    coefficient: 0.0,
                    residual: 0.0,
                    window: (traj.t_first(), traj.t_last()),
                    samples: m_history.len(),
                };
                return Ok(report(traj, SingularityType::III, None, fit, true, notes, m_history));
            };
            if t_hi < traj.t_last() {
                notes.push(format!("curvature underflows to 0 after t = {t_hi:.6e}; window ends there"));
            }
            let window = (t_hi / 10f64.powf(cfg.decades), t_hi);
            let scaled = resample(traj, window, Spacing::Log, |t, m| t.powf(power) * m)?;
            let mut fit = fit_power_law(&scaled, window)?;
            if fit.residual > cfg.residual_tol {
                let plain = resample(traj, window, Spacing::Linear, |_, m| m)?;
                let expo = fit_exponential(&plain, window)?;
                if expo.exponent < 0.0 && expo.residual < fit.residual {
                    notes.push(format!(
                        "curvature decays exponentially (rate {:.6e}); scaled curvature bounded",
                        -expo.exponent
                    ));
                    fit = expo;
                }
            }
            let ty = match fit.law {
                FitLaw::Exponential => SingularityType::III,
                FitLaw::Power if fit.exponent > cfg.threshold => SingularityType::IIb,
                FitLaw::Power => SingularityType::III,
            };
            (ty, None, fit, true)
        }
        Status::BlowUp { t0_estimate, t0_residual, .. } => {
            let fit_at = |t0: f64| -> Result<AsymptoticFit> {
                let tau_min = t0 - traj.t_last();
                let lo = tau_min.max(cfg.resolvable_ulps * f64::EPSILON * t0.abs());
                let hi = lo * 10f64.powf(cfg.decades);
                if t0 - hi < traj.t_first() {
                    return Err(Error::FitFailed("trajectory too short for the blow-up window".into()));
                }
                let scaled: Vec<(f64, f64)> = log_space(lo, hi, RESAMPLE)
                    .into_iter()
                    .map(|tau| {
                        let s = traj.eval(t0 - tau)?;
                        Ok((tau, tau.powf(power) * traj.curvatures(&s).max_abs()))
                    })
                    .collect::<Result<_>>()?;
                fit_power_law(&scaled, (lo, hi))
            };
            let type_of = |fit: &AsymptoticFit| {
                if fit.exponent < -cfg.threshold || !fit.coefficient.is_finite() {
                    SingularityType::IIa
                } else {
                    SingularityType::I
                }
            };
            let fit = fit_at(t0_estimate)?;
            let ty = type_of(&fit);
            let mut stable = true;
            for shifted in [t0_estimate - t0_residual, t0_estimate + t0_residual] {
                if shifted > traj.t_last() {
                    if let Ok(f) = fit_at(shifted) {
                        stable &= type_of(&f) == ty;
                    }
                }
            }
            if traj.kind == GeometryKind::Sol && traj.flow == FlowKind::XCFMinus && ty == SingularityType::I {
                notes.push(
                    "blow-up rate (T0-t)^(-1/2) keeps (T0-t)^(1/2)·M bounded: Type I. \
                     A Type IIa label for Sol under -XCF is inconsistent with this rate."
                        .into(),
                );
            }
            (ty, Some(t0_estimate), fit, stable)
        }
    };
    Ok(report(traj, kind, t0, fit, stable, notes, m_history))
}

const RESAMPLE: usize = 256;

#[derive(Clone, Copy)]
enum Spacing {
    Log,
    Linear,
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp().clamp(lo, hi)).collect()
}

/// Evaluates `f(t, M(t))` on a fixed grid over `window` through the dense
/// output, so that fits do not depend on where the integrator stepped.
fn resample<F>(traj: &Trajectory, window: (f64, f64), spacing: Spacing, f: F) -> Result<Vec<(f64, f64)>>
where
    F: Fn(f64, f64) -> f64,
{
    let (lo, hi) = (window.0.max(traj.t_first()), window.1.min(traj.t_last()));
    let ts = match spacing {
        Spacing::Log => log_space(lo, hi, RESAMPLE),
        Spacing::Linear => (0..RESAMPLE).map(|i| lo + (hi - lo) * i as f64 / (RESAMPLE - 1) as f64).collect(),
    };
    ts.into_iter()
        .map(|t| {
            let s = traj.eval(t)?;
            Ok((t, f(t, traj.curvatures(&s).max_abs())))
        })
        .collect()
}

fn report(
    traj: &Trajectory,
    ty: SingularityType,
    t0: Option<f64>,
    fit: AsymptoticFit,
    stable: bool,
    notes: Vec<String>,
    m_history: Vec<(f64, f64)>,
) -> SingularityReport {
    SingularityReport {
        geometry: traj.kind,
        flow: traj.flow,
        singularity_type: ty,
        p: traj.flow.p(),
        t0,
        exponent: fit.exponent,
        residual: fit.residual,
        scaled_fit: fit,
        stable,
        notes,
        m_history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{integrate, IntegratorConfig};

    fn dm(a: f64, b: f64, c: f64) -> DiagonalMetric {
        DiagonalMetric::new(a, b, c).unwrap()
    }

    #[test]
    fn norm_examples() {
        assert_eq!(curvature_norm(GeometryKind::Nil, &dm(1.0, 1.0, 1.0)).unwrap(), 0.75);
        assert_eq!(curvature_norm(GeometryKind::IsomE2Tilde, &dm(2.0, 2.0, 1.0)).unwrap(), 0.0);
        assert_eq!(curvature_norm(GeometryKind::SL2Tilde, &dm(1.0, 1.0, 1.0)).unwrap(), 1.75);
    }

    #[test]
    fn exact_power_law() {
        let s: Vec<(f64, f64)> = (0..40).map(|i| 10f64.powf(f64::from(i) / 10.0)).map(|t| (t, 5.0 * t * t)).collect();
        let f = fit_power_law(&s, (1.0, 1e4)).unwrap();
        assert!((f.exponent - 2.0).abs() < 1e-12);
        assert!((f.coefficient - 5.0).abs() < 1e-10);
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn fit_domain_errors() {
        let s: Vec<(f64, f64)> = (1..40).map(|i| (f64::from(i), if i == 7 { 0.0 } else { 1.0 })).collect();
        assert!(matches!(fit_power_law(&s, (1.0, 40.0)), Err(Error::FitFailed(_))));
        assert!(fit_power_law(&s[..5], (1.0, 5.0)).is_err());
    }

    #[test]
    fn nil_curvature_decay_rates() {
        let cfg = IntegratorConfig::default();
        let tr = integrate(FlowKind::RicciFlow, GeometryKind::Nil, &dm(1.0, 1.0, 1.0), 1e6, &cfg).unwrap();
        let m: Vec<(f64, f64)> = tr.samples.iter().map(|s| (s.t, tr.curvatures(s).max_abs())).collect();
        let f = fit_power_law(&m, (1e4, 1e6)).unwrap();
        assert!((f.exponent + 1.0).abs() < 0.01);
        let tr = integrate(FlowKind::XCFMinus, GeometryKind::Nil, &dm(1.0, 1.0, 1.0), 1e6, &cfg).unwrap();
        let m: Vec<(f64, f64)> = tr.samples.iter().map(|s| (s.t, tr.curvatures(s).max_abs())).collect();
        let f = fit_power_law(&m, (1e4, 1e6)).unwrap();
        assert!((f.exponent + 0.5).abs() < 0.01);
    }

    #[test]
    fn flat_trajectory_is_type_three() {
        let tr = integrate(FlowKind::RicciFlow, GeometryKind::IsomE2Tilde, &dm(1.0, 1.0, 3.0), 100.0, &IntegratorConfig::default())
            .unwrap();
        let r = classify(&tr).unwrap();
        assert_eq!(r.singularity_type, SingularityType::III);
        assert!(r.t0.is_none());
    }
}
