//! Ricci flow and ±cross curvature flow as ODEs on the frame coefficients.
//!
//! The integrator works on logarithmic variables. For the geometry's split
//! pair (i, j) let `m = ½(ln g_i + ln g_j)`, `r = ½(ln g_i − ln g_j)` and
//! `ℓ_k = ln g_k`; the difference `g_i − g_j = 2eᵐ sinh r` is then known to
//! full relative precision. Since `dr/dt` is proportional to `sinh r` for all
//! four geometries, `r` never changes sign, and the state is `(m, ln|r|, ℓ_k)`
//! with the sign of `r` frozen (r ≡ 0 on the symmetric slice). This keeps an
//! exponentially decaying difference (Isõm(E²) and SL̃(2,ℝ) under RF) smooth
//! in the state instead of letting it sink into the rounding floor, where it
//! would fake a persistent curvature.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::curvature::{sectional_with_gap, SectionalCurvatures};
use crate::geometry::{DiagonalMetric, GeometryKind};
use crate::linalg::fit_line;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FlowKind {
    #[serde(rename = "rf")]
    RicciFlow,
    #[serde(rename = "xcf-")]
    XCFMinus,
    #[serde(rename = "xcf+")]
    XCFPlus,
}

impl FlowKind {
    pub const ALL: [FlowKind; 3] = [FlowKind::RicciFlow, FlowKind::XCFMinus, FlowKind::XCFPlus];

    /// Scaling exponent of the velocity: v(cg) = c^p v(g).
    pub fn p(self) -> i32 {
        match self {
            FlowKind::RicciFlow => 0,
            _ => -1,
        }
    }

    /// ∂g/∂t = −2·sign·v.
    pub fn sign(self) -> f64 {
        match self {
            FlowKind::XCFPlus => -1.0,
            _ => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FlowKind::RicciFlow => "rf",
            FlowKind::XCFMinus => "xcf-",
            FlowKind::XCFPlus => "xcf+",
        }
    }
}

impl fmt::Display for FlowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FlowKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rf" | "ricci" => Ok(FlowKind::RicciFlow),
            "xcf-" | "xcf" | "-xcf" | "xcfminus" => Ok(FlowKind::XCFMinus),
            "xcf+" | "+xcf" | "xcfplus" => Ok(FlowKind::XCFPlus),
            _ => Err(Error::InvalidInput(format!("unknown flow '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Blow-up is declared once max(A, B, C, 1/A, 1/B, 1/C) exceeds this.
    pub blowup_threshold: f64,
    pub max_steps: usize,
    pub initial_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: f64::INFINITY,
            blowup_threshold: 1e12,
            max_steps: 5_000_000,
            initial_step: 1e-4,
        }
    }
}

impl IntegratorConfig {
    pub fn tight() -> Self {
        IntegratorConfig { rel_tol: 1e-13, abs_tol: 1e-15, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.rel_tol > 0.0
            && self.abs_tol > 0.0
            && self.max_step > 0.0
            && self.blowup_threshold > 1.0
            && self.initial_step > 0.0
            && self.max_steps > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid integrator configuration {self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub g: DiagonalMetric,
    /// g_i − g_j for the geometry's split pair, carried at full precision.
    pub gap: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status")]
pub enum Status {
    HorizonReached { t_end: f64 },
    /// `t0_residual` is the RMS misfit of the blow-up line fit, in time units;
    /// `rate_exponent` is γ in ln g ∼ −γ ln(T₀ − t) for the fastest coefficient.
    BlowUp { t0_estimate: f64, t0_residual: f64, rate_exponent: f64 },
}

/// Dormand–Prince continuous extension on one accepted step.
#[derive(Clone, Copy, Debug, PartialEq)]
struct DenseSegment {
    t0: f64,
    h: f64,
    y0: [f64; 3],
    r: [[f64; 3]; 4],
}

impl DenseSegment {
    fn eval(&self, t: f64) -> [f64; 3] {
        let th = ((t - self.t0) / self.h).clamp(0.0, 1.0);
        let th1 = 1.0 - th;
        let mut y = [0.0; 3];
        for (c, yc) in y.iter_mut().enumerate() {
            let r = &self.r;
            *yc = self.y0[c] + th * (r[0][c] + th1 * (r[1][c] + th * (r[2][c] + th1 * r[3][c])));
        }
        y
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub flow: FlowKind,
    pub kind: GeometryKind,
    pub samples: Vec<Sample>,
    pub status: Status,
    split: Split,
    segments: Vec<DenseSegment>,
}

impl Trajectory {
    pub fn t_first(&self) -> f64 {
        self.samples[0].t
    }

    pub fn t_last(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    pub fn last(&self) -> &Sample {
        &self.samples[self.samples.len() - 1]
    }

    pub fn t0(&self) -> Option<f64> {
        match self.status {
            Status::BlowUp { t0_estimate, .. } => Some(t0_estimate),
            Status::HorizonReached { .. } => None,
        }
    }

    /// Dense-output evaluation at any time inside the integrated interval.
    pub fn eval(&self, t: f64) -> Result<Sample> {
        let (lo, hi) = (self.t_first(), self.t_last());
        if !(t >= lo && t <= hi) {
            return Err(Error::TimeOutOfRange { t, lo, hi });
        }
        let split = self.split;
        let idx = self.segments.partition_point(|s| s.t0 + s.h < t).min(self.segments.len() - 1);
        let y = self.segments[idx].eval(t);
        let (g, gap) = split.decode(&y);
        Ok(Sample { t, g, gap })
    }

    pub fn curvatures(&self, s: &Sample) -> SectionalCurvatures {
        sectional_with_gap(self.kind, &s.g, s.gap).expect("trajectory geometry is flowable")
    }
}

/// d(ln g_i)/dt for each frame coefficient.
pub fn log_rates(flow: FlowKind, kind: GeometryKind, g: &DiagonalMetric, gap: f64) -> Result<[f64; 3]> {
    let k = sectional_with_gap(kind, g, gap)?;
    Ok(log_rates_from(flow, &k))
}

fn log_rates_from(flow: FlowKind, k: &SectionalCurvatures) -> [f64; 3] {
    let pairs = [(k.k12, k.k31), (k.k12, k.k23), (k.k31, k.k23)];
    pairs.map(|(a, b)| match flow {
        FlowKind::RicciFlow => -2.0 * (a + b),
        FlowKind::XCFMinus => -2.0 * a * b,
        FlowKind::XCFPlus => 2.0 * a * b,
    })
}

/// (dA/dt, dB/dt, dC/dt).
pub fn rhs(flow: FlowKind, kind: GeometryKind, g: &DiagonalMetric) -> Result<[f64; 3]> {
    let (i, j, _) = kind.split_pair()?;
    g.validate()?;
    let l = log_rates(flow, kind, g, g.get(i) - g.get(j))?;
    Ok([g.a * l[0], g.b * l[1], g.c * l[2]])
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Split {
    kind: GeometryKind,
    i: usize,
    j: usize,
    k: usize,
    /// Sign of r, fixed along the flow.
    sigma: f64,
}

impl Split {
    fn of(kind: GeometryKind, g0: &DiagonalMetric) -> Result<Self> {
        let (i, j, k) = kind.split_pair()?;
        let sigma = (g0.get(i) - g0.get(j)).signum();
        let sigma = if g0.get(i) == g0.get(j) { 0.0 } else { sigma };
        Ok(Split { kind, i, j, k, sigma })
    }

    fn encode(&self, g: &DiagonalMetric) -> [f64; 3] {
        let (gi, gj) = (g.get(self.i), g.get(self.j));
        let r = 0.5 * ((gi - gj) / gj).ln_1p();
        let s = if self.sigma == 0.0 { 0.0 } else { r.abs().ln() };
        [0.5 * (gi.ln() + gj.ln()), s, g.get(self.k).ln()]
    }

    fn r(&self, y: &[f64; 3]) -> f64 {
        if self.sigma == 0.0 {
            0.0
        } else {
            self.sigma * y[1].exp()
        }
    }

    fn decode(&self, y: &[f64; 3]) -> (DiagonalMetric, f64) {
        let r = self.r(y);
        let mut v = [0.0; 3];
        v[self.i] = (y[0] + r).exp();
        v[self.j] = (y[0] - r).exp();
        v[self.k] = y[2].exp();
        let gap = 2.0 * y[0].exp() * r.sinh();
        (DiagonalMetric { a: v[0], b: v[1], c: v[2] }, gap)
    }

    /// Time derivative of (m, ln|r|, ℓ_k). `d ln|r|/dt = r'/r` is formed from
    /// the factored difference K_ik − K_jk = 4(g_i − g_j)F/(4ABC).
    fn derivative(&self, flow: FlowKind, y: &[f64; 3]) -> [f64; 3] {
        let (g, d) = self.decode(y);
        let k = sectional_with_gap(self.kind, &g, d).expect("flowable geometry");
        let l = log_rates_from(flow, &k);
        let ds = if self.sigma == 0.0 {
            0.0
        } else {
            let DiagonalMetric { a, b, c } = g;
            let (f, k_pair) = match self.kind {
                GeometryKind::Sol => (a + c, k.k31),
                GeometryKind::SL2Tilde => (a + b + c, k.k23),
                GeometryKind::IsomE2Tilde => (a + b, k.k12),
                _ => (0.0, k.k23),
            };
            let r = self.r(y);
            let sinhc = if r.abs() < 1e-4 { 1.0 + r * r / 6.0 } else { r.sinh() / r };
            // (g_i − g_j)/r
            let d_over_r = 2.0 * y[0].exp() * sinhc;
            let diff_over_r = d_over_r * f / (a * b * c);
            match flow {
                FlowKind::RicciFlow => -diff_over_r,
                FlowKind::XCFMinus => -k_pair * diff_over_r,
                FlowKind::XCFPlus => k_pair * diff_over_r,
            }
        };
        [0.5 * (l[self.i] + l[self.j]), ds, l[self.k]]
    }
}

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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn axpy(y: &[f64; 3], h: f64, terms: &[(f64, &[f64; 3])]) -> [f64; 3] {
    let mut out = *y;
    for (c, out_c) in out.iter_mut().enumerate() {
        let s: f64 = terms.iter().map(|(w, k)| w * k[c]).sum();
        *out_c += h * s;
    }
    out
}

/// Integrates from t = 0.
pub fn integrate(
    flow: FlowKind,
    kind: GeometryKind,
    g0: &DiagonalMetric,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    integrate_from(flow, kind, g0, 0.0, t_end, cfg)
}

pub fn integrate_from(
    flow: FlowKind,
    kind: GeometryKind,
    g0: &DiagonalMetric,
    t_start: f64,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    kind.require_flowable()?;
    g0.validate()?;
    cfg.validate()?;
    if !(t_end > t_start) || !t_start.is_finite() || !t_end.is_finite() {
        return Err(Error::InvalidInput(format!("need t_end > t_start, got [{t_start}, {t_end}]")));
    }
    let split = Split::of(kind, g0)?;
    let f = |y: &[f64; 3]| split.derivative(flow, y);

    let mut t = t_start;
    // Kahan compensation for t: near a blow-up thousands of steps of size
    // ~ulp(t)·10³ would otherwise drift the time labels by several ulps.
    let mut t_lo = 0.0;
    let mut y = split.encode(g0);
    let mut k1 = f(&y);
    let scale0 = k1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut h = cfg.initial_step.min(cfg.max_step).min(t_end - t_start);
    if scale0 > 0.0 {
        h = h.min(0.01 / scale0);
    }
    let mut samples = vec![Sample { t, g: *g0, gap: g0.get(split.i) - g0.get(split.j) }];
    let metric_rate = |g: &DiagonalMetric, gap: f64| log_rates(flow, kind, g, gap).map(|l| max_abs(&l));
    let mut rates = vec![(t, metric_rate(g0, samples[0].gap)?)];
    let mut segments = Vec::new();
    let mut steps = 0usize;
    let mut status = None;

    while status.is_none() {
        if steps >= cfg.max_steps {
            let partial = Trajectory { flow, kind, samples, status: Status::HorizonReached { t_end: t }, split, segments };
            return Err(Error::Incomplete { steps, t, partial: Box::new(partial) });
        }
        let last = t_end - t <= h;
        if last {
            h = t_end - t;
        }
        let k2 = f(&axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(&axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(&axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(&axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(&axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y1 = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(&y1);
        steps += 1;

        let mut err = 0.0;
        let mut finite = y1.iter().chain(k7.iter()).all(|v| v.is_finite());
        for c in 0..3 {
            let e = h * (E1 * k1[c] + E3 * k3[c] + E4 * k4[c] + E5 * k5[c] + E6 * k6[c] + E7 * k7[c]);
            let sc = cfg.abs_tol + cfg.rel_tol * y[c].abs().max(y1[c].abs());
            err += (e / sc).powi(2);
        }
        err = (err / 3.0).sqrt();
        finite &= err.is_finite();

        if finite && err <= 1.0 {
            let ydiff = [y1[0] - y[0], y1[1] - y[1], y1[2] - y[2]];
            let mut r = [[0.0; 3]; 4];
            for c in 0..3 {
                let bspl = h * k1[c] - ydiff[c];
                r[0][c] = ydiff[c];
                r[1][c] = bspl;
                r[2][c] = ydiff[c] - h * k7[c] - bspl;
                r[3][c] = h
                    * (D1 * k1[c] + D3 * k3[c] + D4 * k4[c] + D5 * k5[c] + D6 * k6[c] + D7 * k7[c]);
            }
            segments.push(DenseSegment { t0: t, h, y0: y, r });
            if last {
                t = t_end;
            } else {
                let y = h + t_lo;
                let sum = t + y;
                t_lo = y - (sum - t);
                t = sum;
            }
            y = y1;
            k1 = k7;
            let (g, gap) = split.decode(&y);
            samples.push(Sample { t, g, gap });
            rates.push((t, metric_rate(&g, gap)?));
            let extreme = g.as_array().iter().fold(0.0f64, |m, v| m.max(*v).max(1.0 / v));
            if last {
                status = Some(Status::HorizonReached { t_end });
            } else if extreme > cfg.blowup_threshold {
                status = Some(blowup_status(&rates, t));
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * fac).min(cfg.max_step);
        } else {
            let fac = if finite { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
            h *= fac;
        }
        if status.is_none() && h < 64.0 * f64::EPSILON * t.abs().max(1e-300) {
            status = Some(blowup_status(&rates, t));
        }
    }

    let status = status.expect("loop exits only with a status");
    Ok(Trajectory { flow, kind, samples, status, split, segments })
}

fn max_abs(v: &[f64; 3]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// T₀ from the straight line 1/|ℓ'| ≈ (T₀ − t)/γ over the last decade of
/// growth of the fastest logarithmic rate.
fn blowup_status(rates: &[(f64, f64)], t_last: f64) -> Status {
    let rate_last = rates[rates.len() - 1].1;
    let mut start = rates.len() - 1;
    while start > 0 && rates[start - 1].1 >= rate_last / 10.0 {
        start -= 1;
    }
    if rates.len() - start < 16 {
        start = rates.len().saturating_sub(16);
    }
    let (ts, inv): (Vec<f64>, Vec<f64>) = rates[start..].iter().map(|&(t, r)| (t, 1.0 / r)).unzip();
    let fallback = t_last + 0.5 / rate_last;
    match fit_line(&ts, &inv) {
        Ok((c0, c1, rms)) if c1 < 0.0 => {
            let t0 = (-c0 / c1).max(t_last + f64::EPSILON * t_last.abs().max(1e-300));
            Status::BlowUp { t0_estimate: t0, t0_residual: rms / c1.abs(), rate_exponent: -1.0 / c1 }
        }
        _ => Status::BlowUp { t0_estimate: fallback, t0_residual: 0.5 / rate_last, rate_exponent: 0.5 },
    }
}

/// Closed-form solutions for Nil under RF and −XCF.
pub fn closed_form(kind: GeometryKind, flow: FlowKind, g0: &DiagonalMetric, t: f64) -> Result<DiagonalMetric> {
    g0.validate()?;
    if kind != GeometryKind::Nil || flow == FlowKind::XCFPlus {
        return Err(Error::NoClosedForm(format!("{kind}/{flow}")));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidInput(format!("closed form needs t ≥ 0, got {t}")));
    }
    let DiagonalMetric { a, b, c } = *g0;
    let (base, ea, ebc) = match flow {
        FlowKind::RicciFlow => (3.0 * a / (b * c) * t + 1.0, -1.0 / 3.0, 1.0 / 3.0),
        _ => {
            let r0 = -a / (2.0 * b * c);
            (7.0 * r0 * r0 * t + 1.0, -1.0 / 14.0, 3.0 / 14.0)
        }
    };
    DiagonalMetric::new(a * base.powf(ea), b * base.powf(ebc), c * base.powf(ebc))
}

/// Which asymptotic branch a solution follows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Generic,
    /// SL̃(2,ℝ) with B₀ = C₀, where −XCF exists for all time.
    Balanced,
}

impl Regime {
    pub fn of(kind: GeometryKind, g0: &DiagonalMetric) -> Regime {
        if kind == GeometryKind::SL2Tilde && g0.b == g0.c {
            Regime::Balanced
        } else {
            Regime::Generic
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Clock {
    /// Powers of t as t → ∞.
    Forward,
    /// Powers of T₀ − t as t → T₀.
    ToBlowUp,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Lead {
    Known(f64),
    Fit,
    /// (scale·A_∞)^power with A_∞ the fitted limit of A.
    PowerOfLimitA { scale: f64, power: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Law {
    Power { exponent: f64, lead: Lead },
    /// e^{−rate·t} with the rate fitted.
    ExponentialDecay,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticSpec {
    pub clock: Clock,
    pub coefficients: [Law; 3],
    /// (i, j, law of g_i − g_j) where a difference is tracked.
    pub difference: Option<(usize, usize, Law)>,
}

pub fn asymptotic_reference(kind: GeometryKind, flow: FlowKind, regime: Regime) -> Result<AsymptoticSpec> {
    use Law::Power;
    let pw = |exponent: f64| Power { exponent, lead: Lead::Fit };
    let known = |exponent: f64, c: f64| Power { exponent, lead: Lead::Known(c) };
    let spec = match (kind, flow, regime) {
        (GeometryKind::Nil, FlowKind::RicciFlow, _) => AsymptoticSpec {
            clock: Clock::Forward,
            coefficients: [pw(-1.0 / 3.0), pw(1.0 / 3.0), pw(1.0 / 3.0)],
            difference: None,
        },
        (GeometryKind::Nil, FlowKind::XCFMinus, _) => AsymptoticSpec {
            clock: Clock::Forward,
            coefficients: [pw(-1.0 / 14.0), pw(3.0 / 14.0), pw(3.0 / 14.0)],
            difference: None,
        },
        (GeometryKind::Sol, FlowKind::RicciFlow, _) => AsymptoticSpec {
            clock: Clock::Forward,
            coefficients: [pw(0.0), known(1.0, 4.0), pw(0.0)],
            difference: Some((0, 2, pw(-1.0))),
        },
        (GeometryKind::Sol, FlowKind::XCFMinus, _) => AsymptoticSpec {
            clock: Clock::ToBlowUp,
            coefficients: [pw(-0.5), known(0.5, 2.0), pw(-0.5)],
            difference: Some((0, 2, pw(0.5))),
        },
        (GeometryKind::SL2Tilde, FlowKind::RicciFlow, _) => AsymptoticSpec {
            clock: Clock::Forward,
            coefficients: [pw(0.0), known(1.0, 2.0), known(1.0, 2.0)],
            difference: None,
        },
        (GeometryKind::SL2Tilde, FlowKind::XCFMinus, Regime::Balanced) => {
            let b = Power { exponent: 1.0 / 3.0, lead: Lead::PowerOfLimitA { scale: 1.5, power: 1.0 / 3.0 } };
            AsymptoticSpec { clock: Clock::Forward, coefficients: [pw(0.0), b, b], difference: None }
        }
        (GeometryKind::SL2Tilde, FlowKind::XCFMinus, Regime::Generic) => AsymptoticSpec {
            clock: Clock::ToBlowUp,
            coefficients: [pw(-0.5), pw(-0.5), known(0.5, 2.0)],
            difference: None,
        },
        (GeometryKind::IsomE2Tilde, FlowKind::RicciFlow, _) => AsymptoticSpec {
            clock: Clock::Forward,
            coefficients: [pw(0.0), pw(0.0), pw(0.0)],
            difference: Some((0, 1, Law::ExponentialDecay)),
        },
        (GeometryKind::IsomE2Tilde, FlowKind::XCFMinus, _) => AsymptoticSpec {
            clock: Clock::Forward,
            coefficients: [pw(0.0), pw(0.0), pw(1.0 / 3.0)],
            difference: Some((0, 1, pw(-1.0 / 6.0))),
        },
        _ => return Err(Error::NoClosedForm(format!("no asymptotic reference for {kind}/{flow}"))),
    };
    Ok(spec)
}
