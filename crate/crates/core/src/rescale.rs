//! Parabolic rescalings of a flow, pullbacks by coordinate scalings and
//! numerical limits compared against named reference metrics.
//!
//! A rescaled solution is `g_s(t) = f(s)·g(m_s(t))` with `f(s) = s^q` and
//! `m_s(t) = (t − 1)/f(s)^{1−p} + s` (forward, s → ∞), or the same with the
//! time read backwards from the blow-up time, `g(T₀ − m_s(t))` (s → 0).
//! With the default `q = −1/(1−p)` these are `s^q g(st)` and `s^q g(T₀ − st)`.

use nalgebra::{DMatrix, DVector, Matrix3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::flow::{integrate, FlowKind, IntegratorConfig, Regime, Trajectory};
use crate::geometry::{metric_from_coframe, ChartPoint, CoordinateMetric, DiagonalMetric, GeometryKind};
use crate::linalg::least_squares;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// T = ∞, s → ∞.
    Forward,
    /// T = T₀ < ∞, s → 0.
    Backward,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RescalingFamily {
    pub direction: Direction,
    /// q in f(s) = s^q.
    pub f_exponent: f64,
    pub p: i32,
    #[serde(rename = "T0")]
    pub t0: Option<f64>,
}

impl RescalingFamily {
    /// The Type III family `s^{−1/(1−p)} g(st)`.
    pub fn forward(flow: FlowKind) -> Self {
        let p = flow.p();
        RescalingFamily { direction: Direction::Forward, f_exponent: -1.0 / f64::from(1 - p), p, t0: None }
    }

    /// The Type I family `s^{−1/(1−p)} g(T₀ − st)`.
    pub fn backward(flow: FlowKind, t0: f64) -> Self {
        let p = flow.p();
        RescalingFamily { direction: Direction::Backward, f_exponent: -1.0 / f64::from(1 - p), p, t0: Some(t0) }
    }

    pub fn with_exponent(mut self, q: f64) -> Self {
        self.f_exponent = q;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.direction == Direction::Backward && !self.t0.is_some_and(f64::is_finite) {
            return Err(Error::InvalidInput("a backward rescaling needs a finite T0".into()));
        }
        if !self.f_exponent.is_finite() {
            return Err(Error::InvalidInput(format!("f exponent {} is not finite", self.f_exponent)));
        }
        Ok(())
    }

    pub fn factor(&self, s: f64) -> f64 {
        s.powf(self.f_exponent)
    }

    /// Time of the original solution that `g_s(t)` reads.
    pub fn mapped_time(&self, s: f64, t: f64) -> f64 {
        let stretch = s.powf(-self.f_exponent * f64::from(1 - self.p));
        let m = (t - 1.0) * stretch + s;
        match self.direction {
            Direction::Forward => m,
            Direction::Backward => self.t0.unwrap_or(f64::NAN) - m,
        }
    }

    /// Sign of `∂_t g_s` relative to `−2v(g_s)`: the backward family solves
    /// the flow with time reversed.
    pub fn time_sign(&self) -> f64 {
        match self.direction {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

/// s-independent chart maps applied before the power scaling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PostMap {
    None,
    /// ψ(x, y, θ) = (eʸx, eʸ, θ + x), which carries the Sol limit chart into
    /// the upper half-plane chart of SL̃(2,ℝ).
    SolToUpperHalfPlane,
}

impl PostMap {
    fn apply(self, p: &ChartPoint) -> ChartPoint {
        match self {
            PostMap::None => *p,
            PostMap::SolToUpperHalfPlane => {
                let [x, y, th] = p.0;
                let e = y.exp();
                ChartPoint([e * x, e, th + x])
            }
        }
    }

    fn inverse(self, q: &ChartPoint) -> Result<ChartPoint> {
        match self {
            PostMap::None => Ok(*q),
            PostMap::SolToUpperHalfPlane => {
                let [x, y, th] = q.0;
                if !(y > 0.0) {
                    return Err(Error::OutOfDomain(q.0));
                }
                Ok(ChartPoint([x / y, y.ln(), th - x / y]))
            }
        }
    }

    fn jacobian(self, p: &ChartPoint) -> Matrix3<f64> {
        match self {
            PostMap::None => Matrix3::identity(),
            PostMap::SolToUpperHalfPlane => {
                let [x, y, _] = p.0;
                let e = y.exp();
                Matrix3::new(e, e * x, 0.0, 0.0, e, 0.0, 1.0, 0.0, 1.0)
            }
        }
    }
}

/// φ_s = (power scaling) ∘ (post map):
/// p ↦ (s^{e₁}q₁, s^{e₂}q₂, s^{e₃}q₃) with q the post-mapped point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoordinateScaling {
    pub exponents: [f64; 3],
    pub post_map: PostMap,
}

impl CoordinateScaling {
    pub fn identity() -> Self {
        CoordinateScaling { exponents: [0.0; 3], post_map: PostMap::None }
    }

    pub fn new(exponents: [f64; 3]) -> Self {
        CoordinateScaling { exponents, post_map: PostMap::None }
    }

    pub fn with_post_map(mut self, post_map: PostMap) -> Self {
        self.post_map = post_map;
        self
    }

    fn factors(&self, s: f64) -> [f64; 3] {
        self.exponents.map(|e| if e == 0.0 { 1.0 } else { s.powf(e) })
    }

    pub fn apply(&self, s: f64, p: &ChartPoint) -> ChartPoint {
        let q = self.post_map.apply(p);
        let f = self.factors(s);
        ChartPoint([f[0] * q.0[0], f[1] * q.0[1], f[2] * q.0[2]])
    }

    pub fn inverse(&self, s: f64, q: &ChartPoint) -> Result<ChartPoint> {
        let f = self.factors(s);
        self.post_map.inverse(&ChartPoint([q.0[0] / f[0], q.0[1] / f[1], q.0[2] / f[2]]))
    }

    pub fn jacobian(&self, s: f64, p: &ChartPoint) -> Matrix3<f64> {
        Matrix3::from_diagonal(&self.factors(s).into()) * self.post_map.jacobian(p)
    }
}

/// (φ_s^* g)(p) = Jᵀ g(φ_s(p)) J.
pub fn pullback<F>(metric: F, map: &CoordinateScaling, s: f64, point: &ChartPoint) -> Result<CoordinateMetric>
where
    F: Fn(&ChartPoint) -> Result<CoordinateMetric>,
{
    let j = map.jacobian(s, point);
    let g = metric(&map.apply(s, point))?;
    let m = j.transpose() * g * j;
    Ok((m + m.transpose()) * 0.5)
}

/// Frame coefficients of `g_s(t) = f(s) g(m_s(t))`.
pub fn rescaled_metric(traj: &Trajectory, family: &RescalingFamily, s: f64, t: f64) -> Result<DiagonalMetric> {
    family.validate()?;
    if !(s > 0.0) {
        return Err(Error::InvalidInput(format!("rescaling parameter must be positive, got {s}")));
    }
    let tau = family.mapped_time(s, t);
    let sample = traj.eval(tau)?;
    Ok(sample.g.scaled(family.factor(s)))
}

/// `(φ_s^* g_s(t))(p)` in chart coordinates.
pub fn rescaled_coordinate_metric(
    traj: &Trajectory,
    family: &RescalingFamily,
    scaling: &CoordinateScaling,
    s: f64,
    t: f64,
    p: &ChartPoint,
) -> Result<CoordinateMetric> {
    let g = rescaled_metric(traj, family, s, t)?;
    pullback(|q| metric_from_coframe(traj.kind, g.as_array(), q), scaling, s, p)
}

/// Named limit metrics. Each is `Σ wᵢ(t) ωᵢ²` on the coframe of `chart`,
/// with `wᵢ(t) = factorᵢ · κ[constantᵢ] · t^{powerᵢ}` and the constants κ
/// fitted by linear least squares.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceMetric {
    pub name: String,
    pub chart: GeometryKind,
    pub constant_names: Vec<String>,
    pub constant_index: [usize; 3],
    pub factors: [f64; 3],
    pub time_powers: [f64; 3],
}

impl ReferenceMetric {
    pub fn weights(&self, constants: &[f64], t: f64) -> [f64; 3] {
        std::array::from_fn(|i| self.factors[i] * constants[self.constant_index[i]] * t.powf(self.time_powers[i]))
    }

    pub fn eval(&self, constants: &[f64], t: f64, p: &ChartPoint) -> Result<CoordinateMetric> {
        metric_from_coframe(self.chart, self.weights(constants, t), p)
    }

    /// Least-squares constants for a set of (t, point, metric) samples.
    pub fn fit(&self, data: &[(f64, ChartPoint, CoordinateMetric)]) -> Result<Vec<f64>> {
        let n = self.constant_names.len();
        let rows = data.len() * 6;
        let mut m = DMatrix::zeros(rows, n);
        let mut b = DVector::zeros(rows);
        let upper = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
        for (d, (t, p, g)) in data.iter().enumerate() {
            for k in 0..n {
                let mut w = [0.0; 3];
                for i in 0..3 {
                    if self.constant_index[i] == k {
                        w[i] = self.factors[i] * t.powf(self.time_powers[i]);
                    }
                }
                let basis = metric_from_coframe(self.chart, w, p)?;
                for (r, &(i, j)) in upper.iter().enumerate() {
                    m[(6 * d + r, k)] = basis[(i, j)];
                }
            }
            for (r, &(i, j)) in upper.iter().enumerate() {
                b[6 * d + r] = g[(i, j)];
            }
        }
        Ok(least_squares(&m, &b)?.iter().copied().collect())
    }
}

fn reference(
    name: &str,
    chart: GeometryKind,
    constants: &[&str],
    constant_index: [usize; 3],
    factors: [f64; 3],
    time_powers: [f64; 3],
) -> ReferenceMetric {
    ReferenceMetric {
        name: name.into(),
        chart,
        constant_names: constants.iter().map(|s| s.to_string()).collect(),
        constant_index,
        factors,
        time_powers,
    }
}

/// One of the worked limits: solution, rescaling, scaling map and reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitCase {
    pub name: String,
    pub geometry: GeometryKind,
    pub flow: FlowKind,
    pub regime: Regime,
    pub initial: DiagonalMetric,
    pub direction: Direction,
    /// Overrides the default f exponent −1/(1−p).
    pub f_exponent: Option<f64>,
    pub scaling: CoordinateScaling,
    pub reference: ReferenceMetric,
    /// log₁₀ s from `schedule.0` to `schedule.1` in steps of `schedule.2`.
    pub schedule: (f64, f64, f64),
    pub times: Vec<f64>,
}

impl LimitCase {
    pub fn s_schedule(&self) -> Vec<f64> {
        let (a, b, step) = self.schedule;
        let n = ((b - a) / step).abs().round() as usize;
        (0..=n).map(|k| 10f64.powf(a + step.signum() * (b - a).signum() * step.abs() * k as f64)).collect()
    }

    /// Constants the asymptotic analysis predicts from the initial metric,
    /// the fitted constants and, for Isõm(E²) under −XCF, the decay constant
    /// E₂ = lim (A − B)t^{1/6} read off the trajectory.
    pub fn predicted_constants(&self, fitted: &[f64], traj: &Trajectory) -> Vec<Option<f64>> {
        let DiagonalMetric { a, b, c } = self.initial;
        match self.name.as_str() {
            "nil-rf" => {
                let k = 3.0 * a / (b * c);
                vec![Some(a * k.powf(-1.0 / 3.0)), Some(b * k.powf(1.0 / 3.0)), Some(c * k.powf(1.0 / 3.0))]
            }
            "nil-xcf" => {
                let r0 = -a / (2.0 * b * c);
                let k = 7.0 * r0 * r0;
                vec![Some(a * k.powf(-1.0 / 14.0)), Some(b * k.powf(3.0 / 14.0)), Some(c * k.powf(3.0 / 14.0))]
            }
            "sol-rf" => vec![Some(2.0 * (a * c).sqrt()), Some(4.0)],
            "sol-xcf" => vec![None, Some(2.0)],
            "sl2-rf" => vec![None, Some(2.0)],
            "sl2-xcf-beqc" => vec![None, Some((1.5 * fitted[0]).cbrt())],
            "sl2-xcf-bneqc" => vec![None, Some(2.0)],
            "isome2-rf" => {
                let e1 = (a * b).sqrt();
                let e2 = 0.5 * c * ((a / b).sqrt() + (b / a).sqrt());
                vec![Some(e1), Some(e2)]
            }
            "isome2-xcf" => {
                let last = traj.last();
                let e2 = last.gap * last.t.powf(1.0 / 6.0);
                vec![None, Some(6f64.sqrt() * e2 / fitted[0])]
            }
            _ => vec![None; self.reference.constant_names.len()],
        }
    }

    pub fn family(&self, t0: Option<f64>) -> Result<RescalingFamily> {
        let fam = match self.direction {
            Direction::Forward => RescalingFamily::forward(self.flow),
            Direction::Backward => RescalingFamily::backward(
                self.flow,
                t0.ok_or_else(|| Error::InvalidInput(format!("{}: the solution does not blow up", self.name)))?,
            ),
        };
        Ok(match self.f_exponent {
            Some(q) => fam.with_exponent(q),
            None => fam,
        })
    }

    /// Integration horizon that covers every mapped time of the schedule.
    pub fn horizon(&self) -> f64 {
        match self.direction {
            Direction::Backward => 1e6,
            Direction::Forward => {
                let fam = self.family(None).expect("forward family");
                let mut hi = 0.0f64;
                for s in self.s_schedule() {
                    for &t in &self.times {
                        hi = hi.max(fam.mapped_time(s, t));
                    }
                }
                hi * 1.01
            }
        }
    }

    pub fn sample_points(&self, n: usize, seed: u64) -> Vec<ChartPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let positive_y = self.scaling.post_map == PostMap::None && self.geometry.needs_positive_y();
        (0..n)
            .map(|_| {
                let y = if positive_y { rng.gen_range(0.5..2.0) } else { rng.gen_range(-1.0..1.0) };
                ChartPoint([rng.gen_range(-1.0..1.0), y, rng.gen_range(-1.0..1.0)])
            })
            .collect()
    }
}

/// Registry of the worked limits, keyed by `LimitCase::name`.
pub fn limit_cases() -> Vec<LimitCase> {
    use GeometryKind::*;
    let dm = |a, b, c| DiagonalMetric { a, b, c };
    let fwd_times = vec![0.5, 1.0, 2.0];
    let bwd_times = vec![0.25, 0.5, 1.0];
    let third = 1.0 / 3.0;
    vec![
        LimitCase {
            name: "nil-rf".into(),
            geometry: Nil,
            flow: FlowKind::RicciFlow,
            regime: Regime::Generic,
            initial: dm(1.0, 1.0, 1.0),
            direction: Direction::Forward,
            f_exponent: None,
            scaling: CoordinateScaling::new([third, third, 2.0 * third]),
            reference: reference("nil-soliton", Nil, &["a", "b", "c"], [0, 1, 2], [1.0; 3], [-third, third, third]),
            schedule: (1.0, 9.0, 1.0),
            times: fwd_times.clone(),
        },
        LimitCase {
            name: "nil-xcf".into(),
            geometry: Nil,
            flow: FlowKind::XCFMinus,
            regime: Regime::Generic,
            initial: dm(1.0, 1.0, 1.0),
            direction: Direction::Forward,
            f_exponent: None,
            scaling: CoordinateScaling::new([1.0 / 7.0, 1.0 / 7.0, 2.0 / 7.0]),
            reference: reference(
                "nil-xc-soliton",
                Nil,
                &["a", "b", "c"],
                [0, 1, 2],
                [1.0; 3],
                [-1.0 / 14.0, 3.0 / 14.0, 3.0 / 14.0],
            ),
            schedule: (1.0, 9.0, 1.0),
            times: fwd_times.clone(),
        },
        LimitCase {
            name: "sol-rf".into(),
            geometry: Sol,
            flow: FlowKind::RicciFlow,
            regime: Regime::Generic,
            initial: dm(2.0, 1.0, 1.0),
            direction: Direction::Forward,
            f_exponent: None,
            scaling: CoordinateScaling::new([0.5, 0.5, 0.0]),
            // a(e^{2z}dx² + e^{−2z}dy²) = (a/2)(ω₁² + ω₃²)
            reference: reference("sol-soliton", Sol, &["a", "k"], [0, 1, 0], [0.5, 1.0, 0.5], [0.0, 1.0, 0.0]),
            schedule: (1.0, 9.0, 1.0),
            times: fwd_times.clone(),
        },
        LimitCase {
            name: "sol-xcf".into(),
            geometry: Sol,
            flow: FlowKind::XCFMinus,
            regime: Regime::Generic,
            initial: dm(2.0, 1.0, 1.0),
            direction: Direction::Backward,
            f_exponent: None,
            scaling: CoordinateScaling::new([0.5, 0.5, 0.0]),
            reference: reference("sol-xc-soliton", Sol, &["E", "k"], [0, 1, 0], [1.0; 3], [-0.5, 0.5, -0.5]),
            schedule: (-1.0, -8.0, 1.0),
            times: bwd_times.clone(),
        },
        LimitCase {
            name: "sl2-rf".into(),
            geometry: SL2Tilde,
            flow: FlowKind::RicciFlow,
            regime: Regime::Generic,
            initial: dm(1.0, 2.0, 1.0),
            direction: Direction::Forward,
            f_exponent: None,
            scaling: CoordinateScaling::new([0.0, 0.0, 0.5]),
            reference: reference("h2xr", H2xR, &["A_inf", "k"], [0, 1, 1], [1.0; 3], [0.0, 1.0, 1.0]),
            schedule: (2.0, 15.0, 1.0),
            times: fwd_times.clone(),
        },
        LimitCase {
            name: "sl2-xcf-beqc".into(),
            geometry: SL2Tilde,
            flow: FlowKind::XCFMinus,
            regime: Regime::Balanced,
            initial: dm(1.0, 1.0, 1.0),
            direction: Direction::Forward,
            f_exponent: Some(-third),
            scaling: CoordinateScaling::new([0.0, 0.0, 1.0 / 6.0]),
            reference: reference("h2xr", H2xR, &["A_inf", "b"], [0, 1, 1], [1.0; 3], [0.0; 3]),
            schedule: (6.0, 54.0, 4.0),
            times: fwd_times.clone(),
        },
        LimitCase {
            name: "sl2-xcf-bneqc".into(),
            geometry: SL2Tilde,
            flow: FlowKind::XCFMinus,
            regime: Regime::Generic,
            initial: dm(1.0, 2.0, 1.0),
            direction: Direction::Backward,
            f_exponent: None,
            scaling: CoordinateScaling::new([0.5, 0.0, 0.5]).with_post_map(PostMap::SolToUpperHalfPlane),
            reference: reference("sol-xc-soliton", SolLimit, &["E", "k"], [0, 0, 1], [1.0; 3], [-0.5, -0.5, 0.5]),
            schedule: (-1.0, -9.0, 1.0),
            times: bwd_times.clone(),
        },
        LimitCase {
            name: "isome2-rf".into(),
            geometry: IsomE2Tilde,
            flow: FlowKind::RicciFlow,
            regime: Regime::Generic,
            initial: dm(2.0, 1.0, 1.0),
            direction: Direction::Forward,
            f_exponent: None,
            scaling: CoordinateScaling::new([0.5, 0.5, 0.5]),
            reference: reference("euclidean", Euclidean3, &["E1", "E2"], [0, 0, 1], [1.0; 3], [0.0; 3]),
            schedule: (1.0, 6.0, 1.0),
            times: fwd_times.clone(),
        },
        LimitCase {
            name: "isome2-xcf".into(),
            geometry: IsomE2Tilde,
            flow: FlowKind::XCFMinus,
            regime: Regime::Generic,
            initial: dm(2.0, 1.0, 1.0),
            direction: Direction::Forward,
            f_exponent: None,
            scaling: CoordinateScaling::new([0.25, 0.25, 1.0 / 12.0]),
            reference: reference("euclidean", Euclidean3, &["E1", "k"], [0, 0, 1], [1.0; 3], [0.0, 0.0, third]),
            schedule: (6.0, 46.0, 4.0),
            times: fwd_times,
        },
    ]
}

pub fn limit_case(name: &str) -> Result<LimitCase> {
    limit_cases()
        .into_iter()
        .find(|c| c.name == name)
        .ok_or_else(|| Error::InvalidInput(format!("unknown limit case '{name}'")))
}

/// Finds the worked case for a geometry/flow pair; `regime` separates the
/// two SL̃(2,ℝ) cross curvature cases.
pub fn limit_case_for(geometry: GeometryKind, flow: FlowKind, regime: Regime) -> Result<LimitCase> {
    limit_cases()
        .into_iter()
        .find(|c| c.geometry == geometry && c.flow == flow && c.regime == regime)
        .ok_or_else(|| Error::InvalidInput(format!("no worked limit for {geometry}/{flow} ({regime:?})")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitComparison {
    pub geometry: GeometryKind,
    pub flow: FlowKind,
    pub case: String,
    pub scaling_exponents: [f64; 3],
    pub post_map: PostMap,
    pub reference_name: String,
    pub fitted_constants: BTreeMap<String, f64>,
    pub predicted_constants: BTreeMap<String, f64>,
    /// sup |reference − limit| at the last s of the schedule.
    pub sup_error: f64,
    /// sup-differences between consecutive s of the schedule.
    pub cauchy_differences: Vec<f64>,
    pub converged: bool,
    pub s_schedule: Vec<f64>,
    pub sample_times: Vec<f64>,
    pub sample_points: Vec<ChartPoint>,
    #[serde(rename = "T0")]
    pub t0: Option<f64>,
    pub notes: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitConfig {
    pub tolerance: f64,
    pub points: usize,
    pub seed: u64,
    /// Differences below `floor · tolerance` count as settled even if they
    /// no longer decrease (they sit at rounding level).
    pub floor: f64,
}

impl Default for LimitConfig {
    fn default() -> Self {
        LimitConfig { tolerance: 1e-6, points: 20, seed: 42, floor: 1e-3 }
    }
}

fn sup_diff(a: &[CoordinateMetric], b: &[CoordinateMetric]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs().max()).fold(0.0, f64::max)
}

/// Numerical limit of `φ_s^* g_s(t)` along the schedule, checked for
/// Cauchy convergence and compared against the fitted reference.
#[allow(clippy::too_many_arguments)]
pub fn limit_metric(
    case: &LimitCase,
    traj: &Trajectory,
    family: &RescalingFamily,
    points: &[ChartPoint],
    times: &[f64],
    schedule: &[f64],
    cfg: &LimitConfig,
) -> Result<LimitComparison> {
    family.validate()?;
    if schedule.len() < 2 || points.is_empty() || times.is_empty() {
        return Err(Error::InvalidInput("limit needs ≥ 2 schedule values, points and times".into()));
    }
    let toward_limit = |a: f64, b: f64| match family.direction {
        Direction::Forward => b > a,
        Direction::Backward => b < a,
    };
    if !schedule.windows(2).all(|w| toward_limit(w[0], w[1])) {
        return Err(Error::InvalidInput("s schedule is not monotone toward the limit".into()));
    }
    let span = (schedule[schedule.len() - 1] / schedule[0]).log10().abs();
    if span < 4.0 - 1e-9 {
        return Err(Error::InvalidInput(format!("s schedule spans {span:.2} decades, need at least 4")));
    }

    let mut previous: Option<Vec<CoordinateMetric>> = None;
    let mut diffs = Vec::new();
    let mut last = Vec::new();
    for &s in schedule {
        let mut values = Vec::with_capacity(points.len() * times.len());
        for &t in times {
            let g = rescaled_metric(traj, family, s, t)?;
            for p in points {
                values.push(pullback(|q| metric_from_coframe(traj.kind, g.as_array(), q), &case.scaling, s, p)?);
            }
        }
        if let Some(prev) = &previous {
            diffs.push(sup_diff(prev, &values));
        }
        previous = Some(values.clone());
        last = values;
    }

    let data: Vec<(f64, ChartPoint, CoordinateMetric)> = times
        .iter()
        .flat_map(|&t| points.iter().map(move |p| (t, *p)))
        .zip(last.iter())
        .map(|((t, p), g)| (t, p, *g))
        .collect();
    let reference = &case.reference;
    let fitted = reference.fit(&data)?;
    let mut sup_error = 0.0f64;
    for (t, p, g) in &data {
        sup_error = sup_error.max((reference.eval(&fitted, *t, p)? - g).abs().max());
    }

    let settled = cfg.floor * cfg.tolerance;
    let monotone = diffs.windows(2).all(|w| w[1] <= w[0] || w[1] < settled);
    let final_diff = *diffs.last().expect("at least one difference");
    let mut notes = Vec::new();
    if !monotone {
        notes.push("successive differences do not decay monotonically".into());
    }
    if final_diff >= cfg.tolerance {
        notes.push(format!("final difference {final_diff:.3e} is not below {:.1e}", cfg.tolerance));
    }
    if sup_error >= cfg.tolerance {
        notes.push(format!("reference mismatch {sup_error:.3e} is not below {:.1e}", cfg.tolerance));
    }
    let converged = monotone && final_diff < cfg.tolerance && sup_error < cfg.tolerance;

    let names = &reference.constant_names;
    let predicted = case.predicted_constants(&fitted, traj);
    Ok(LimitComparison {
        geometry: case.geometry,
        flow: case.flow,
        case: case.name.clone(),
        scaling_exponents: case.scaling.exponents,
        post_map: case.scaling.post_map,
        reference_name: reference.name.clone(),
        fitted_constants: names.iter().cloned().zip(fitted.iter().copied()).collect(),
        predicted_constants: names
            .iter()
            .zip(predicted)
            .filter_map(|(n, v)| v.map(|v| (n.clone(), v)))
            .collect(),
        sup_error,
        cauchy_differences: diffs,
        converged,
        s_schedule: schedule.to_vec(),
        sample_times: times.to_vec(),
        sample_points: points.to_vec(),
        t0: family.t0,
        notes,
    })
}

/// Integrates the case's solution and runs `limit_metric` on its defaults.
pub fn run_limit_case(case: &LimitCase, integrator: &IntegratorConfig, cfg: &LimitConfig) -> Result<LimitComparison> {
    let mut integrator = *integrator;
    if case.direction == Direction::Forward {
        // Forward limits run far past the default blow-up guard on purpose.
        integrator.blowup_threshold = integrator.blowup_threshold.max(1e300);
    }
    let traj = integrate(case.flow, case.geometry, &case.initial, case.horizon(), &integrator)?;
    let family = case.family(traj.t0())?;
    let points = case.sample_points(cfg.points, cfg.seed);
    limit_metric(case, &traj, &family, &points, &case.times, &case.s_schedule(), cfg)
}
