//! Group laws of the four geometries, the lifted SL̃(2,ℝ) multiplication,
//! isometries conjugated through the rescaling maps, their limits, and the
//! collapse verdict for compact quotients.
//!
//! A group element is identified with its image of the base point, so the
//! parameters of `γ` are the chart coordinates of `γ·e` with e = (0,0,0),
//! or (0,1,0) in the upper half-plane chart of SL̃(2,ℝ).

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{ChartPoint, GeometryKind};
use crate::linalg::{fit_line, least_squares};
use crate::rescale::{CoordinateScaling, Direction, LimitCase, PostMap};
use crate::{Error, Result};

const TAU: f64 = 2.0 * PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub kind: GeometryKind,
    /// (a, b, c) for Nil and Sol, (a, b, τ) for SL̃(2,ℝ) and Isõm(E²).
    pub params: [f64; 3],
}

impl GroupElement {
    pub fn new(kind: GeometryKind, params: [f64; 3]) -> Result<Self> {
        kind.require_flowable()?;
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite group parameters {params:?}")));
        }
        if kind == GeometryKind::SL2Tilde && !(params[1] > 0.0) {
            return Err(Error::InvalidInput(format!("SL2 element needs b > 0, got {}", params[1])));
        }
        Ok(GroupElement { kind, params })
    }

    pub fn identity(kind: GeometryKind) -> Self {
        GroupElement { kind, params: base_point(kind).0 }
    }

    pub fn as_point(&self) -> ChartPoint {
        ChartPoint(self.params)
    }
}

pub fn base_point(kind: GeometryKind) -> ChartPoint {
    match kind {
        GeometryKind::SL2Tilde => ChartPoint([0.0, 1.0, 0.0]),
        _ => ChartPoint([0.0; 3]),
    }
}

/// Continuous lift of arg(cos T + (x + iy) sin T), with value 0 at T = 0.
fn lift_arg(t: f64, x: f64, y: f64) -> f64 {
    let k = (t / PI).round();
    let t0 = t - k * PI;
    let (s, c) = t0.sin_cos();
    k * PI + (y * s).atan2(c + x * s)
}

/// Angle of the product (a, b, τ)·(x, y, θ) in SL̃(2,ℝ):
/// μ̃₃ = θ + 2 arg(cos(τ/2) + (x + iy) sin(τ/2)), lifted continuously in τ.
pub fn mu3_lift(tau: f64, x: f64, y: f64, theta: f64) -> f64 {
    theta + 2.0 * lift_arg(0.5 * tau, x, y)
}

/// (x, y, angle mod 2π) of a unit-determinant matrix [[a, b], [c, d]],
/// read off from its action on the base point and the angle of its bottom row.
pub fn phi_chart(m: &Matrix2<f64>) -> Result<[f64; 3]> {
    if (m.determinant() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!("matrix determinant {} is not 1", m.determinant())));
    }
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let n = c * c + d * d;
    let angle = (2.0 * c.atan2(d)).rem_euclid(TAU);
    Ok([(a * c + b * d) / n, 1.0 / n, angle])
}

/// [[√y, x/√y], [0, 1/√y]] · R(θ/2) with R(φ) = [[cos φ, −sin φ], [sin φ, cos φ]].
pub fn phi_chart_inverse(x: f64, y: f64, theta: f64) -> Result<Matrix2<f64>> {
    if !(y > 0.0) {
        return Err(Error::OutOfDomain([x, y, theta]));
    }
    let r = y.sqrt();
    let (s, c) = (0.5 * theta).sin_cos();
    Ok(Matrix2::new(r, x / r, 0.0, 1.0 / r) * Matrix2::new(c, -s, s, c))
}

/// Left translation of p by γ.
pub fn act(gamma: &GroupElement, p: &ChartPoint) -> Result<ChartPoint> {
    let kind = gamma.kind;
    p.validate(kind)?;
    let [a, b, c] = gamma.params;
    let [x, y, z] = p.0;
    Ok(ChartPoint(match kind {
        GeometryKind::Nil => [x + a, y + b, z + c + a * y],
        GeometryKind::Sol => [(-c).exp() * x + a, c.exp() * y + b, z + c],
        GeometryKind::SL2Tilde => {
            let (s, co) = (0.5 * c).sin_cos();
            let d = (x * s + co).powi(2) + (y * s).powi(2);
            let xn = x * c.cos() + 0.5 * (x * x + y * y - 1.0) * c.sin();
            [a + b * xn / d, b * y / d, mu3_lift(c, x, y, z)]
        }
        GeometryKind::IsomE2Tilde => {
            let (s, co) = c.sin_cos();
            [x * co + y * s + a, -x * s + y * co + b, z + c]
        }
        other => return Err(Error::NotFlowable { kind: other.name().into() }),
    }))
}

/// ∂(γ·p)/∂p.
pub fn act_jacobian(gamma: &GroupElement, p: &ChartPoint) -> Result<Matrix3<f64>> {
    p.validate(gamma.kind)?;
    let [a, b, c] = gamma.params;
    let [x, y, _] = p.0;
    Ok(match gamma.kind {
        GeometryKind::Nil => Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, a, 1.0),
        GeometryKind::Sol => Matrix3::from_diagonal(&[(-c).exp(), c.exp(), 1.0].into()),
        GeometryKind::SL2Tilde => {
            let (s, co) = (0.5 * c).sin_cos();
            // w ↦ (w cos − sin)/(w sin + cos) has derivative (w sin + cos)^{−2}.
            let (re, im) = (x * s + co, y * s);
            let d = re * re + im * im;
            let (xi, eta) = ((re * re - im * im) / (d * d), -2.0 * re * im / (d * d));
            Matrix3::new(
                b * xi,
                -b * eta,
                0.0,
                b * eta,
                b * xi,
                0.0,
                -2.0 * y * s * s / d,
                2.0 * re * s / d,
                1.0,
            )
        }
        GeometryKind::IsomE2Tilde => {
            let (s, co) = c.sin_cos();
            Matrix3::new(co, s, 0.0, -s, co, 0.0, 0.0, 0.0, 1.0)
        }
        other => return Err(Error::NotFlowable { kind: other.name().into() }),
    })
}

/// γ₁γ₂, so that act(γ₁γ₂, p) = act(γ₁, act(γ₂, p)).
pub fn compose(g1: &GroupElement, g2: &GroupElement) -> Result<GroupElement> {
    if g1.kind != g2.kind {
        return Err(Error::InvalidInput("composing elements of different groups".into()));
    }
    Ok(GroupElement { kind: g1.kind, params: act(g1, &g2.as_point())?.0 })
}

pub fn inverse(g: &GroupElement) -> Result<GroupElement> {
    let [a, b, c] = g.params;
    let params = match g.kind {
        GeometryKind::Nil => [-a, -b, a * b - c],
        GeometryKind::Sol => [-c.exp() * a, -(-c).exp() * b, -c],
        GeometryKind::IsomE2Tilde => {
            let (s, co) = c.sin_cos();
            [-(a * co - b * s), -(a * s + b * co), -c]
        }
        GeometryKind::SL2Tilde => {
            let m = phi_chart_inverse(a, b, c)?;
            let inv = m.try_inverse().ok_or_else(|| Error::InvalidInput("singular SL2 matrix".into()))?;
            let [x, y, base] = phi_chart(&inv)?;
            // Choose the branch whose product with g has angle exactly 0.
            let n = (-mu3_lift(c, x, y, base) / TAU).round();
            [x, y, base + n * TAU]
        }
        other => return Err(Error::NotFlowable { kind: other.name().into() }),
    };
    Ok(GroupElement { kind: g.kind, params })
}

/// φ_s^{−1}(γ·φ_s(p)).
pub fn conjugated_action(
    scaling: &CoordinateScaling,
    gamma: &GroupElement,
    s: f64,
    p: &ChartPoint,
) -> Result<ChartPoint> {
    if !(s > 0.0) {
        return Err(Error::InvalidInput(format!("scale s must be positive, got {s}")));
    }
    scaling.inverse(s, &act(gamma, &scaling.apply(s, p))?)
}

/// Parametric families of limit isometries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    /// γ_{u,v,w}(x, y, z) = (x + u, y + v, z + w + uy).
    Heisenberg,
    /// (e^{−c}x + u, e^{c}y + v, z + c).
    SolAffine,
    /// PSL(2,ℝ) element (a, b, τ) on the H² factor and θ + u.
    HyperbolicTimesLine,
    /// (x + eʸu + e^{−y}v, y + d, θ + eʸu − e^{−y}v).
    SolLimit,
    /// Rotation by ρ and translation (u, v) in the plane, θ + w.
    Euclidean,
}

/// A group of family parameters that moves points along `orbit_dim` directions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterBlock {
    pub name: String,
    pub params: Vec<usize>,
    pub orbit_dim: usize,
}

impl FamilyKind {
    pub fn for_case(case: &LimitCase) -> Result<FamilyKind> {
        Ok(match (case.geometry, case.scaling.post_map) {
            (GeometryKind::Nil, _) => FamilyKind::Heisenberg,
            (GeometryKind::Sol, _) => FamilyKind::SolAffine,
            (GeometryKind::SL2Tilde, PostMap::SolToUpperHalfPlane) => FamilyKind::SolLimit,
            (GeometryKind::SL2Tilde, PostMap::None) => FamilyKind::HyperbolicTimesLine,
            (GeometryKind::IsomE2Tilde, _) => FamilyKind::Euclidean,
            (other, _) => return Err(Error::NotFlowable { kind: other.name().into() }),
        })
    }

    pub fn parameter_names(self) -> &'static [&'static str] {
        match self {
            FamilyKind::Heisenberg => &["u", "v", "w"],
            FamilyKind::SolAffine => &["u", "v", "c"],
            FamilyKind::HyperbolicTimesLine => &["a", "b", "tau", "u"],
            FamilyKind::SolLimit => &["u", "v", "d"],
            FamilyKind::Euclidean => &["rho", "u", "v", "w"],
        }
    }

    pub fn formula(self) -> &'static str {
        match self {
            FamilyKind::Heisenberg => "(x+u, y+v, z+w+u*y)",
            FamilyKind::SolAffine => "(exp(-c)*x+u, exp(c)*y+v, z+c)",
            FamilyKind::HyperbolicTimesLine => "((a,b,tau) acting on H2, theta+u)",
            FamilyKind::SolLimit => "(x+exp(y)*u+exp(-y)*v, y+d, theta+exp(y)*u-exp(-y)*v)",
            FamilyKind::Euclidean => "(x*cos(rho)+y*sin(rho)+u, -x*sin(rho)+y*cos(rho)+v, theta+w)",
        }
    }

    pub fn limit_geometry(self) -> &'static str {
        match self {
            FamilyKind::Heisenberg => "nil",
            FamilyKind::SolAffine => "sol",
            FamilyKind::HyperbolicTimesLine => "h2xr",
            FamilyKind::SolLimit => "sol-limit",
            FamilyKind::Euclidean => "e3",
        }
    }

    pub fn blocks(self) -> Vec<ParameterBlock> {
        let b = |name: &str, params: Vec<usize>, orbit_dim| ParameterBlock { name: name.into(), params, orbit_dim };
        match self {
            FamilyKind::Heisenberg => vec![b("u", vec![0], 1), b("v", vec![1], 1), b("w", vec![2], 1)],
            FamilyKind::SolAffine => vec![b("u", vec![0], 1), b("v", vec![1], 1), b("c", vec![2], 1)],
            FamilyKind::HyperbolicTimesLine => vec![b("psl", vec![0, 1, 2], 2), b("u", vec![3], 1)],
            FamilyKind::SolLimit => vec![b("u", vec![0], 1), b("v", vec![1], 1), b("d", vec![2], 1)],
            FamilyKind::Euclidean => {
                vec![b("rho", vec![0], 0), b("u", vec![1], 1), b("v", vec![2], 1), b("w", vec![3], 1)]
            }
        }
    }

    pub fn apply(self, params: &[f64], p: &ChartPoint) -> Result<ChartPoint> {
        let [x, y, z] = p.0;
        Ok(ChartPoint(match self {
            FamilyKind::Heisenberg => [x + params[0], y + params[1], z + params[2] + params[0] * y],
            FamilyKind::SolAffine => {
                let c = params[2];
                [(-c).exp() * x + params[0], c.exp() * y + params[1], z + c]
            }
            FamilyKind::HyperbolicTimesLine => {
                let g = GroupElement::new(GeometryKind::SL2Tilde, [params[0], params[1], params[2]])?;
                let q = act(&g, &ChartPoint([x, y, 0.0]))?;
                [q.0[0], q.0[1], z + params[3]]
            }
            FamilyKind::SolLimit => {
                let (ep, em) = (y.exp(), (-y).exp());
                [x + ep * params[0] + em * params[1], y + params[2], z + ep * params[0] - em * params[1]]
            }
            FamilyKind::Euclidean => {
                let (s, c) = params[0].sin_cos();
                [x * c + y * s + params[1], -x * s + y * c + params[2], z + params[3]]
            }
        }))
    }

    /// Least-squares parameters of the family member closest to the map
    /// `points[i] ↦ images[i]`.
    pub fn fit(self, points: &[ChartPoint], images: &[ChartPoint]) -> Result<Vec<f64>> {
        let n = points.len();
        if n < 3 || images.len() != n {
            return Err(Error::FitFailed("need at least 3 point/image pairs".into()));
        }
        let mean = |f: &dyn Fn(usize) -> f64| (0..n).map(f).sum::<f64>() / n as f64;
        match self {
            FamilyKind::Heisenberg => {
                // Rows: Δx = u, Δy = v, Δz = w + u·y.
                let mut m = DMatrix::zeros(3 * n, 3);
                let mut rhs = DVector::zeros(3 * n);
                for i in 0..n {
                    let (p, q) = (points[i].0, images[i].0);
                    m[(3 * i, 0)] = 1.0;
                    rhs[3 * i] = q[0] - p[0];
                    m[(3 * i + 1, 1)] = 1.0;
                    rhs[3 * i + 1] = q[1] - p[1];
                    m[(3 * i + 2, 0)] = p[1];
                    m[(3 * i + 2, 2)] = 1.0;
                    rhs[3 * i + 2] = q[2] - p[2];
                }
                Ok(least_squares(&m, &rhs)?.iter().copied().collect())
            }
            FamilyKind::SolAffine => {
                let c = mean(&|i| images[i].0[2] - points[i].0[2]);
                let u = mean(&|i| images[i].0[0] - (-c).exp() * points[i].0[0]);
                let v = mean(&|i| images[i].0[1] - c.exp() * points[i].0[1]);
                Ok(vec![u, v, c])
            }
            FamilyKind::HyperbolicTimesLine => {
                let [a, b, tau] = fit_mobius(points, images)?;
                let u = mean(&|i| images[i].0[2] - points[i].0[2]);
                Ok(vec![a, b, tau, u])
            }
            FamilyKind::SolLimit => {
                let d = mean(&|i| images[i].0[1] - points[i].0[1]);
                let mut m = DMatrix::zeros(2 * n, 2);
                let mut rhs = DVector::zeros(2 * n);
                for i in 0..n {
                    let (p, q) = (points[i].0, images[i].0);
                    let (ep, em) = (p[1].exp(), (-p[1]).exp());
                    m[(2 * i, 0)] = ep;
                    m[(2 * i, 1)] = em;
                    rhs[2 * i] = q[0] - p[0];
                    m[(2 * i + 1, 0)] = ep;
                    m[(2 * i + 1, 1)] = -em;
                    rhs[2 * i + 1] = q[2] - p[2];
                }
                let uv = least_squares(&m, &rhs)?;
                Ok(vec![uv[0], uv[1], d])
            }
            FamilyKind::Euclidean => {
                // x' = c x + s y + u, y' = −s x + c y + v.
                let mut m = DMatrix::zeros(2 * n, 4);
                let mut rhs = DVector::zeros(2 * n);
                for i in 0..n {
                    let (p, q) = (points[i].0, images[i].0);
                    m[(2 * i, 0)] = p[0];
                    m[(2 * i, 1)] = p[1];
                    m[(2 * i, 2)] = 1.0;
                    rhs[2 * i] = q[0];
                    m[(2 * i + 1, 0)] = p[1];
                    m[(2 * i + 1, 1)] = -p[0];
                    m[(2 * i + 1, 3)] = 1.0;
                    rhs[2 * i + 1] = q[1];
                }
                let sol = least_squares(&m, &rhs)?;
                let w = mean(&|i| images[i].0[2] - points[i].0[2]);
                Ok(vec![sol[1].atan2(sol[0]), sol[2], sol[3], w])
            }
        }
    }

    /// Size of a block's parameters, zero exactly for the identity.
    fn block_magnitude(self, block: &ParameterBlock, params: &[f64]) -> f64 {
        match (self, block.name.as_str()) {
            (FamilyKind::HyperbolicTimesLine, "psl") => {
                params[0].abs() + params[1].ln().abs() + wrap_angle(params[2]).abs()
            }
            (FamilyKind::Euclidean, "rho") => wrap_angle(params[0]).abs(),
            _ => block.params.iter().map(|&k| params[k].abs()).fold(0.0, f64::max),
        }
    }
}

fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Möbius map z ↦ (pz + q)/(rz + t) through the null vector of the linear
/// system z'(rz + t) = pz + q, reported as (a, b, τ) with τ ∈ (−π, π].
fn fit_mobius(points: &[ChartPoint], images: &[ChartPoint]) -> Result<[f64; 3]> {
    let n = points.len();
    let mut m = DMatrix::zeros(2 * n, 4);
    for i in 0..n {
        let [x, y, _] = points[i].0;
        let [xp, yp, _] = images[i].0;
        // Unknowns ordered (p, q, r, t).
        m[(2 * i, 0)] = -x;
        m[(2 * i, 1)] = -1.0;
        m[(2 * i, 2)] = xp * x - yp * y;
        m[(2 * i, 3)] = xp;
        m[(2 * i + 1, 0)] = -y;
        m[(2 * i + 1, 2)] = xp * y + yp * x;
        m[(2 * i + 1, 3)] = yp;
    }
    let svd = m.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::FitFailed("SVD failed".into()))?;
    let k = svd.singular_values.imin();
    let v = v_t.row(k);
    let mut mat = Matrix2::new(v[0], v[1], v[2], v[3]);
    let det = mat.determinant();
    if !(det > 0.0) {
        return Err(Error::FitFailed("fitted Möbius map is not orientation preserving".into()));
    }
    mat /= det.sqrt();
    let [a, b, tau] = phi_chart(&mat)?;
    Ok([a, b, wrap_angle(tau)])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    Zero,
    Decaying,
    Constant,
    Diverging,
}

/// Slope of log |value| against log depth, where depth = s for forward
/// limits and 1/s for backward ones.
fn classify_trend(depths: &[f64], values: &[f64]) -> Trend {
    if values.iter().all(|v| *v < 1e-12) {
        return Trend::Zero;
    }
    let xs: Vec<f64> = depths.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.max(1e-300).ln()).collect();
    match fit_line(&xs, &ys) {
        Ok((_, slope, _)) if slope < -0.02 => Trend::Decaying,
        Ok((_, slope, _)) if slope > 0.02 => Trend::Diverging,
        _ => Trend::Constant,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitActionFamily {
    pub case: String,
    pub geometry_of_limit: String,
    pub family: FamilyKind,
    pub formula: String,
    pub parameters: BTreeMap<String, f64>,
    /// Parameters that a cocompact lattice can only reach in discrete steps.
    pub discrete_parameters: Vec<String>,
    pub trends: BTreeMap<String, Trend>,
    /// sup |numeric − family| at the deepest scale.
    pub residual: f64,
    pub converged: bool,
}

fn depth(direction: Direction, s: f64) -> f64 {
    match direction {
        Direction::Forward => s,
        Direction::Backward => 1.0 / s,
    }
}

fn fit_at(case: &LimitCase, family: FamilyKind, gamma: &GroupElement, s: f64, points: &[ChartPoint]) -> Result<(Vec<f64>, f64)> {
    let images = points
        .iter()
        .map(|p| conjugated_action(&case.scaling, gamma, s, p))
        .collect::<Result<Vec<_>>>()?;
    let params = family.fit(points, &images)?;
    let mut residual = 0.0f64;
    for (p, q) in points.iter().zip(&images) {
        let r = family.apply(&params, p)?;
        residual = residual.max(r.distance(q));
    }
    Ok((params, residual))
}

/// Numerical limit of φ_s^{−1}∘γ(s)∘φ_s along `s_schedule`, matched against
/// the parametric family of the case.
pub fn limit_action<F>(case: &LimitCase, element_schedule: F, s_schedule: &[f64], seed: u64) -> Result<LimitActionFamily>
where
    F: Fn(f64) -> Result<GroupElement>,
{
    if s_schedule.len() < 2 {
        return Err(Error::InvalidInput("limit_action needs at least two scales".into()));
    }
    let family = FamilyKind::for_case(case)?;
    let points = case.sample_points(20, seed);
    let names = family.parameter_names();
    let mut history = Vec::with_capacity(s_schedule.len());
    let mut residual = 0.0;
    for &s in s_schedule {
        let (params, res) = fit_at(case, family, &element_schedule(s)?, s, &points)?;
        history.push(params);
        residual = res;
    }
    let depths: Vec<f64> = s_schedule.iter().map(|&s| depth(case.direction, s)).collect();
    let trends: BTreeMap<String, Trend> = names
        .iter()
        .enumerate()
        .map(|(k, n)| {
            let vals: Vec<f64> = history.iter().map(|h| h[k].abs()).collect();
            (n.to_string(), classify_trend(&depths, &vals))
        })
        .collect();
    let last = history.last().expect("non-empty schedule");
    let converged = residual.is_finite()
        && residual < 1e-6
        && last.iter().all(|v| v.is_finite())
        && trends.values().all(|t| *t != Trend::Diverging);
    Ok(LimitActionFamily {
        case: case.name.clone(),
        geometry_of_limit: family.limit_geometry().into(),
        family,
        formula: family.formula().into(),
        parameters: names.iter().zip(last).map(|(n, v)| (n.to_string(), *v)).collect(),
        discrete_parameters: discrete_parameters(family),
        trends,
        residual,
        converged,
    })
}

/// Parameters that a direction left unstretched by the rescaling keeps at
/// lattice spacing.
fn discrete_parameters(family: FamilyKind) -> Vec<String> {
    match family {
        FamilyKind::SolAffine => vec!["c".into()],
        FamilyKind::HyperbolicTimesLine => vec!["a".into(), "b".into(), "tau".into()],
        FamilyKind::SolLimit => vec!["d".into()],
        FamilyKind::Euclidean => vec!["rho".into()],
        FamilyKind::Heisenberg => Vec::new(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub name: String,
    pub kind: GeometryKind,
    pub generators: Vec<GroupElement>,
    pub illustrative: bool,
}

impl Lattice {
    pub fn custom(kind: GeometryKind, generators: &[[f64; 3]]) -> Result<Lattice> {
        if generators.is_empty() {
            return Err(Error::InvalidInput("a lattice needs at least one generator".into()));
        }
        Ok(Lattice {
            name: "custom".into(),
            kind,
            generators: generators.iter().map(|g| GroupElement::new(kind, *g)).collect::<Result<_>>()?,
            illustrative: false,
        })
    }

    /// Nil: ℤ³. Sol: ℤ[φ] ⋊ ℤ for the golden ratio φ. Isõm(E²): ℤ² and the
    /// 2π rotation. SL̃(2,ℝ): lift of the regular octagon surface group plus
    /// the central 2π rotation (illustrative).
    pub fn standard(kind: GeometryKind) -> Result<Lattice> {
        let phi = 0.5 * (1.0 + 5f64.sqrt());
        let (generators, illustrative): (Vec<[f64; 3]>, bool) = match kind {
            GeometryKind::Nil => (vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], false),
            GeometryKind::Sol => (vec![[1.0, 1.0, 0.0], [phi, -1.0 / phi, 0.0], [0.0, 0.0, 2.0 * phi.ln()]], false),
            GeometryKind::IsomE2Tilde => (vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, TAU]], false),
            GeometryKind::SL2Tilde => {
                let alpha = 1.0 + 2f64.sqrt();
                let r = (2.0 + 2.0 * 2f64.sqrt()).sqrt();
                let mut gens = Vec::new();
                for k in 0..4 {
                    let ang = k as f64 * PI / 4.0;
                    let (re, im) = (r * ang.cos(), r * ang.sin());
                    let m = Matrix2::new(alpha + re, -im, -im, alpha - re);
                    let [a, b, tau] = phi_chart(&m)?;
                    gens.push([a, b, wrap_angle(tau)]);
                }
                gens.push([0.0, 1.0, TAU]);
                (gens, true)
            }
            other => return Err(Error::NotFlowable { kind: other.name().into() }),
        };
        let mut l = Lattice::custom(kind, &generators)?;
        l.name = "standard".into();
        l.illustrative = illustrative;
        Ok(l)
    }
}

/// Smallest chart displacement of any generator over seeded points of a
/// radius-10 ball (for SL̃(2,ℝ), y ranges over [e^{−2.3}, e^{2.3}]).
pub fn min_displacement(lattice: &Lattice, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    for _ in 0..samples {
        let y = if lattice.kind == GeometryKind::SL2Tilde {
            rng.gen_range(-2.3f64..2.3).exp()
        } else {
            rng.gen_range(-10.0..10.0)
        };
        let p = ChartPoint([rng.gen_range(-10.0..10.0), y, rng.gen_range(-10.0..10.0)]);
        for g in &lattice.generators {
            best = best.min(act(g, &p)?.distance(&p));
        }
    }
    Ok(best)
}

pub const DISPLACEMENT_FLOOR: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Attainability {
    Continuous,
    Discrete,
    Absent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseReport {
    pub geometry: GeometryKind,
    pub case: String,
    pub lattice: String,
    pub collapses: bool,
    pub orbit_space_dimension: usize,
    pub stays_compact: bool,
    pub parameter_blocks: BTreeMap<String, Attainability>,
    pub surviving_generators: usize,
    pub min_displacement: f64,
    pub notes: String,
}

/// Scales probed by the collapse analysis: log₁₀ depth from 1 to 6 in half decades.
pub fn collapse_schedule(direction: Direction) -> Vec<f64> {
    (0..=10)
        .map(|k| {
            let e = 1.0 + 0.5 * k as f64;
            match direction {
                Direction::Forward => 10f64.powf(e),
                Direction::Backward => 10f64.powf(-e),
            }
        })
        .collect()
}

/// Which limit-family parameters the lattice reaches as s → limit.
///
/// Each generator's conjugate is fitted to the family along the schedule.
/// A generator whose parameters grow leaves every ball and does not survive.
/// Among survivors, a parameter that shrinks to zero is reached densely by
/// integer multiples (continuous); one that stays put is discrete.
pub fn collapse_analysis(case: &LimitCase, lattice: &Lattice, seed: u64) -> Result<CollapseReport> {
    if lattice.kind != case.geometry {
        return Err(Error::InvalidInput(format!(
            "lattice is for {} but the case is on {}",
            lattice.kind, case.geometry
        )));
    }
    let family = FamilyKind::for_case(case)?;
    let blocks = family.blocks();
    let schedule = collapse_schedule(case.direction);
    let depths: Vec<f64> = schedule.iter().map(|&s| depth(case.direction, s)).collect();
    let points = case.sample_points(20, seed);

    let mut status: Vec<Attainability> = vec![Attainability::Absent; blocks.len()];
    let mut survivors = 0;
    for g in &lattice.generators {
        let mut mags = vec![Vec::with_capacity(schedule.len()); blocks.len()];
        for &s in &schedule {
            let (params, _) = fit_at(case, family, g, s, &points)?;
            for (b, block) in blocks.iter().enumerate() {
                mags[b].push(family.block_magnitude(block, &params));
            }
        }
        let trends: Vec<Trend> = mags.iter().map(|m| classify_trend(&depths, m)).collect();
        if trends.contains(&Trend::Diverging) {
            continue;
        }
        survivors += 1;
        for (b, t) in trends.iter().enumerate() {
            match t {
                Trend::Decaying => status[b] = Attainability::Continuous,
                Trend::Constant if status[b] == Attainability::Absent => status[b] = Attainability::Discrete,
                _ => {}
            }
        }
    }

    let continuous_dim: usize = blocks
        .iter()
        .zip(&status)
        .filter(|(_, s)| **s == Attainability::Continuous)
        .map(|(b, _)| b.orbit_dim)
        .sum();
    let dim = 3usize.saturating_sub(continuous_dim);
    let stays_compact = blocks.iter().zip(&status).all(|(b, s)| b.orbit_dim == 0 || *s != Attainability::Absent);
    let displacement = min_displacement(lattice, 2000, seed)?;

    let mut notes = Vec::new();
    if displacement <= DISPLACEMENT_FLOOR {
        notes.push(format!(
            "lattice failed the proper discontinuity spot check (min displacement {displacement:.3e})"
        ));
    }
    if lattice.illustrative {
        notes.push("illustrative lattice".to_string());
    }
    match (case.geometry, family) {
        (GeometryKind::Sol, _) if dim == 3 => {
            notes.push("translations leave every ball; only (0,0,c) survives".into())
        }
        (GeometryKind::SL2Tilde, FamilyKind::SolLimit) => notes.push(
            "u = v = 0 is forced and d is discrete; surviving arrows are at most the axis-preserving elements".into(),
        ),
        _ => {}
    }
    let parameter_blocks = blocks.iter().map(|b| b.name.clone()).zip(status).collect();
    Ok(CollapseReport {
        geometry: case.geometry,
        case: case.name.clone(),
        lattice: lattice.name.clone(),
        collapses: dim < 3,
        orbit_space_dimension: dim,
        stays_compact,
        parameter_blocks,
        surviving_generators: survivors,
        min_displacement: displacement,
        notes: notes.join("; "),
    })
}
