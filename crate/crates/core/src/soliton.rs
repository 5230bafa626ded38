//! Soliton certificates, checked two ways: as self-similar solutions
//! `g(t) = σ(t) ψ_t^* g(1)` of the flow, and through the soliton equation
//! `−2v(g₀) = L_X g₀ + α g₀` with X the generator of ψ_t.
//!
//! Certificates are based at t = 1, so `σ(t) = ((1−p)αt)^{1/(1−p)}` with
//! σ(1) = 1, i.e. σ = t for Ricci flow and σ = t^{1/2} for cross curvature flow.

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curvature::{sectional_generic, tensors_from_sectional};
use crate::flow::{integrate_from, rhs, FlowKind, IntegratorConfig};
use crate::geometry::{
    metric_from_coframe, metric_partials, ChartPoint, CoordinateMetric, DiagonalMetric, GeometryKind,
    StructureConstants,
};
use crate::rescale::{pullback, CoordinateScaling};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolitonCertificate {
    pub name: String,
    pub geometry: GeometryKind,
    /// The flow whose soliton this is.
    pub flow: FlowKind,
    /// The flow the certified family actually solves; differs from `flow`
    /// for Type I limits, which solve the time-reversed equation.
    pub solves: FlowKind,
    pub alpha: f64,
    pub p: i32,
    /// ψ_t(x, y, z) = (t^{e₁}x, t^{e₂}y, t^{e₃}z).
    pub psi_exponents: [f64; 3],
    pub base_metric: String,
    /// Frame coefficients of g(1) on the coframe of `geometry`.
    pub base_weights: [f64; 3],
}

impl SolitonCertificate {
    pub fn sigma(&self, t: f64) -> f64 {
        let q = f64::from(1 - self.p);
        (q * self.alpha * t).powf(1.0 / q)
    }

    pub fn psi(&self) -> CoordinateScaling {
        CoordinateScaling::new(self.psi_exponents)
    }

    /// Infinitesimal generator of ψ_t at t = 1: X = diag(e)·x.
    pub fn generator(&self) -> AffineField {
        AffineField { matrix: Matrix3::from_diagonal(&self.psi_exponents.into()), offset: [0.0; 3] }
    }

    pub fn base(&self, p: &ChartPoint) -> Result<CoordinateMetric> {
        metric_from_coframe(self.geometry, self.base_weights, p)
    }
}

/// Registry: nil-rf, nil-xcf, sol-rf, sol-xcf-limit, h2xr-rf.
pub fn certificates() -> Vec<SolitonCertificate> {
    let third = 1.0 / 3.0;
    let cert = |name: &str,
                geometry,
                flow: FlowKind,
                solves,
                psi_exponents,
                base_metric: &str,
                base_weights| {
        let p = flow.p();
        SolitonCertificate {
            name: name.into(),
            geometry,
            flow,
            solves,
            alpha: 1.0 / f64::from(1 - p),
            p,
            psi_exponents,
            base_metric: base_metric.into(),
            base_weights,
        }
    };
    vec![
        cert(
            "nil-rf",
            GeometryKind::Nil,
            FlowKind::RicciFlow,
            FlowKind::RicciFlow,
            [-third, -third, -2.0 * third],
            "nil-soliton",
            [third, 1.0, 1.0],
        ),
        cert(
            "nil-xcf",
            GeometryKind::Nil,
            FlowKind::XCFMinus,
            FlowKind::XCFMinus,
            [-1.0 / 7.0, -1.0 / 7.0, -2.0 / 7.0],
            "nil-xc-soliton",
            [2.0 / 7f64.sqrt(), 1.0, 1.0],
        ),
        cert(
            "sol-rf",
            GeometryKind::Sol,
            FlowKind::RicciFlow,
            FlowKind::RicciFlow,
            [-0.5, -0.5, 0.0],
            "sol-soliton",
            [0.5, 4.0, 0.5],
        ),
        cert(
            "sol-xcf-limit",
            GeometryKind::Sol,
            FlowKind::XCFMinus,
            FlowKind::XCFPlus,
            [-0.5, -0.5, 0.0],
            "sol-xc-soliton",
            [1.0, 2.0, 1.0],
        ),
        cert(
            "h2xr-rf",
            GeometryKind::H2xR,
            FlowKind::RicciFlow,
            FlowKind::RicciFlow,
            [0.0, 0.0, -0.5],
            "h2xr",
            [1.0, 2.0, 2.0],
        ),
    ]
}

pub fn certificate(name: &str) -> Result<SolitonCertificate> {
    certificates()
        .into_iter()
        .find(|c| c.name == name)
        .ok_or_else(|| Error::InvalidInput(format!("unknown soliton certificate '{name}'")))
}

/// H²×ℝ as the Lie group ℝ × Aff⁺(ℝ) with frame (∂_θ, y∂_x, y∂_y): [F₂, F₃] = −F₂.
fn h2xr_brackets() -> StructureConstants {
    StructureConstants::from_brackets(&[((1, 2), [0, -1, 0])])
}

/// Frame coefficients of ∂g/∂t = −2v(g) for the flow `flow`.
pub fn frame_velocity(kind: GeometryKind, flow: FlowKind, w: [f64; 3]) -> Result<[f64; 3]> {
    let g = DiagonalMetric::from_array(w)?;
    match kind {
        GeometryKind::H2xR => {
            if flow != FlowKind::RicciFlow {
                return Err(Error::InvalidInput("only Ricci flow is supported on H²×ℝ".into()));
            }
            let t = tensors_from_sectional(&g, &sectional_generic(&h2xr_brackets(), &g));
            Ok(t.ricci_diag.map(|r| -2.0 * r))
        }
        GeometryKind::Euclidean3 => Ok([0.0; 3]),
        _ => rhs(flow, kind, &g),
    }
}

/// Solution of the flow through the base weights at t = 1, evaluated at `times` ≥ 1.
fn solve_from_one(cert: &SolitonCertificate, times: &[f64]) -> Result<Vec<[f64; 3]>> {
    let t_end = times.iter().copied().fold(1.0, f64::max);
    if cert.geometry.is_flowable() {
        let g1 = DiagonalMetric::from_array(cert.base_weights)?;
        let traj = integrate_from(cert.solves, cert.geometry, &g1, 1.0, t_end, &IntegratorConfig::tight())?;
        return times.iter().map(|&t| Ok(traj.eval(t)?.g.as_array())).collect();
    }
    // Limit-only geometries: classical RK4 on the frame ODE.
    let f = |w: [f64; 3]| frame_velocity(cert.geometry, cert.solves, w);
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let n = 4000;
        let h = (t - 1.0) / n as f64;
        let mut w = cert.base_weights;
        for _ in 0..n {
            let add = |a: [f64; 3], k: [f64; 3], c: f64| std::array::from_fn(|i| a[i] + c * k[i]);
            let k1 = f(w)?;
            let k2 = f(add(w, k1, 0.5 * h))?;
            let k3 = f(add(w, k2, 0.5 * h))?;
            let k4 = f(add(w, k3, h))?;
            w = std::array::from_fn(|i| w[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        }
        out.push(w);
    }
    Ok(out)
}

pub fn default_points(cert: &SolitonCertificate, n: usize, seed: u64) -> Vec<ChartPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let y = if cert.geometry.needs_positive_y() { rng.gen_range(0.5..2.0) } else { rng.gen_range(-1.0..1.0) };
            ChartPoint([rng.gen_range(-1.0..1.0), y, rng.gen_range(-1.0..1.0)])
        })
        .collect()
}

pub const DEFAULT_TIMES: [f64; 6] = [1.0, 1.25, 1.5, 2.0, 4.0, 8.0];

/// sup over points and times of |g(t) − σ(t)ψ_t^* g(1)|, with g(t) the
/// numerically integrated flow through the base metric.
pub fn verify_self_similar(cert: &SolitonCertificate, points: &[ChartPoint], times: &[f64]) -> Result<f64> {
    if times.iter().any(|&t| !(t >= 1.0)) {
        return Err(Error::InvalidInput("certificates are checked for t ≥ 1".into()));
    }
    let solutions = solve_from_one(cert, times)?;
    let psi = cert.psi();
    let mut worst = 0.0f64;
    for (&t, w) in times.iter().zip(&solutions) {
        let sigma = cert.sigma(t);
        for p in points {
            let direct = metric_from_coframe(cert.geometry, *w, p)?;
            let similar = pullback(|q| cert.base(q), &psi, t, p)? * sigma;
            worst = worst.max((direct - similar).abs().max());
        }
    }
    Ok(worst)
}

/// X(p) = M p + b.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineField {
    pub matrix: Matrix3<f64>,
    pub offset: [f64; 3],
}

impl AffineField {
    pub fn zero() -> Self {
        AffineField { matrix: Matrix3::zeros(), offset: [0.0; 3] }
    }

    pub fn at(&self, p: &ChartPoint) -> [f64; 3] {
        let v = self.matrix * nalgebra::Vector3::from(p.0);
        std::array::from_fn(|i| v[i] + self.offset[i])
    }

    /// Time-ε flow of the field.
    pub fn flow(&self, eps: f64, p: &ChartPoint) -> ChartPoint {
        let m = self.matrix * eps;
        let exp = m.exp();
        // ∫₀^ε e^{sM} ds · b through the augmented 4×4 exponential.
        let mut big = nalgebra::Matrix4::zeros();
        big.fixed_view_mut::<3, 3>(0, 0).copy_from(&m);
        for i in 0..3 {
            big[(i, 3)] = self.offset[i] * eps;
        }
        let e = big.exp();
        let v = exp * nalgebra::Vector3::from(p.0);
        ChartPoint(std::array::from_fn(|i| v[i] + e[(i, 3)]))
    }
}

/// (L_X g)_{ij} = X^k ∂_k g_{ij} + g_{kj} ∂_i X^k + g_{ik} ∂_j X^k for an affine X.
pub fn lie_derivative(kind: GeometryKind, w: [f64; 3], field: &AffineField, p: &ChartPoint) -> Result<CoordinateMetric> {
    let g = metric_from_coframe(kind, w, p)?;
    let d = metric_partials(kind, w, p)?;
    let x = field.at(p);
    let m = field.matrix;
    let mut out = m.transpose() * g + g * m;
    for k in 0..3 {
        out += d[k] * x[k];
    }
    Ok(out)
}

/// Centered difference of the pullback by the flow of X.
pub fn lie_derivative_fd(
    kind: GeometryKind,
    w: [f64; 3],
    field: &AffineField,
    p: &ChartPoint,
    eps: f64,
) -> Result<CoordinateMetric> {
    let pulled = |e: f64| -> Result<CoordinateMetric> {
        // Jacobian of the flow map of an affine field is e^{εM}.
        let j = (field.matrix * e).exp();
        let g = metric_from_coframe(kind, w, &field.flow(e, p))?;
        Ok(j.transpose() * g * j)
    };
    Ok((pulled(eps)? - pulled(-eps)?) / (2.0 * eps))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquationResiduals {
    /// Residual with the analytic Lie derivative.
    pub analytic: f64,
    /// Residual with the finite-difference Lie derivative.
    pub finite_difference: f64,
    /// sup |analytic − FD| relative to the size of L_X g.
    pub lie_agreement: f64,
}

/// sup over points of |−2v(g₀) − L_X g₀ − α g₀|.
pub fn verify_soliton_equation(
    kind: GeometryKind,
    base_weights: [f64; 3],
    field: &AffineField,
    alpha: f64,
    flow: FlowKind,
    points: &[ChartPoint],
) -> Result<EquationResiduals> {
    let vel = frame_velocity(kind, flow, base_weights)?;
    let mut out = EquationResiduals { analytic: 0.0, finite_difference: 0.0, lie_agreement: 0.0 };
    for p in points {
        let lhs = metric_from_coframe(kind, vel, p)?;
        let g0 = metric_from_coframe(kind, base_weights, p)?;
        let lie = lie_derivative(kind, base_weights, field, p)?;
        let lie_fd = lie_derivative_fd(kind, base_weights, field, p, 1e-6)?;
        out.analytic = out.analytic.max((lhs - lie - g0 * alpha).abs().max());
        out.finite_difference = out.finite_difference.max((lhs - lie_fd - g0 * alpha).abs().max());
        let scale = lie.abs().max().max(1.0);
        out.lie_agreement = out.lie_agreement.max((lie - lie_fd).abs().max() / scale);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolitonReport {
    pub name: String,
    pub geometry: GeometryKind,
    pub flow: FlowKind,
    pub alpha: f64,
    pub psi_exponents: [f64; 3],
    pub base_metric: String,
    pub self_similar_residual: f64,
    pub equation: EquationResiduals,
    pub verified: bool,
    pub seed: u64,
}

pub const SELF_SIMILAR_TOL: f64 = 1e-10;
pub const EQUATION_TOL: f64 = 1e-6;

/// Both checks on the default sample of 20 points.
pub fn verify_certificate(cert: &SolitonCertificate, seed: u64) -> Result<SolitonReport> {
    let points = default_points(cert, 20, seed);
    let self_similar_residual = verify_self_similar(cert, &points, &DEFAULT_TIMES)?;
    let equation =
        verify_soliton_equation(cert.geometry, cert.base_weights, &cert.generator(), cert.alpha, cert.solves, &points)?;
    let verified = self_similar_residual < SELF_SIMILAR_TOL
        && equation.analytic < SELF_SIMILAR_TOL
        && equation.finite_difference < EQUATION_TOL;
    Ok(SolitonReport {
        name: cert.name.clone(),
        geometry: cert.geometry,
        flow: cert.flow,
        alpha: cert.alpha,
        psi_exponents: cert.psi_exponents,
        base_metric: cert.base_metric.clone(),
        self_similar_residual,
        equation,
        verified,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sigma_solves_its_ode() {
        for cert in certificates() {
            assert_eq!(cert.sigma(1.0), 1.0);
            for k in 0..100 {
                let t = 1.0 + 0.37 * k as f64;
                let h = 1e-4 * t;
                // Five-point stencil: truncation error O(h⁴).
                let d = (-cert.sigma(t + 2.0 * h) + 8.0 * cert.sigma(t + h) - 8.0 * cert.sigma(t - h)
                    + cert.sigma(t - 2.0 * h))
                    / (12.0 * h);
                let want = cert.alpha * cert.sigma(t).powi(cert.p);
                assert!((d - want).abs() < 1e-9 * want.abs().max(1.0), "{} t={t}", cert.name);
                // Exact form: σ' = α σ^p is equivalent to σ^{1−p} = (1−p)αt.
                let q = f64::from(1 - cert.p);
                assert!((cert.sigma(t).powf(q) - q * cert.alpha * t).abs() < 1e-12 * t);
            }
        }
    }

    #[test]
    fn registry_round_trip() {
        assert_eq!(certificates().len(), 5);
        for name in ["nil-rf", "nil-xcf", "sol-rf", "sol-xcf-limit", "h2xr-rf"] {
            assert_eq!(certificate(name).unwrap().name, name);
        }
        assert!(certificate("nope").is_err());
    }

    #[test]
    fn flat_metric_is_a_steady_soliton() {
        let pts = [ChartPoint([0.1, -0.3, 2.0]), ChartPoint([5.0, 1.0, -1.0])];
        let r = verify_soliton_equation(
            GeometryKind::Euclidean3,
            [1.0; 3],
            &AffineField::zero(),
            0.0,
            FlowKind::RicciFlow,
            &pts,
        )
        .unwrap();
        assert_eq!(r.analytic, 0.0);
        assert_eq!(r.finite_difference, 0.0);
    }

    #[test]
    fn h2xr_curvature() {
        let v = frame_velocity(GeometryKind::H2xR, FlowKind::RicciFlow, [3.0, 2.5, 2.5]).unwrap();
        // Ric = −(1/w)·(hyperbolic metric of weight w) = −1 in frame coefficients.
        assert!(v[0].abs() < 1e-14 && (v[1] - 2.0).abs() < 1e-14 && (v[2] - 2.0).abs() < 1e-14, "{v:?}");
        assert!(frame_velocity(GeometryKind::H2xR, FlowKind::XCFMinus, [1.0; 3]).is_err());
    }

    #[test]
    fn all_certificates_verify() {
        for cert in certificates() {
            let r = verify_certificate(&cert, 42).unwrap();
            assert!(r.self_similar_residual < SELF_SIMILAR_TOL, "{}: {}", r.name, r.self_similar_residual);
            assert!(r.equation.finite_difference < EQUATION_TOL, "{}: {:?}", r.name, r.equation);
            assert!(r.verified);
        }
    }

    #[test]
    fn wrong_base_fails() {
        let mut cert = certificate("nil-rf").unwrap();
        cert.base_weights = [1.0, 1.0, 1.0];
        let r = verify_certificate(&cert, 42).unwrap();
        assert!(!r.verified);
        assert!(r.self_similar_residual > 1e-3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn lie_derivative_matches_finite_difference(
            kind in prop::sample::select(vec![GeometryKind::Nil, GeometryKind::Sol, GeometryKind::SL2Tilde, GeometryKind::IsomE2Tilde]),
            w in prop::array::uniform3(0.2f64..5.0),
            m in prop::array::uniform9(-1.0f64..1.0),
            b in prop::array::uniform3(-1.0f64..1.0),
            p in prop::array::uniform3(-1.0f64..1.0),
        ) {
            let mut p = ChartPoint(p);
            if kind.needs_positive_y() { p.0[1] = p.0[1].exp(); }
            let field = AffineField { matrix: Matrix3::from_row_slice(&m), offset: b };
            let exact = lie_derivative(kind, w, &field, &p).unwrap();
            let fd = lie_derivative_fd(kind, w, &field, &p, 1e-6).unwrap();
            let scale = exact.abs().max().max(1.0);
            prop_assert!((exact - fd).abs().max() < 1e-6 * scale);
        }
    }
}
