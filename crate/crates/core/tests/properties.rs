//! Cross-module properties: asymptotic exponents, fixed points, limits on
//! dense point sets and the self-similar/soliton-equation correspondence.

use homflow::curvature::{sectional_generic, tensors_from_sectional};
use homflow::flow::{asymptotic_reference, integrate, Clock, FlowKind, IntegratorConfig, Law, Regime};
use homflow::geometry::{DiagonalMetric, GeometryKind, StructureConstants};
use homflow::rescale::{limit_case, limit_metric, rescaled_metric, LimitConfig};
use homflow::singularity::{classify, fit_power_law};
use homflow::soliton::{certificates, default_points, verify_soliton_equation, verify_self_similar, DEFAULT_TIMES, SELF_SIMILAR_TOL};
use proptest::prelude::*;

fn dm(a: f64, b: f64, c: f64) -> DiagonalMetric {
    DiagonalMetric::new(a, b, c).unwrap()
}

#[test]
fn forward_asymptotic_exponents() {
    let rows = [
        (GeometryKind::Nil, FlowKind::RicciFlow, dm(1.0, 1.0, 1.0), Regime::Generic),
        (GeometryKind::Nil, FlowKind::XCFMinus, dm(1.0, 1.0, 1.0), Regime::Generic),
        (GeometryKind::Sol, FlowKind::RicciFlow, dm(2.0, 1.0, 1.0), Regime::Generic),
        (GeometryKind::SL2Tilde, FlowKind::RicciFlow, dm(1.0, 2.0, 1.0), Regime::Generic),
        (GeometryKind::SL2Tilde, FlowKind::XCFMinus, dm(1.0, 1.0, 1.0), Regime::Balanced),
        (GeometryKind::IsomE2Tilde, FlowKind::RicciFlow, dm(2.0, 1.0, 1.0), Regime::Generic),
        (GeometryKind::IsomE2Tilde, FlowKind::XCFMinus, dm(2.0, 1.0, 1.0), Regime::Generic),
    ];
    for (kind, flow, g0, regime) in rows {
        let spec = asymptotic_reference(kind, flow, regime).unwrap();
        assert_eq!(spec.clock, Clock::Forward);
        let traj = integrate(flow, kind, &g0, 1e6, &IntegratorConfig::default()).unwrap();
        let grid: Vec<_> = (0..=60).map(|k| traj.eval(10f64.powf(3.0 + k as f64 / 20.0)).unwrap()).collect();
        for (i, law) in spec.coefficients.iter().enumerate() {
            let Law::Power { exponent, .. } = law else { continue };
            let series: Vec<(f64, f64)> = grid.iter().map(|s| (s.t, s.g.as_array()[i])).collect();
            let fit = fit_power_law(&series, (1e3, 1e6)).unwrap();
            assert!((fit.exponent - exponent).abs() <= 0.01, "{kind}/{flow} g{i}: {} vs {exponent}", fit.exponent);
        }
        if let Some((_, _, Law::Power { exponent, .. })) = spec.difference {
            let series: Vec<(f64, f64)> = grid.iter().map(|s| (s.t, s.gap.abs())).collect();
            let fit = fit_power_law(&series, (1e3, 1e6)).unwrap();
            assert!((fit.exponent - exponent).abs() <= 0.01, "{kind}/{flow} gap: {} vs {exponent}", fit.exponent);
        }
    }
}

#[test]
fn classify_is_deterministic_and_uses_flow_exponent() {
    for flow in [FlowKind::RicciFlow, FlowKind::XCFMinus] {
        let traj = integrate(flow, GeometryKind::Sol, &dm(2.0, 1.0, 1.0), 1e6, &IntegratorConfig::default()).unwrap();
        let a = classify(&traj).unwrap();
        let b = classify(&traj).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.p, flow.p());
    }
}

proptest! {
    #[test]
    fn product_metrics_have_no_cross_curvature(a in 0.1f64..10.0, w in 0.1f64..10.0) {
        // H²×ℝ on the frame (∂_θ, y∂_x, y∂_y), [F₂, F₃] = −F₂.
        let sc = StructureConstants::from_brackets(&[((1, 2), [0, -1, 0])]);
        let g = dm(a, w, w);
        let t = tensors_from_sectional(&g, &sectional_generic(&sc, &g));
        prop_assert!(t.h_diag.iter().all(|h| h.abs() < 1e-14));
        prop_assert!((t.ricci_diag[1] + 1.0).abs() < 1e-12 && (t.ricci_diag[2] + 1.0).abs() < 1e-12);
    }
}

#[test]
fn sl2_rf_limit_on_a_hundred_points() {
    let case = limit_case("sl2-rf").unwrap();
    let cfg = IntegratorConfig { blowup_threshold: 1e300, ..Default::default() };
    let traj = integrate(case.flow, case.geometry, &case.initial, case.horizon(), &cfg).unwrap();
    let family = case.family(None).unwrap();
    let points = case.sample_points(100, 42);
    let r = limit_metric(&case, &traj, &family, &points, &case.times, &case.s_schedule(), &LimitConfig::default()).unwrap();
    assert!(r.converged, "{:?}", r.notes);
    // dθ² + (2t/y²)(dx² + dy²) up to the constant A_∞ in front of dθ².
    assert!((r.fitted_constants["k"] - 2.0).abs() < 1e-6);
}

#[test]
fn isome2_xcf_oscillation_dies_out() {
    let case = limit_case("isome2-xcf").unwrap();
    let cfg = IntegratorConfig { blowup_threshold: 1e300, ..Default::default() };
    let traj = integrate(case.flow, case.geometry, &case.initial, 1e12, &cfg).unwrap();
    let family = case.family(None).unwrap();
    let mut prev = f64::INFINITY;
    for s in [1e4, 1e6, 1e8, 1e10] {
        let g = rescaled_metric(&traj, &family, s, 1.0).unwrap();
        // The oscillating coefficient is (A − B) after the s^{1/4} stretch of x, y.
        let osc = (g.a - g.b).abs() * s.sqrt();
        assert!(osc < prev, "s = {s}: {osc}");
        prev = osc;
    }
}

#[test]
fn self_similar_certificates_solve_the_soliton_equation() {
    for cert in certificates() {
        let points = default_points(&cert, 20, 42);
        let tau = SELF_SIMILAR_TOL;
        if verify_self_similar(&cert, &points, &DEFAULT_TIMES).unwrap() < tau {
            let r = verify_soliton_equation(cert.geometry, cert.base_weights, &cert.generator(), cert.alpha, cert.solves, &points)
                .unwrap();
            assert!(r.analytic < 10.0 * tau, "{}: {:?}", cert.name, r);
            assert!(r.lie_agreement < 1e-6, "{}: {:?}", cert.name, r);
        }
    }
}
