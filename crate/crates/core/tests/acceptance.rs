//! Acceptance suite: one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use homflow::curvature::{curvature_tensors, sectional, sectional_oracle};
use homflow::flow::{closed_form, integrate, FlowKind, IntegratorConfig};
use homflow::geometry::{ChartPoint, DiagonalMetric, GeometryKind};
use homflow::group::{
    act, collapse_analysis, compose, mu3_lift, phi_chart, phi_chart_inverse, GroupElement, Lattice,
    DISPLACEMENT_FLOOR,
};
use homflow::rescale::{limit_case, limit_cases, run_limit_case, LimitConfig};
use homflow::singularity::{classify, fit_power_law, SingularityType};
use homflow::soliton::{certificates, verify_certificate, EQUATION_TOL, SELF_SIMILAR_TOL};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 42;
const FLOWABLE: [GeometryKind; 4] =
    [GeometryKind::Nil, GeometryKind::Sol, GeometryKind::SL2Tilde, GeometryKind::IsomE2Tilde];

type Outcome = Result<String, String>;

fn dm(w: [f64; 3]) -> DiagonalMetric {
    DiagonalMetric::from_array(w).expect("valid metric")
}

fn nil_rf_closed_form() -> Outcome {
    let g0 = dm([1.0, 1.0, 1.0]);
    let traj = integrate(FlowKind::RicciFlow, GeometryKind::Nil, &g0, 100.0, &IntegratorConfig::default())
        .map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for k in 0..=1000 {
        let t = 0.1 * f64::from(k);
        let num = traj.eval(t).map_err(|e| e.to_string())?.g.as_array();
        let exact = closed_form(GeometryKind::Nil, FlowKind::RicciFlow, &g0, t).map_err(|e| e.to_string())?.as_array();
        for i in 0..3 {
            worst = worst.max((num[i] - exact[i]).abs() / exact[i]);
        }
    }
    let msg = format!("max relative error {worst:.2e} on 1001 times in [0,100]");
    if worst < 1e-6 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn nil_xcf_exponents() -> Outcome {
    let traj = integrate(FlowKind::XCFMinus, GeometryKind::Nil, &dm([1.0; 3]), 1e6, &IntegratorConfig::default())
        .map_err(|e| e.to_string())?;
    let series = |i: usize| -> Vec<(f64, f64)> { traj.samples.iter().map(|s| (s.t, s.g.as_array()[i])).collect() };
    let a = fit_power_law(&series(0), (1e3, 1e6)).map_err(|e| e.to_string())?.exponent;
    let b = fit_power_law(&series(1), (1e3, 1e6)).map_err(|e| e.to_string())?.exponent;
    let msg = format!("A ~ t^{a:.5} (want {:.5}), B ~ t^{b:.5} (want {:.5})", -1.0 / 14.0, 3.0 / 14.0);
    if (a + 1.0 / 14.0).abs() <= 0.01 && (b - 3.0 / 14.0).abs() <= 0.01 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn classification_table() -> Outcome {
    use SingularityType::*;
    let rows = [
        (GeometryKind::Nil, FlowKind::RicciFlow, [1.0, 1.0, 1.0], III, "nil/rf"),
        (GeometryKind::Sol, FlowKind::RicciFlow, [2.0, 1.0, 1.0], III, "sol/rf"),
        (GeometryKind::SL2Tilde, FlowKind::RicciFlow, [1.0, 2.0, 1.0], III, "sl2/rf"),
        (GeometryKind::IsomE2Tilde, FlowKind::RicciFlow, [2.0, 1.0, 1.0], III, "isome2/rf"),
        (GeometryKind::Nil, FlowKind::XCFMinus, [1.0, 1.0, 1.0], III, "nil/xcf"),
        (GeometryKind::Sol, FlowKind::XCFMinus, [2.0, 1.0, 1.0], I, "sol/xcf"),
        (GeometryKind::SL2Tilde, FlowKind::XCFMinus, [1.0, 1.0, 1.0], IIb, "sl2/xcf B=C"),
        (GeometryKind::SL2Tilde, FlowKind::XCFMinus, [1.0, 2.0, 1.0], I, "sl2/xcf B!=C"),
        (GeometryKind::IsomE2Tilde, FlowKind::XCFMinus, [2.0, 1.0, 1.0], III, "isome2/xcf"),
    ];
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for (kind, flow, g0, want, label) in rows {
        let traj = integrate(flow, kind, &dm(g0), 1e6, &IntegratorConfig::default()).map_err(|e| e.to_string())?;
        let r = classify(&traj).map_err(|e| e.to_string())?;
        worst = worst.max(r.residual);
        if r.singularity_type != want || r.residual >= 0.02 {
            failures.push(format!("{label}: got {} (residual {:.2e})", r.singularity_type, r.residual));
        }
        if kind == GeometryKind::Sol && flow == FlowKind::XCFMinus && !r.notes.iter().any(|n| n.contains("IIa")) {
            failures.push("sol/xcf: Type I vs IIa note missing".into());
        }
    }
    if failures.is_empty() {
        Ok(format!("9 rows match, worst residual {worst:.2e}, Sol/XCF note present"))
    } else {
        Err(failures.join("; "))
    }
}

fn curvature_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut k_err, mut h_err) = (0.0f64, 0.0f64);
    for n in 0..10_000 {
        let kind = FLOWABLE[n % 4];
        let g = dm([(); 3].map(|_| 10f64.powf(rng.gen_range(-1.0..1.0))));
        let fast = sectional(kind, &g).map_err(|e| e.to_string())?.as_array();
        let oracle = sectional_oracle(kind, &g).map_err(|e| e.to_string())?.as_array();
        let scale = oracle.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..3 {
            k_err = k_err.max((fast[i] - oracle[i]).abs() / scale);
        }
        let c = rng.gen_range(0.1..10.0);
        let h = curvature_tensors(kind, &g).map_err(|e| e.to_string())?.h_diag;
        let hc = curvature_tensors(kind, &g.scaled(c)).map_err(|e| e.to_string())?.h_diag;
        let hs = h.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for i in 0..3 {
            h_err = h_err.max((hc[i] - h[i] / c).abs() / (hs / c));
        }
    }
    let msg = format!("1e4 metrics: oracle deviation {k_err:.2e}, h(cg) vs h(g)/c {h_err:.2e}");
    if k_err < 1e-10 && h_err < 1e-10 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn soliton_certificates() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for cert in certificates() {
        let r = verify_certificate(&cert, SEED).map_err(|e| e.to_string())?;
        ok &= r.self_similar_residual < SELF_SIMILAR_TOL && r.equation.finite_difference < EQUATION_TOL;
        parts.push(format!(
            "{} {:.1e}/{:.1e}",
            r.name, r.self_similar_residual, r.equation.finite_difference
        ));
    }
    let msg = format!("self-similar/FD residuals: {}", parts.join(", "));
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn rescaled_limits() -> Outcome {
    let mut parts = Vec::new();
    let mut failures = Vec::new();
    for case in limit_cases() {
        let r = run_limit_case(&case, &IntegratorConfig::default(), &LimitConfig::default())
            .map_err(|e| format!("{}: {e}", case.name))?;
        let final_diff = r.cauchy_differences.last().copied().unwrap_or(f64::NAN);
        let mut constants_ok = true;
        for (name, want) in &r.predicted_constants {
            let got = r.fitted_constants[name];
            if (got - want).abs() > 1e-4 * want.abs().max(1.0) {
                constants_ok = false;
                failures.push(format!("{}: {name} fitted {got} vs predicted {want}", r.case));
            }
        }
        if !r.converged || final_diff >= 1e-6 || !constants_ok {
            failures.push(format!("{}: converged {} diff {final_diff:.1e} sup {:.1e}", r.case, r.converged, r.sup_error));
        }
        parts.push(format!("{} {:.0e}", r.case, r.sup_error));
    }
    if failures.is_empty() {
        Ok(format!("9 cases converge to their references (sup error: {})", parts.join(", ")))
    } else {
        Err(failures.join("; "))
    }
}

fn wrap(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

fn sl2_group_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let kind = GeometryKind::SL2Tilde;
    let element = |rng: &mut ChaCha8Rng| {
        GroupElement::new(kind, [rng.gen_range(-2.0..2.0), rng.gen_range(-1.5f64..1.5).exp(), rng.gen_range(-10.0..10.0)])
            .expect("valid element")
    };
    let (mut equi, mut ident, mut proj, mut assoc) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let g = element(&mut rng);
        let p = element(&mut rng);
        let [tau, th] = [g.params[2], p.params[2]];
        let (x, y) = (p.params[0], p.params[1]);
        equi = equi.max((mu3_lift(tau + 2.0 * PI, x, y, th) - mu3_lift(tau, x, y, th) - 2.0 * PI).abs());
        ident = ident.max((mu3_lift(0.0, 0.0, 1.0, th) - th).abs());

        let m = phi_chart_inverse(g.params[0], g.params[1], tau).map_err(|e| e.to_string())?
            * phi_chart_inverse(x, y, th).map_err(|e| e.to_string())?;
        let [xo, yo, ang] = phi_chart(&m).map_err(|e| e.to_string())?;
        let q = act(&g, &p.as_point()).map_err(|e| e.to_string())?;
        proj = proj.max(wrap(q.0[2] - ang).abs()).max((q.0[0] - xo).abs()).max((q.0[1] - yo).abs());

        let h = element(&mut rng);
        let lhs = compose(&compose(&g, &p).map_err(|e| e.to_string())?, &h).map_err(|e| e.to_string())?;
        let rhs = compose(&g, &compose(&p, &h).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        assoc = assoc.max(ChartPoint(lhs.params).distance(&ChartPoint(rhs.params)));
    }
    let msg = format!(
        "2π-equivariance {equi:.1e}, identity {ident:.1e}, projection {proj:.1e}, associativity {assoc:.1e} (1e4 samples)"
    );
    if equi <= 1e-12 && ident == 0.0 && proj < 1e-9 && assoc < 1e-9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn collapse_table() -> Outcome {
    // (case, collapses, dimension, compact): RF figure rows then XCF figure rows.
    let rows = [
        ("nil-rf", true, 0, true),
        ("sol-rf", true, 1, true),
        ("sl2-rf", true, 2, true),
        ("isome2-rf", true, 0, true),
        ("nil-xcf", true, 0, true),
        ("sol-xcf", false, 3, false),
        ("sl2-xcf-beqc", true, 2, true),
        ("sl2-xcf-bneqc", false, 3, false),
        ("isome2-xcf", true, 0, true),
    ];
    let mut failures = Vec::new();
    let mut cells = Vec::new();
    for (name, collapses, dim, compact) in rows {
        let case = limit_case(name).map_err(|e| e.to_string())?;
        let lattice = Lattice::standard(case.geometry).map_err(|e| e.to_string())?;
        let r = collapse_analysis(&case, &lattice, SEED).map_err(|e| e.to_string())?;
        let cell = if r.collapses { format!("Yes({})", r.orbit_space_dimension) } else { "No".into() };
        cells.push(format!("{name} {cell}/{}", if r.stays_compact { "Yes" } else { "No" }));
        if (r.collapses, r.orbit_space_dimension, r.stays_compact) != (collapses, dim, compact)
            || r.min_displacement <= DISPLACEMENT_FLOOR
        {
            failures.push(format!("{name}: {r:?}"));
        }
    }
    if failures.is_empty() {
        Ok(cells.join(", "))
    } else {
        Err(failures.join("; "))
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("1 nil/rf closed form", nil_rf_closed_form),
        ("2 nil/xcf exponents", nil_xcf_exponents),
        ("3 classification table", classification_table),
        ("4 curvature oracle", curvature_oracle),
        ("5 soliton certificates", soliton_certificates),
        ("6 rescaled limits", rescaled_limits),
        ("7 sl2 lifted group law", sl2_group_law),
        ("8 collapse table", collapse_table),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS  {name}: {msg} [{secs:.1}s]"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {name}: {msg} [{secs:.1}s]");
            }
        }
    }
    println!("{} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
