use std::path::Path;
use std::process::{Command, Output};

use homflow::flow::{closed_form, FlowKind};
use homflow::geometry::{DiagonalMetric, GeometryKind};
use serde_json::Value;

fn homflow(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homflow"))
        .args(args)
        .env("HOMFLOW_OUT_DIR", dir)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("bad JSON ({e}): {}\n{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

#[test]
fn run_nil_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = homflow(dir.path(), &["run", "--geometry", "nil", "--flow", "rf", "--A", "1", "--B", "1", "--C", "1", "--t-end", "100"]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("nil-rf.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,A,B,C,K23,K31,K12,M");
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(last.len(), 8);
    assert_eq!(last[0], 100.0);
    let exact = closed_form(GeometryKind::Nil, FlowKind::RicciFlow, &DiagonalMetric::new(1.0, 1.0, 1.0).unwrap(), 100.0)
        .unwrap()
        .as_array();
    for i in 0..3 {
        assert!((last[i + 1] - exact[i]).abs() < 1e-6 * exact[i]);
    }
    // 17 significant digits.
    let a = csv.lines().nth(1).unwrap().split(',').nth(1).unwrap();
    assert_eq!(a.split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
}

#[test]
fn run_sol_xcf_blows_up() {
    let dir = tempfile::tempdir().unwrap();
    let out = homflow(dir.path(), &["run", "--geometry", "sol", "--flow", "xcf-", "--A", "2", "--B", "1", "--C", "1"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["status"], "BlowUp");
    let t0 = v["T0"].as_f64().unwrap();
    assert!(t0.is_finite() && t0 > 0.0);
    assert!(dir.path().join("sol-xcf--summary.json").exists());
}

#[test]
fn run_isome2_rf_equalizes() {
    let dir = tempfile::tempdir().unwrap();
    let out = homflow(dir.path(), &["run", "--geometry", "isome2tilde", "--flow", "rf", "--A", "1", "--B", "1", "--C", "5"]);
    let v = json(&out);
    let fin = &v["final"];
    assert!((fin[0].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!((fin[1].as_f64().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn classify_examples() {
    let dir = tempfile::tempdir().unwrap();
    for (g, abc, want) in [("nil", ["1", "1", "1"], "III"), ("sl2tilde", ["1", "1", "1"], "IIb"), ("sl2tilde", ["1", "2", "1"], "I")] {
        let flow = if g == "nil" { "rf" } else { "xcf-" };
        let out = homflow(
            dir.path(),
            &["classify", "--geometry", g, "--flow", flow, "--A", abc[0], "--B", abc[1], "--C", abc[2]],
        );
        assert!(out.status.success());
        let v = json(&out);
        assert_eq!(v["type"], want, "{g} {abc:?}");
        for key in ["geometry", "flow", "p", "T0", "exponent", "residual", "seed"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }
}

#[test]
fn limit_examples() {
    let dir = tempfile::tempdir().unwrap();
    for (g, f, r) in [("nil", "rf", "nil-soliton"), ("sl2tilde", "rf", "h2xr"), ("sl2tilde", "xcf-bneqc", "sol-xc-soliton")] {
        let out = homflow(dir.path(), &["limit", "--geometry", g, "--flow", f, "--reference", r]);
        assert!(out.status.success(), "{g}/{f}: {}", String::from_utf8_lossy(&out.stderr));
        let v = json(&out);
        assert_eq!(v["converged"], true);
        assert_eq!(v["reference_name"], r);
        for key in ["geometry", "flow", "scaling_exponents", "fitted_constants", "sup_error"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }
    let bad = homflow(dir.path(), &["limit", "--geometry", "nil", "--flow", "rf", "--reference", "h2xr"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn soliton_and_unknown_name() {
    let dir = tempfile::tempdir().unwrap();
    let out = homflow(dir.path(), &["soliton", "nil-xcf"]);
    assert!(out.status.success());
    let v = json(&out);
    assert!(v["self_similar_residual"].as_f64().unwrap() < 1e-10);
    assert_eq!(v["alpha"], 0.5);
    let bad = homflow(dir.path(), &["soliton", "nope"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("unknown soliton"));
}

#[test]
fn collapse_examples() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&homflow(dir.path(), &["collapse", "--geometry", "nil", "--flow", "rf", "--lattice", "standard"]));
    assert_eq!((v["collapses"].as_bool(), v["orbit_space_dimension"].as_u64(), v["stays_compact"].as_bool()), (Some(true), Some(0), Some(true)));
    let v = json(&homflow(dir.path(), &["collapse", "--geometry", "sol", "--flow", "xcf-", "--lattice", "standard"]));
    assert_eq!((v["collapses"].as_bool(), v["stays_compact"].as_bool()), (Some(false), Some(false)));
    let v = json(&homflow(dir.path(), &["collapse", "--geometry", "sl2tilde", "--flow", "xcf-beqc"]));
    assert_eq!(v["orbit_space_dimension"], 2);

    let lattice = dir.path().join("lattice.json");
    std::fs::write(&lattice, "[[2,0,0],[0,2,0],[0,0,4]]").unwrap();
    let v = json(&homflow(dir.path(), &["collapse", "--geometry", "nil", "--flow", "rf", "--lattice", lattice.to_str().unwrap()]));
    assert_eq!(v["lattice"], "custom");
    assert_eq!(v["orbit_space_dimension"], 0);
}

#[test]
fn curvature_command() {
    let dir = tempfile::tempdir().unwrap();
    let out = homflow(dir.path(), &["curvature", "--geometry", "nil"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["sectional"], serde_json::json!([-0.75, 0.25, 0.25]));
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "geometry = \"nil\"\nflow = \"rf\"\ninitial = [2.0, 1.0, 1.0]\nt_end = 10.0\nseed = 7\n").unwrap();
    let v = json(&homflow(dir.path(), &["--config", cfg.to_str().unwrap(), "run"]));
    assert_eq!(v["initial"][0], 2.0);
    assert_eq!(v["t_final"], 10.0);
    assert_eq!(v["seed"], 7);
    let v = json(&homflow(dir.path(), &["--config", cfg.to_str().unwrap(), "run", "--A", "3", "--t-end", "5"]));
    assert_eq!(v["initial"][0], 3.0);
    assert_eq!(v["t_final"], 5.0);
    std::fs::write(&cfg, "bogus = 1\n").unwrap();
    assert_eq!(homflow(dir.path(), &["--config", cfg.to_str().unwrap(), "run"]).status.code(), Some(2));
}

#[test]
fn outputs_are_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [a.path(), b.path()] {
        assert!(homflow(d, &["run", "--geometry", "sl2tilde", "--flow", "xcf-", "--B", "2"]).status.success());
        assert!(homflow(d, &["soliton", "sol-rf"]).status.success());
    }
    for f in ["sl2tilde-xcf-.csv", "soliton-sol-rf.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn invalid_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(homflow(dir.path(), &["run", "--geometry", "h2xr", "--flow", "rf"]).status.code(), Some(2));
    assert_eq!(homflow(dir.path(), &["run", "--geometry", "nil", "--flow", "rf", "--A", "-1"]).status.code(), Some(2));
    assert!(!homflow(dir.path(), &["frobnicate"]).status.success());
}
