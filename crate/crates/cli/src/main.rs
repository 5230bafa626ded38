//! `homflow` command-line driver: run flows, classify singularities, check
//! rescaled limits and soliton certificates, analyze collapse and print
//! curvatures. Outputs go to `--out-dir`, `$HOMFLOW_OUT_DIR` or `./out`.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use homflow::curvature::{curvature_tensors, sectional, sectional_oracle};
use homflow::flow::{integrate, FlowKind, IntegratorConfig, Regime, Status, Trajectory};
use homflow::geometry::{DiagonalMetric, GeometryKind};
use homflow::group::{collapse_analysis, Lattice};
use homflow::rescale::{limit_case, limit_case_for, run_limit_case, LimitCase, LimitConfig};
use homflow::singularity::{classify, curvature_norm};
use homflow::soliton::{certificate, certificates, verify_certificate};

const OUT_DIR_ENV: &str = "HOMFLOW_OUT_DIR";
const DEFAULT_T_END: f64 = 1e6;

#[derive(Parser, Debug)]
#[command(name = "homflow", version, about = "Ricci and cross curvature flow on homogeneous 3-geometries")]
struct Cli {
    /// TOML file with defaults for any flag below.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides $HOMFLOW_OUT_DIR).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate a flow and write the trajectory CSV and a summary JSON.
    Run(FlowArgs),
    /// Integrate and classify the singularity.
    Classify(FlowArgs),
    /// Rescaled limit against a named reference metric.
    Limit(LimitArgs),
    /// Verify a soliton certificate, or all of them.
    Soliton {
        name: Option<String>,
    },
    /// Collapse analysis of a compact quotient.
    Collapse(CollapseArgs),
    /// Sectional, Ricci and cross curvature of a left-invariant metric.
    Curvature(MetricArgs),
}

#[derive(Args, Debug, Default)]
struct MetricArgs {
    #[arg(long)]
    geometry: Option<String>,
    #[arg(long = "A")]
    a: Option<f64>,
    #[arg(long = "B")]
    b: Option<f64>,
    #[arg(long = "C")]
    c: Option<f64>,
}

#[derive(Args, Debug)]
struct FlowArgs {
    #[command(flatten)]
    metric: MetricArgs,
    /// rf, xcf- or xcf+.
    #[arg(long)]
    flow: Option<String>,
    /// Final time; `auto` integrates to 1e6 or until blow-up.
    #[arg(long)]
    t_end: Option<String>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
    /// Trajectory CSV path (default <out-dir>/<geometry>-<flow>.csv).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LimitArgs {
    /// Worked case name, e.g. nil-rf or sl2-xcf-bneqc.
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    geometry: Option<String>,
    /// rf, xcf-, xcf-beqc or xcf-bneqc.
    #[arg(long)]
    flow: Option<String>,
    /// Expected reference name; rejected if it does not match the case.
    #[arg(long)]
    reference: Option<String>,
}

#[derive(Args, Debug)]
struct CollapseArgs {
    #[arg(long)]
    geometry: Option<String>,
    #[arg(long)]
    flow: Option<String>,
    /// `standard` or a JSON file holding an array of generator triples.
    #[arg(long)]
    lattice: Option<String>,
}

/// Keys accepted in the TOML config; flags win over the file.
#[derive(Deserialize, Serialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    geometry: Option<String>,
    flow: Option<String>,
    initial: Option<[f64; 3]>,
    t_end: Option<f64>,
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
    case: Option<String>,
    reference: Option<String>,
    lattice: Option<String>,
    certificate: Option<String>,
}

struct Context_ {
    file: FileConfig,
    out_dir: PathBuf,
    seed: u64,
}

impl Context_ {
    fn new(cli: &Cli) -> Result<Self> {
        let file = match &cli.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => FileConfig::default(),
        };
        let out_dir = cli
            .out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .or_else(|| file.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        let seed = cli.seed.or(file.seed).unwrap_or(42);
        Ok(Context_ { file, out_dir, seed })
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out_dir).with_context(|| format!("creating {}", self.out_dir.display()))?;
        let path = self.out_dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    /// Pretty JSON with the seed recorded, printed and written to `name`.
    fn emit<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut v = serde_json::to_value(value)?;
        if let Value::Object(map) = &mut v {
            map.insert("seed".into(), Value::from(self.seed));
        }
        let text = serde_json::to_string_pretty(&v)? + "\n";
        print!("{text}");
        self.write(name, &text)?;
        Ok(())
    }

    fn geometry(&self, flag: &Option<String>) -> Result<GeometryKind> {
        let s = flag.clone().or_else(|| self.file.geometry.clone()).context("missing --geometry")?;
        Ok(s.parse()?)
    }

    fn metric(&self, m: &MetricArgs) -> Result<DiagonalMetric> {
        let init = self.file.initial.unwrap_or([1.0; 3]);
        Ok(DiagonalMetric::new(m.a.unwrap_or(init[0]), m.b.unwrap_or(init[1]), m.c.unwrap_or(init[2]))?)
    }
}

/// Splits `xcf-beqc` / `xcf-bneqc` into the flow and the SL̃(2,ℝ) regime.
fn parse_flow(s: &str) -> Result<(FlowKind, Option<Regime>)> {
    let lower = s.to_ascii_lowercase();
    if let Some(base) = lower.strip_suffix("-bneqc") {
        return Ok((flow_base(base)?, Some(Regime::Generic)));
    }
    if let Some(base) = lower.strip_suffix("-beqc") {
        return Ok((flow_base(base)?, Some(Regime::Balanced)));
    }
    Ok((lower.parse()?, None))
}

fn flow_base(s: &str) -> Result<FlowKind> {
    match s {
        "xcf" | "xcf-" => Ok(FlowKind::XCFMinus),
        other => bail!("regime suffixes apply to xcf only, got '{other}'"),
    }
}

fn integrate_args(ctx: &Context_, args: &FlowArgs) -> Result<(Trajectory, GeometryKind, FlowKind)> {
    let kind = ctx.geometry(&args.metric.geometry)?;
    let flow_s = args.flow.clone().or_else(|| ctx.file.flow.clone()).context("missing --flow")?;
    let (flow, _) = parse_flow(&flow_s)?;
    let g0 = ctx.metric(&args.metric)?;
    let t_end = match args.t_end.as_deref() {
        None | Some("auto") => ctx.file.t_end.unwrap_or(DEFAULT_T_END),
        Some(v) => v.parse().with_context(|| format!("invalid --t-end '{v}'"))?,
    };
    let mut cfg = IntegratorConfig::default();
    if let Some(r) = args.rel_tol.or(ctx.file.rel_tol) {
        cfg.rel_tol = r;
    }
    if let Some(a) = args.abs_tol.or(ctx.file.abs_tol) {
        cfg.abs_tol = a;
    }
    Ok((integrate(flow, kind, &g0, t_end, &cfg)?, kind, flow))
}

fn trajectory_csv(traj: &Trajectory) -> Result<String> {
    let mut out = String::from("t,A,B,C,K23,K31,K12,M\n");
    for s in &traj.samples {
        let k = traj.curvatures(s);
        let m = curvature_norm(traj.kind, &s.g)?;
        let row = [s.t, s.g.a, s.g.b, s.g.c, k.k23, k.k31, k.k12, m].map(|v| format!("{v:.16e}"));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

#[derive(Serialize)]
struct RunSummary<'a> {
    geometry: GeometryKind,
    flow: FlowKind,
    initial: [f64; 3],
    #[serde(rename = "final")]
    final_metric: [f64; 3],
    t_final: f64,
    #[serde(flatten)]
    status: &'a Status,
    #[serde(rename = "T0")]
    t0: Option<f64>,
    samples: usize,
    csv: String,
}

fn cmd_run(ctx: &Context_, args: &FlowArgs) -> Result<bool> {
    let (traj, kind, flow) = integrate_args(ctx, args)?;
    let stem = format!("{kind}-{flow}");
    let csv = trajectory_csv(&traj)?;
    let csv_path = match &args.csv {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, &csv)?;
            p.clone()
        }
        None => ctx.write(&format!("{stem}.csv"), &csv)?,
    };
    let summary = RunSummary {
        geometry: kind,
        flow,
        initial: traj.samples[0].g.as_array(),
        final_metric: traj.last().g.as_array(),
        t_final: traj.t_last(),
        status: &traj.status,
        t0: traj.t0(),
        samples: traj.samples.len(),
        csv: csv_path.display().to_string(),
    };
    ctx.emit(&format!("{stem}-summary.json"), &summary)?;
    Ok(true)
}

fn cmd_classify(ctx: &Context_, args: &FlowArgs) -> Result<bool> {
    let (traj, kind, flow) = integrate_args(ctx, args)?;
    let report = classify(&traj)?;
    ctx.emit(&format!("{kind}-{flow}-classify.json"), &report)?;
    Ok(true)
}

fn resolve_case(ctx: &Context_, args: &LimitArgs) -> Result<LimitCase> {
    if let Some(name) = args.case.clone().or_else(|| ctx.file.case.clone()) {
        return Ok(limit_case(&name)?);
    }
    let kind = ctx.geometry(&args.geometry)?;
    let flow_s = args.flow.clone().or_else(|| ctx.file.flow.clone()).context("missing --flow or --case")?;
    let (flow, regime) = parse_flow(&flow_s)?;
    Ok(limit_case_for(kind, flow, regime.unwrap_or(Regime::Generic))?)
}

fn cmd_limit(ctx: &Context_, args: &LimitArgs) -> Result<bool> {
    let case = resolve_case(ctx, args)?;
    if let Some(r) = args.reference.clone().or_else(|| ctx.file.reference.clone()) {
        if r != case.reference.name {
            bail!("case {} compares against '{}', not '{r}'", case.name, case.reference.name);
        }
    }
    let cfg = LimitConfig { seed: ctx.seed, ..LimitConfig::default() };
    let report = run_limit_case(&case, &IntegratorConfig::default(), &cfg)?;
    ctx.emit(&format!("limit-{}.json", case.name), &report)?;
    Ok(report.converged)
}

fn cmd_soliton(ctx: &Context_, name: &Option<String>) -> Result<bool> {
    let chosen = match name.clone().or_else(|| ctx.file.certificate.clone()) {
        Some(n) => vec![certificate(&n)?],
        None => certificates(),
    };
    let mut ok = true;
    let mut reports = Vec::new();
    for cert in &chosen {
        let r = verify_certificate(cert, ctx.seed)?;
        ok &= r.verified;
        reports.push(r);
    }
    if reports.len() == 1 {
        ctx.emit(&format!("soliton-{}.json", reports[0].name), &reports[0])?;
    } else {
        ctx.emit("solitons.json", &serde_json::json!({ "certificates": reports }))?;
    }
    Ok(ok)
}

fn load_lattice(kind: GeometryKind, spec: &str) -> Result<Lattice> {
    if spec == "standard" {
        return Ok(Lattice::standard(kind)?);
    }
    let text = fs::read_to_string(Path::new(spec)).with_context(|| format!("reading lattice {spec}"))?;
    let gens: Vec<[f64; 3]> = serde_json::from_str(&text).with_context(|| format!("parsing lattice {spec}"))?;
    Ok(Lattice::custom(kind, &gens)?)
}

fn cmd_collapse(ctx: &Context_, args: &CollapseArgs) -> Result<bool> {
    let kind = ctx.geometry(&args.geometry)?;
    let flow_s = args.flow.clone().or_else(|| ctx.file.flow.clone()).context("missing --flow")?;
    let (flow, regime) = parse_flow(&flow_s)?;
    let case = limit_case_for(kind, flow, regime.unwrap_or(Regime::Generic))?;
    let spec = args.lattice.clone().or_else(|| ctx.file.lattice.clone()).unwrap_or_else(|| "standard".into());
    let lattice = load_lattice(kind, &spec)?;
    let report = collapse_analysis(&case, &lattice, ctx.seed)?;
    ctx.emit(&format!("collapse-{}.json", case.name), &report)?;
    Ok(true)
}

#[derive(Serialize)]
struct CurvatureReport {
    geometry: GeometryKind,
    metric: [f64; 3],
    sectional: [f64; 3],
    oracle: [f64; 3],
    oracle_deviation: f64,
    ricci: [f64; 3],
    cross_curvature: [f64; 3],
    scalar: f64,
}

fn cmd_curvature(ctx: &Context_, args: &MetricArgs) -> Result<bool> {
    let kind = ctx.geometry(&args.geometry)?;
    let g = ctx.metric(args)?;
    let k = sectional(kind, &g)?.as_array();
    let o = sectional_oracle(kind, &g)?.as_array();
    let dev = k.iter().zip(&o).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let t = curvature_tensors(kind, &g)?;
    let report = CurvatureReport {
        geometry: kind,
        metric: g.as_array(),
        sectional: k,
        oracle: o,
        oracle_deviation: dev,
        ricci: t.ricci_diag,
        cross_curvature: t.h_diag,
        scalar: t.scalar,
    };
    ctx.emit(&format!("curvature-{kind}.json"), &report)?;
    Ok(dev < 1e-10 * o.iter().fold(1.0f64, |m, v| m.max(v.abs())))
}

fn run(cli: &Cli) -> Result<bool> {
    let ctx = Context_::new(cli)?;
    match &cli.command {
        Command::Run(a) => cmd_run(&ctx, a),
        Command::Classify(a) => cmd_classify(&ctx, a),
        Command::Limit(a) => cmd_limit(&ctx, a),
        Command::Soliton { name } => cmd_soliton(&ctx, name),
        Command::Collapse(a) => cmd_collapse(&ctx, a),
        Command::Curvature(a) => cmd_curvature(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e:#}");
            ExitCode::from(2)
        }
    }
}
