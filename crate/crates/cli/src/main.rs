mod config;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use config::RunConfig;
use heavenly_core::error::Error as CoreError;
use heavenly_core::geometry::{self, CurvatureMethod, MetricPath};
use heavenly_core::report::{fmt_f64, write_csv, SuiteAccumulator, SuiteSummary};
use heavenly_core::residuals::{self, ResidualReport};
use heavenly_core::sampling::halton_points;
use heavenly_core::solution::{certify_regularity, RegularityReport};
use heavenly_core::symmetry::{self, Grid3, Verdict};
use heavenly_core::{FlatPotential, Params, Point4, PotentialField, SolutionField};
use rayon::prelude::*;
use serde::Serialize;
use std::path::{Path, PathBuf};

const EXIT_OK: i32 = 0;
const EXIT_TOLERANCE: i32 = 1;
const EXIT_REGULARITY: i32 = 2;
const EXIT_KERNEL: i32 = 3;
const EXIT_USAGE: i32 = 64;

#[derive(Parser)]
#[command(
    name = "heavenly",
    about = "Certify an explicit noninvariant Monge-Ampère potential and its Ricci-flat metric",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of sample points (overrides the config).
    #[arg(long)]
    points: Option<usize>,
    /// Sampling seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Override the signature selector of the loaded parameters (+1 or -1).
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Provider {
    Solution,
    Flat,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every residual and geometry suite over sampled points.
    Verify(Common),
    /// Tabulate an observable over a coordinate grid.
    Scan {
        #[command(flatten)]
        common: Common,
        /// Observable to tabulate.
        #[arg(long)]
        observable: Observable,
        /// Grid node counts per axis, e.g. 5,5,5,5.
        #[arg(long, default_value = "5,5,5,5")]
        grid: String,
        #[arg(long, value_enum, default_value_t = Provider::Solution)]
        provider: Provider,
    },
    /// Point-symmetry rank test.
    Killing {
        #[command(flatten)]
        common: Common,
        /// Polynomial degree cap of the harmonic generator family.
        #[arg(long, default_value_t = 4)]
        degree: usize,
        /// Relative singular-value threshold for the verdict.
        #[arg(long, default_value_t = 1e-6)]
        threshold: f64,
        #[arg(long, value_enum, default_value_t = Provider::Solution)]
        provider: Provider,
    },
    /// Grid consistency checks of the nonlocal flows.
    FlowCheck {
        #[command(flatten)]
        common: Common,
        /// Lattice size per axis for the main checks.
        #[arg(long, default_value_t = 32)]
        grid_n: usize,
    },
    /// Regularity certification only.
    Domain(Common),
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Observable {
    #[value(name = "kretschmann")]
    Kretschmann,
    #[value(name = "ricci_max")]
    RicciMax,
    #[value(name = "Q", alias = "q")]
    Q,
    #[value(name = "a")]
    A,
    #[value(name = "duality_max")]
    DualityMax,
    /// All of a, b, c, Q, kretschmann, ricci_max, duality_max.
    #[value(name = "full")]
    Full,
}

impl Observable {
    fn header(&self) -> &'static str {
        match self {
            Observable::Kretschmann => "kretschmann",
            Observable::RicciMax => "ricci_max",
            Observable::Q => "Q",
            Observable::A => "a",
            Observable::DualityMax => "duality_max",
            Observable::Full => "a,b,c,Q,kretschmann,ricci_max,duality_max",
        }
    }
}

fn main() {
    if let Ok(v) = std::env::var("HEAVENLY_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version are ordinary exits
            if e.use_stderr() {
                eprint!("{e}");
                std::process::exit(EXIT_USAGE);
            }
            print!("{e}");
            std::process::exit(EXIT_OK);
        }
    };
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
    };
    std::process::exit(code);
}

fn load(common: &Common) -> anyhow::Result<(RunConfig, PathBuf)> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(p) = common.points {
        cfg.n_points = p;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(e) = &common.epsilon {
        let eps: i8 = match e.trim() {
            "+1" | "1" => 1,
            "-1" => -1,
            other => anyhow::bail!("--epsilon must be +1 or -1, got {other}"),
        };
        cfg.params.eps = eps;
    }
    cfg.validate()?;
    let out = common.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    std::fs::create_dir_all(&out)
        .with_context(|| format!("cannot create output dir {}", out.display()))?;
    Ok((cfg, out))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.cmd {
        Cmd::Verify(common) => cmd_verify(&common),
        Cmd::Scan {
            common,
            observable,
            grid,
            provider,
        } => cmd_scan(&common, observable, &grid, provider),
        Cmd::Killing {
            common,
            degree,
            threshold,
            provider,
        } => cmd_killing(&common, degree, threshold, provider),
        Cmd::FlowCheck { common, grid_n } => cmd_flow_check(&common, grid_n),
        Cmd::Domain(common) => cmd_domain(&common),
    }
}

#[derive(Serialize)]
struct VerifyReport {
    ok: bool,
    n_points: usize,
    seed: u64,
    notes: Vec<String>,
    regularity: RegularityReport,
    suites: Vec<SuiteSummary>,
    /// max/mean relative residual keyed by individual identity name.
    identities: Vec<SuiteSummary>,
}

/// Per-point rows: (suite, report).
fn verify_point(
    params: &Params,
    p: Point4,
) -> Result<Vec<(&'static str, ResidualReport)>, CoreError> {
    let field = SolutionField::new(params);
    let mut rows: Vec<(&'static str, ResidualReport)> = Vec::with_capacity(32);
    for r in residuals::cma_residual(&field, p)? {
        rows.push(("cma", r));
    }
    for r in residuals::invariance_residual(&field, p)? {
        rows.push(("invariance", r));
    }
    for r in residuals::chain_identity_suite(params, p)? {
        rows.push(("chain", r));
    }
    for r in residuals::relations_residual(&field, p)? {
        rows.push(("relations", r));
    }

    let jets = geometry::metric_components(&field, p, MetricPath::FromJets)?;
    let closed = geometry::metric_components(&field, p, MetricPath::ClosedForm)?;
    let comp_scale = [jets.a, jets.b, jets.c, jets.q]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    for (name, x, y) in [
        ("metric_a", jets.a, closed.a),
        ("metric_b", jets.b, closed.b),
        ("metric_c", jets.c, closed.c),
        ("metric_Q", jets.q, closed.q),
    ] {
        rows.push(("metric_cross", ResidualReport::new(name, x - y, comp_scale)));
    }

    let cf = geometry::coframe(&jets)?;
    let g = geometry::metric_matrix(&jets);
    let recon = cf.reconstruct(params.epsf());
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            worst = worst.max((recon[i][j] - g[i][j]).abs());
            scale = scale.max(g[i][j].abs());
        }
    }
    rows.push((
        "coframe",
        ResidualReport::new("coframe_reconstruction", worst, scale),
    ));

    let torsion = geometry::torsion_residual(&field, p)?;
    for (i, t) in torsion.iter().enumerate() {
        let name = ["torsion_e0", "torsion_e1", "torsion_e2", "torsion_e3"][i];
        rows.push(("torsion", ResidualReport::new(name, *t, 1.0)));
    }

    let direct = geometry::riemann(&field, p, CurvatureMethod::ClosedForm)?;
    let cartan = geometry::riemann(&field, p, CurvatureMethod::Cartan)?;
    let cscale = direct.component_scale().max(cartan.component_scale());
    let mut cross = 0.0f64;
    for r in 0..3 {
        for c in 0..6 {
            cross = cross.max((direct.components[r][c] - cartan.components[r][c]).abs());
        }
    }
    rows.push((
        "curvature_cross",
        ResidualReport::new("riemann_cross", cross, cscale),
    ));
    rows.push((
        "ricci",
        ResidualReport::new("ricci_max", cartan.ricci_max(), cartan.kretschmann.sqrt()),
    ));
    rows.push((
        "duality",
        ResidualReport::new("duality_max", cartan.duality_max(), 1.0),
    ));
    Ok(rows)
}

fn cmd_verify(common: &Common) -> anyhow::Result<i32> {
    let (cfg, out) = load(common)?;
    let reg = certify_regularity(&cfg.params, &cfg.bx, cfg.n_points.max(128))
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    if !reg.ok {
        write_json(
            &out.join("verify.json"),
            &serde_json::json!({
                "ok": false,
                "reason": "regularity certification failed",
                "regularity": reg,
            }),
        )?;
        eprintln!("regularity certification failed: {reg:?}");
        return Ok(EXIT_REGULARITY);
    }

    let points = halton_points(&cfg.bx, cfg.seed, cfg.n_points);
    let results: Vec<_> = points
        .par_iter()
        .map(|&p| verify_point(&cfg.params, p))
        .collect();

    let mut acc = SuiteAccumulator::new();
    let mut by_identity = SuiteAccumulator::new();
    let mut csv_rows = Vec::new();
    for (p, res) in points.iter().zip(results) {
        let rows = match res {
            Ok(rows) => rows,
            Err(e @ (CoreError::OutsideRegularity { .. } | CoreError::FrameDomain { .. })) => {
                eprintln!("regularity breach at {p:?}: {e}");
                return Ok(EXIT_REGULARITY);
            }
            Err(e) => return Err(anyhow::anyhow!("{e}")),
        };
        for (suite, r) in rows {
            acc.push_report(suite, &r);
            by_identity.push_report(&r.name, &r);
            csv_rows.push(vec![
                fmt_f64(p.t),
                fmt_f64(p.x),
                fmt_f64(p.y),
                fmt_f64(p.z),
                r.name.clone(),
                fmt_f64(r.value),
                fmt_f64(r.scale),
                fmt_f64(r.relative),
            ]);
        }
    }
    let tolerances = cfg.merged_tolerances();
    let suites = acc.summaries(&tolerances, 1e-9);
    let identities = by_identity.summaries(&tolerances, f64::INFINITY);
    let ok = suites.iter().all(|s| s.pass);
    let mut notes = Vec::new();
    if cfg.params.c0 < 0.0 {
        notes.push(
            "c0 < 0: accepted (only c0 != 0 is required), outside the range some derived \
             substitutions assume"
                .to_string(),
        );
    }
    write_csv(
        &out.join("verify.csv"),
        "t,x,y,z,name,value,scale,relative",
        csv_rows,
    )?;
    write_json(
        &out.join("verify.json"),
        &VerifyReport {
            ok,
            n_points: cfg.n_points,
            seed: cfg.seed,
            notes,
            regularity: reg,
            suites,
            identities,
        },
    )?;
    println!(
        "verify: {} over {} points (reports in {})",
        if ok { "ok" } else { "TOLERANCE BREACH" },
        cfg.n_points,
        out.display()
    );
    Ok(if ok { EXIT_OK } else { EXIT_TOLERANCE })
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn cmd_scan(
    common: &Common,
    observable: Observable,
    grid: &str,
    provider: Provider,
) -> anyhow::Result<i32> {
    let (cfg, out) = load(common)?;
    let counts: Vec<usize> = grid
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .context("grid must be four comma-separated counts")?;
    if counts.len() != 4 || counts.contains(&0) {
        anyhow::bail!("grid must be four positive counts, got {grid}");
    }
    let iv = cfg.bx.intervals();
    let axes: Vec<Vec<f64>> = (0..4)
        .map(|d| linspace(iv[d][0], iv[d][1], counts[d]))
        .collect();

    let mut nodes = Vec::new();
    for &t in &axes[0] {
        for &x in &axes[1] {
            for &y in &axes[2] {
                for &z in &axes[3] {
                    nodes.push(Point4::new(t, x, y, z));
                }
            }
        }
    }
    let flat = FlatPotential {
        eps: cfg.params.eps,
    };
    let sol = SolutionField::new(&cfg.params);
    let eval = |p: Point4| -> Result<Vec<f64>, CoreError> {
        let value = |field: &dyn PotentialField| -> Result<Vec<f64>, CoreError> {
            match observable {
                Observable::Q | Observable::A => {
                    let mc = metric_dyn(field, p)?;
                    Ok(vec![if observable == Observable::Q {
                        mc.q
                    } else {
                        mc.a
                    }])
                }
                Observable::Full => {
                    let row = scan_dyn(field, p)?;
                    Ok(vec![
                        row.a,
                        row.b,
                        row.c,
                        row.q,
                        row.kretschmann,
                        row.ricci_max,
                        row.duality_max,
                    ])
                }
                _ => {
                    let row = scan_dyn(field, p)?;
                    Ok(vec![match observable {
                        Observable::Kretschmann => row.kretschmann,
                        Observable::RicciMax => row.ricci_max,
                        Observable::DualityMax => row.duality_max,
                        _ => unreachable!(),
                    }])
                }
            }
        };
        match provider {
            Provider::Flat => value(&flat),
            Provider::Solution => value(&sol),
        }
    };
    let width = match observable {
        Observable::Full => 7,
        _ => 1,
    };
    let results: Vec<_> = nodes.par_iter().map(|&p| eval(p)).collect();
    let mut rows = Vec::with_capacity(nodes.len());
    for (p, r) in nodes.iter().zip(results) {
        let (vals, regular) = match r {
            Ok(v) => (v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>(), "1"),
            Err(CoreError::OutsideRegularity { .. })
            | Err(CoreError::FrameDomain { .. })
            | Err(CoreError::SingularProfile { .. })
            | Err(CoreError::Domain { .. }) => (vec!["nan".to_string(); width], "0"),
            Err(e) => return Err(anyhow::anyhow!("{e}")),
        };
        let mut row = vec![fmt_f64(p.t), fmt_f64(p.x), fmt_f64(p.y), fmt_f64(p.z)];
        row.extend(vals);
        row.push(regular.to_string());
        rows.push(row);
    }
    let path = out.join("scan.csv");
    write_csv(
        &path,
        &format!("t,x,y,z,{},regular", observable.header()),
        rows,
    )?;
    println!("scan: {} nodes -> {}", nodes.len(), path.display());
    Ok(EXIT_OK)
}

// dyn-compatible helpers for the provider switch
fn metric_dyn(
    field: &dyn PotentialField,
    p: Point4,
) -> Result<geometry::MetricComponents, CoreError> {
    geometry::metric_components(&DynField(field), p, MetricPath::FromJets)
}

struct DynField<'a>(&'a dyn PotentialField);

impl PotentialField for DynField<'_> {
    fn u_jet(&self, p: Point4, order: usize) -> heavenly_core::Result<heavenly_core::Jet4> {
        self.0.u_jet(p, order)
    }
    fn v_jet(&self, p: Point4, order: usize) -> heavenly_core::Result<heavenly_core::Jet4> {
        self.0.v_jet(p, order)
    }
    fn epsilon(&self) -> f64 {
        self.0.epsilon()
    }
    fn closed_form_abcq(&self, p: Point4) -> Option<heavenly_core::Result<[f64; 4]>> {
        self.0.closed_form_abcq(p)
    }
}

fn scan_dyn(field: &dyn PotentialField, p: Point4) -> Result<geometry::ScanRow, CoreError> {
    geometry::scan_observables(&DynField(field), p)
}

fn cmd_killing(
    common: &Common,
    degree: usize,
    threshold: f64,
    provider: Provider,
) -> anyhow::Result<i32> {
    let (cfg, out) = load(common)?;
    if provider == Provider::Solution {
        let reg =
            certify_regularity(&cfg.params, &cfg.bx, 128).map_err(|e| anyhow::anyhow!("{e}"))?;
        if !reg.ok {
            eprintln!("regularity certification failed: {reg:?}");
            return Ok(EXIT_REGULARITY);
        }
    }
    let report = match provider {
        Provider::Solution => symmetry::noninvariance_test(
            &SolutionField::new(&cfg.params),
            &cfg.bx,
            cfg.n_points,
            degree,
            threshold,
            cfg.seed,
        ),
        Provider::Flat => symmetry::noninvariance_test(
            &FlatPotential {
                eps: cfg.params.eps,
            },
            &cfg.bx,
            cfg.n_points,
            degree,
            threshold,
            cfg.seed,
        ),
    };
    let report = match report {
        Ok(r) => r,
        Err(CoreError::Parameter(msg)) => {
            eprintln!("error: {msg}");
            return Ok(EXIT_USAGE);
        }
        Err(e) => return Err(anyhow::anyhow!("{e}")),
    };
    write_json(&out.join("killing.json"), &report)?;
    println!(
        "killing: verdict {:?} (sigma_min/sigma_max = {:.3e}, threshold {:.1e})",
        report.verdict, report.smallest_rel, report.threshold
    );
    Ok(match report.verdict {
        Verdict::Noninvariant => EXIT_OK,
        Verdict::Inconclusive => EXIT_KERNEL,
    })
}

#[derive(Serialize)]
struct FlowReport {
    grid_n: usize,
    consistency: f64,
    discrete_symmetry: f64,
    convergence_ratio: f64,
    pass: bool,
}

/// Smooth periodic manufactured fields for the grid flow checks.
fn manufactured(n: usize) -> (Grid3, Grid3) {
    let h = 1.0 / n as f64;
    let w = 2.0 * std::f64::consts::PI;
    let u = Grid3::from_fn(n, n, n, h, |x, y, z| {
        (w * x).sin() * (w * y).cos() + 0.5 * (w * (y + z)).sin() + 0.3 * (w * (x + z)).cos()
    });
    let v = Grid3::from_fn(n, n, n, h, |x, y, z| {
        (w * (x + y)).cos() + 0.4 * (w * z).sin() * (w * x).cos()
    });
    (u, v)
}

fn cmd_flow_check(common: &Common, grid_n: usize) -> anyhow::Result<i32> {
    let (cfg, out) = load(common)?;
    if grid_n < 8 || !grid_n.is_multiple_of(4) {
        anyhow::bail!("--grid-n must be a multiple of 4 and at least 8");
    }
    let eps = cfg.params.epsf();
    let (u, v) = manufactured(grid_n);
    let consistency =
        symmetry::flow_consistency(&u, &v, eps).map_err(|e| anyhow::anyhow!("{e}"))?;

    let (_, flow_b) =
        symmetry::nonlocal_flow_rhs(&u, &v, eps).map_err(|e| anyhow::anyhow!("{e}"))?;
    let (flow_a_rot, _) = symmetry::nonlocal_flow_rhs(&u.rotate_yz(), &v.rotate_yz(), eps)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let expect = flow_b.rotate_yz();
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for (a, b) in flow_a_rot.data.iter().zip(&expect.data) {
        worst = worst.max((a + b).abs());
        scale = scale.max(b.abs());
    }
    let discrete_symmetry = worst / scale.max(1e-30);

    let value_at = |n: usize| -> anyhow::Result<f64> {
        let (u, v) = manufactured(n);
        let (fa, _) =
            symmetry::nonlocal_flow_rhs(&u, &v, eps).map_err(|e| anyhow::anyhow!("{e}"))?;
        Ok(fa.at(n / 4, n / 2, n / 8))
    };
    let coarse = value_at(grid_n / 2)?;
    let mid = value_at(grid_n)?;
    let fine = value_at(grid_n * 2)?;
    let convergence_ratio = (coarse - fine).abs() / (mid - fine).abs().max(1e-300);

    let pass =
        consistency <= 1e-9 && discrete_symmetry <= 1e-9 && (3.2..8.0).contains(&convergence_ratio);
    let report = FlowReport {
        grid_n,
        consistency,
        discrete_symmetry,
        convergence_ratio,
        pass,
    };
    write_json(&out.join("flow.json"), &report)?;
    // central (y, z) slabs of both flows, in the flat grid CSV format
    let (flow_a, flow_b2) =
        symmetry::nonlocal_flow_rhs(&u, &v, eps).map_err(|e| anyhow::anyhow!("{e}"))?;
    flow_a
        .slab(grid_n / 2)
        .write_csv(&out.join("flow_a_slab.csv"))?;
    flow_b2
        .slab(grid_n / 2)
        .write_csv(&out.join("flow_b_slab.csv"))?;
    println!(
        "flow-check: consistency {consistency:.2e}, symmetry {discrete_symmetry:.2e}, \
         convergence ratio {convergence_ratio:.2}"
    );
    Ok(if pass { EXIT_OK } else { EXIT_TOLERANCE })
}

fn cmd_domain(common: &Common) -> anyhow::Result<i32> {
    let (cfg, out) = load(common)?;
    let reg = certify_regularity(&cfg.params, &cfg.bx, cfg.n_points)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    write_json(&out.join("domain.json"), &reg)?;
    println!(
        "domain: {} (Gamma_min {:.6}, Q_min {:.6})",
        if reg.ok { "certified" } else { "NOT certified" },
        reg.gamma_min,
        reg.q_min
    );
    Ok(if reg.ok { EXIT_OK } else { EXIT_REGULARITY })
}
