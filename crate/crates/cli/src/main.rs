//! Command-line driver: solve / scan / verify / decay subcommands with
//! reproducible artifacts (CSV, JSON, SVG, solution files).
//!
//! Exit codes: 0 success, 2 config rejection, 3 convergence failure,
//! 4 identity violation.

mod config;
mod svg;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;


use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};

use qnls_core::continuation::{self, SolveKind};
use qnls_core::diagnostics::{self, IdentityReport};
use qnls_core::dual::DualTransform;
use qnls_core::error::Error as CoreError;
use qnls_core::flow::{self, Classification, SolveStatus};
use qnls_core::io::{self, Csv, CsvCell};
use qnls_core::model::{breakdown, Params, RadialGrid, Regime};
use qnls_core::mpass::MpassConfig;
use qnls_core::shoot::{self, ShootConfig};

use config::RunConfig;

const EXIT_CONFIG: u8 = 2;
const EXIT_CONVERGENCE: u8 = 3;
const EXIT_IDENTITY: u8 = 4;

#[derive(Parser)]
#[command(name = "qnls", about = "Normalized-solution solver for the quasi-linear Schrodinger equation", version)]
struct Cli {
    /// Plain-text key=value config file (flags override it).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct CommonFlags {
    /// Spatial dimension.
    #[arg(long = "N")]
    dim: Option<usize>,
    /// Nonlinearity exponent.
    #[arg(long)]
    p: Option<f64>,
    /// Target mass |u|_2^2.
    #[arg(long)]
    c: Option<f64>,
    /// Initial perturbation weight (0 disables the mu ladder).
    #[arg(long)]
    mu0: Option<f64>,
    /// Final perturbation weight of the ladder.
    #[arg(long = "mu-min")]
    mu_min: Option<f64>,
    /// Geometric ladder factor in (0,1).
    #[arg(long = "mu-factor")]
    mu_factor: Option<f64>,
    /// Grid intervals.
    #[arg(long = "grid-n")]
    grid_n: Option<usize>,
    /// Truncation radius.
    #[arg(long = "r-max")]
    r_max: Option<f64>,
    /// Worker threads for scans (0 = rayon default).
    #[arg(long)]
    jobs: Option<usize>,
    /// Probe randomization seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Known c(p,N) estimate (skips the internal bisection).
    #[arg(long)]
    cpn: Option<f64>,
    /// Relative stationarity tolerance.
    #[arg(long = "grad-tol")]
    grad_tol: Option<f64>,
    /// Relative |Q| tolerance.
    #[arg(long = "q-tol")]
    q_tol: Option<f64>,
    /// Descent iteration cap.
    #[arg(long = "max-iters")]
    max_iters: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one constrained critical point (with the mu -> 0 ladder).
    Solve {
        /// global-min | local-min | mountain-pass
        #[arg(long)]
        kind: Option<String>,
        #[command(flatten)]
        common: CommonFlags,
    },
    /// Scan m(c) over a mass list; optionally bisect c(p,N) or c_N.
    Scan {
        /// Comma-separated masses, e.g. 0.5,1,2
        #[arg(long = "c-list")]
        c_list: Option<String>,
        /// Geometric range lo:hi:count
        #[arg(long = "c-range")]
        c_range: Option<String>,
        /// Also bisect the threshold mass.
        #[arg(long = "bisect-cpn", default_value_t = false)]
        bisect_cpn: bool,
        #[command(flatten)]
        common: CommonFlags,
    },
    /// Re-run all applicable identity checks on a solution file.
    Verify {
        /// Solution file to check.
        solution: PathBuf,
        #[command(flatten)]
        common: CommonFlags,
    },
    /// lambda = 0 shooting, decay fit and L2 membership (Appendix analysis).
    Decay {
        /// Frequency of the dual problem (0 for the power-decay analysis).
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        #[command(flatten)]
        common: CommonFlags,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify_error(&e))
        }
    }
}

fn classify_error(e: &anyhow::Error) -> u8 {
    if let Some(core) = e.downcast_ref::<CoreError>() {
        return match core {
            CoreError::InvalidConfig(_) | CoreError::InvalidArgument(_) | CoreError::Parse { .. } => {
                EXIT_CONFIG
            }
            CoreError::Misclassification(_) => EXIT_IDENTITY,
            _ => EXIT_CONVERGENCE,
        };
    }
    if e.to_string().contains("identity violation") {
        return EXIT_IDENTITY;
    }
    if e.to_string().contains("config") {
        return EXIT_CONFIG;
    }
    EXIT_CONVERGENCE
}

fn merge_common(cfg: &mut RunConfig, f: &CommonFlags) {
    let mut map: HashMap<String, String> = HashMap::new();
    macro_rules! put {
        ($key:expr, $val:expr) => {
            if let Some(v) = &$val {
                map.insert($key.to_string(), v.to_string());
            }
        };
    }
    put!("N", f.dim);
    put!("p", f.p);
    put!("c", f.c);
    put!("mu0", f.mu0);
    put!("mu-min", f.mu_min);
    put!("mu-factor", f.mu_factor);
    put!("grid-n", f.grid_n);
    put!("r-max", f.r_max);
    put!("jobs", f.jobs);
    put!("seed", f.seed);
    put!("cpn", f.cpn);
    put!("grad-tol", f.grad_tol);
    put!("q-tol", f.q_tol);
    put!("max-iters", f.max_iters);
    cfg.apply_map(&map).expect("flag values are typed");
    if let Some(out) = &f.out {
        cfg.out = out.clone();
    }
}

fn setup_jobs(jobs: usize) {
    if jobs > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Solve { kind, common } => {
            merge_common(&mut cfg, &common);
            if let Some(k) = kind {
                cfg.kind = k;
            }
            setup_jobs(cfg.jobs);
            cmd_solve(&cfg)
        }
        Command::Scan { c_list, c_range, bisect_cpn, common } => {
            merge_common(&mut cfg, &common);
            setup_jobs(cfg.jobs);
            cmd_scan(&cfg, c_list.as_deref(), c_range.as_deref(), bisect_cpn)
        }
        Command::Verify { solution, common } => {
            merge_common(&mut cfg, &common);
            cmd_verify(&cfg, &solution)
        }
        Command::Decay { lambda, common } => {
            merge_common(&mut cfg, &common);
            let mut cfg = cfg;
            cfg.lambda = lambda;
            cmd_decay(&cfg)
        }
    }
}

fn validated_params(cfg: &RunConfig, mu: f64) -> Result<Params> {
    Params::new(cfg.dim, cfg.p, cfg.c, mu).map_err(anyhow::Error::from)
}

fn write_identities(path: &Path, reports: &[IdentityReport]) -> Result<()> {
    let mut csv = Csv::new("name,lhs,rhs,abs_residual,rel_residual,tolerance,pass");
    for r in reports {
        csv.row(&[
            CsvCell::Str(&r.name),
            CsvCell::Num(r.lhs),
            CsvCell::Num(r.rhs),
            CsvCell::Num(r.abs_residual),
            CsvCell::Num(r.rel_residual),
            CsvCell::Num(r.tolerance),
            CsvCell::Str(if r.pass { "true" } else { "false" }),
        ]);
    }
    csv.write(path)?;
    Ok(())
}

fn profile_svg(field: &qnls_core::RadialField, title: &str) -> String {
    let pts: Vec<(f64, f64)> = field
        .grid()
        .nodes()
        .iter()
        .zip(field.values())
        .map(|(&r, &v)| (r, v))
        .collect();
    svg::line_chart(title, "r", "u(r)", &[svg::Series { name: "u", points: pts }], false, false)
}

fn cmd_solve(cfg: &RunConfig) -> Result<()> {
    let kind = match cfg.kind.as_str() {
        "global-min" => SolveKind::GlobalMin,
        "local-min" => SolveKind::LocalMin,
        "mountain-pass" => SolveKind::MountainPass,
        other => {
            return Err(anyhow::Error::from(CoreError::InvalidConfig(format!(
                "unknown kind `{other}` (expected global-min, local-min or mountain-pass)"
            ))))
        }
    };
    // regime validation before any compute
    let params0 = validated_params(cfg, 0.0)?;
    let regime = params0.regime();
    if kind != SolveKind::GlobalMin && regime != Regime::Intermediate {
        return Err(anyhow::Error::from(CoreError::InvalidConfig(format!(
            "{:?} requires p in (1 + 4/N, 3 + 4/N); (N, p) = ({}, {}) is {:?}",
            kind, cfg.dim, cfg.p, regime
        ))));
    }
    let grid = RadialGrid::build(cfg.dim, cfg.r_max, cfg.grid_n)?;
    let flow_cfg = cfg.flow_config();
    let mp_cfg = MpassConfig::default();

    // supporting structure for the two-solution kinds
    let (k0, anchor) = if kind == SolveKind::GlobalMin {
        (None, None)
    } else {
        let cpn = match cfg.cpn {
            Some(v) => v,
            None => {
                eprintln!("estimating c(p,N) (pass --cpn to skip)");
                flow::estimate_cpn(cfg.p, cfg.dim, (cfg.c / 50.0, cfg.c * 50.0), &flow_cfg, &grid)?
            }
        };
        let (anchor_field, c_star) =
            flow::anchor_minimizer(&grid, cfg.p, cfg.dim, cpn, cfg.mu0.min(1e-3), &flow_cfg)?;
        let calib_params = Params::new(cfg.dim, cfg.p, cfg.c, 0.0)?;
        let k0 = flow::calibrate_k0(&grid, &calib_params, 40, &flow_cfg)?;
        eprintln!("c(p,N) ~ {cpn:.6e}, k0 = {k0:.6e}");
        (Some((k0, cpn)), Some((anchor_field, c_star)))
    };

    let schedule = if cfg.mu0 > 0.0 {
        continuation::mu_schedule(cfg.mu0, cfg.mu_factor, cfg.mu_min)?
    } else {
        vec![0.0]
    };

    let params = validated_params(cfg, schedule[0])?;
    let trace = if schedule.len() == 1 && schedule[0] == 0.0 {
        // single mu = 0 solve without the ladder
        let mut mp_report = None;
        let rep = match kind {
            SolveKind::GlobalMin => flow::solve_with_tail_guard(&grid, &params, &flow_cfg)?,
            SolveKind::LocalMin => flow::minimize_local(
                &params,
                k0.unwrap().0,
                &flow_cfg,
                &grid,
                anchor.as_ref().map(|(f, m)| (f, *m)),
            )?,
            SolveKind::MountainPass => {
                let (k0v, _) = k0.unwrap();
                let (af, am) = anchor.as_ref().unwrap();
                let mp =
                    qnls_core::mpass::mountain_pass(&grid, &params, k0v, af, *am, &flow_cfg, &mp_cfg)?;
                let peak = mp.peak.clone();
                mp_report = Some(mp);
                peak
            }
        };
        if rep.status != SolveStatus::Converged
            || rep.classification == Classification::Failed
        {
            return Err(anyhow::Error::from(CoreError::Convergence(format!(
                "solve did not converge: {:?}/{:?}",
                rep.status, rep.classification
            ))));
        }
        let b = breakdown(&rep.field, cfg.p);
        let row = continuation::TraceRow {
            mu: 0.0,
            j_mu: rep.j_value,
            mu_grad4: 0.0,
            lambda: rep.lambda,
            mass: b.mass,
            grad2: b.grad2,
            quasi: b.quasi,
            pot: b.pot,
            status: rep.status,
            warm_start_disabled: false,
            lambda_nonnegative: rep.lambda >= 0.0,
        };
        continuation::ContinuationTrace {
            kind,
            rows: vec![row],
            fields: vec![rep.field.clone()],
            lambda_flag: rep.lambda >= 0.0,
            first_mp: mp_report,
        }
    } else {
        continuation::continue_solve(
            kind,
            &params,
            &schedule,
            &flow_cfg,
            &grid,
            &mp_cfg,
            k0.map(|(v, _)| v),
            anchor.as_ref().map(|(f, m)| (f, *m)),
        )?
    };

    // trace CSV
    std::fs::create_dir_all(&cfg.out)?;
    let mut csv = Csv::new("mu,J_mu,mu_grad4,lambda,mass,grad2,quasi,pot,status");
    for row in &trace.rows {
        csv.row(&[
            CsvCell::Num(row.mu),
            CsvCell::Num(row.j_mu),
            CsvCell::Num(row.mu_grad4),
            CsvCell::Num(row.lambda),
            CsvCell::Num(row.mass),
            CsvCell::Num(row.grad2),
            CsvCell::Num(row.quasi),
            CsvCell::Num(row.pot),
            CsvCell::Str(&format!("{:?}", row.status)),
        ]);
    }
    csv.write(&cfg.out.join("trace.csv"))?;

    if let Some(mp) = &trace.first_mp {
        let mut pcsv = Csv::new("index,J_mu");
        for (i, j) in mp.path_values.iter().enumerate() {
            pcsv.row(&[CsvCell::Int(i as i64), CsvCell::Num(*j)]);
        }
        pcsv.write(&cfg.out.join("path.csv"))?;
        let pts: Vec<(f64, f64)> = mp
            .path_values
            .iter()
            .enumerate()
            .map(|(i, &j)| (i as f64 / (mp.path_values.len() - 1).max(1) as f64, j))
            .collect();
        let chart = svg::line_chart(
            &format!("J_mu along the path (gamma ~ {:.4e})", mp.gamma),
            "path parameter",
            "J_mu",
            &[svg::Series { name: "J", points: pts }],
            false,
            false,
        );
        io::write_atomic(&cfg.out.join("path.svg"), chart.as_bytes())?;
        io::write_atomic(
            &cfg.out.join("path_snapshot.txt"),
            io::path_snapshot_to_string(&mp.path_fields, &params0).as_bytes(),
        )?;
    }

    let cpn_hint = cfg.cpn.or(k0.map(|(_, cpn)| cpn));
    let final_report = continuation::classify_limit(&trace, &params0, cpn_hint)
        .map_err(anyhow::Error::from)?;

    // artifacts
    let doc = io::SolveReportDoc::new(&final_report, &params0);
    io::write_atomic(
        &cfg.out.join("report.json"),
        serde_json::to_string_pretty(&doc)?.as_bytes(),
    )?;
    io::write_solution(&cfg.out.join("solution.txt"), &final_report.field, &params0)?;
    let identities = diagnostics::identity_bundle(&final_report, cfg.p, cfg.dim);
    write_identities(&cfg.out.join("identities.csv"), &identities)?;
    io::write_atomic(
        &cfg.out.join("profile.svg"),
        profile_svg(&final_report.field, &format!("{:?} profile", kind)).as_bytes(),
    )?;

    println!(
        "{kind:?}: J = {:.6e}, lambda = {:.6e}, |Q| = {:.3e}, pohozaev residual = {:.3e}",
        final_report.j_value,
        final_report.lambda,
        final_report.q_value.abs(),
        final_report.pohozaev_residual
    );
    if identities.iter().any(|r| !r.pass) {
        return Err(anyhow::Error::from(CoreError::Misclassification(
            "identity violation on the final solution".into(),
        )));
    }
    Ok(())
}

fn parse_c_values(c_list: Option<&str>, c_range: Option<&str>) -> Result<Vec<f64>> {
    let mut cs: Vec<f64> = match (c_list, c_range) {
        (Some(list), None) => list
            .split(',')
            .map(|t| t.trim().parse::<f64>().context("bad c value"))
            .collect::<Result<_>>()?,
        (None, Some(range)) => {
            let parts: Vec<&str> = range.split(':').collect();
            if parts.len() != 3 {
                return Err(anyhow!("--c-range wants lo:hi:count"));
            }
            let lo: f64 = parts[0].parse()?;
            let hi: f64 = parts[1].parse()?;
            let count: usize = parts[2].parse()?;
            if !(lo > 0.0 && hi > lo && count >= 2) {
                return Err(anyhow::Error::from(CoreError::InvalidConfig(
                    "c range needs 0 < lo < hi and count >= 2".into(),
                )));
            }
            (0..count)
                .map(|k| lo * (hi / lo).powf(k as f64 / (count - 1) as f64))
                .collect()
        }
        _ => {
            return Err(anyhow::Error::from(CoreError::InvalidConfig(
                "scan needs exactly one of --c-list or --c-range".into(),
            )))
        }
    };
    cs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cs.dedup();
    Ok(cs)
}

fn cmd_scan(
    cfg: &RunConfig,
    c_list: Option<&str>,
    c_range: Option<&str>,
    bisect_cpn: bool,
) -> Result<()> {
    let cs = parse_c_values(c_list, c_range)?;
    // params validated per row; validate the regime once with the first c
    Params::new(cfg.dim, cfg.p, cs[0], 0.0)?;
    let grid = RadialGrid::build(cfg.dim, cfg.r_max, cfg.grid_n)?;
    let flow_cfg = cfg.flow_config();
    let scan = flow::mass_scan(cfg.p, cfg.dim, &cs, &flow_cfg, &grid)?;

    std::fs::create_dir_all(&cfg.out)?;
    let mut csv = Csv::new("c,m,lambda,status");
    for row in &scan.rows {
        csv.row(&[
            CsvCell::Num(row.c),
            CsvCell::Num(row.m),
            CsvCell::Num(row.lambda),
            CsvCell::Str(&format!("{:?}", row.status)),
        ]);
    }
    csv.write(&cfg.out.join("masscan.csv"))?;

    let m_pts: Vec<(f64, f64)> = scan
        .rows
        .iter()
        .filter(|r| r.m.is_finite())
        .map(|r| (r.c, r.m))
        .collect();
    let b_pts: Vec<(f64, f64)> = scan
        .rows
        .iter()
        .filter(|r| r.lambda.is_finite())
        .map(|r| (r.c, r.lambda))
        .collect();
    let chart = svg::line_chart(
        &format!("m(c) and beta_c, N={}, p={}", cfg.dim, cfg.p),
        "c",
        "value",
        &[
            svg::Series { name: "m(c)", points: m_pts },
            svg::Series { name: "beta_c", points: b_pts },
        ],
        false,
        false,
    );
    io::write_atomic(&cfg.out.join("masscan.svg"), chart.as_bytes())?;

    if bisect_cpn {
        let bracket = (cs[0], *cs.last().unwrap());
        let cpn = flow::estimate_cpn(cfg.p, cfg.dim, bracket, &flow_cfg, &grid)?;
        io::write_atomic(&cfg.out.join("cpn.txt"), format!("{cpn:.12e}\n").as_bytes())?;
        println!("threshold mass ~ {cpn:.6e}");
    }
    for row in &scan.rows {
        println!("c = {:>12.5e}  m = {:>13.6e}  lambda = {:>13.6e}  {:?}", row.c, row.m, row.lambda, row.status);
    }
    Ok(())
}

fn cmd_verify(cfg: &RunConfig, solution: &Path) -> Result<()> {
    let (params, field) = io::read_solution(solution)?;
    if field.is_zero() || field.mass() <= 0.0 {
        return Err(anyhow::Error::from(CoreError::InvalidArgument(
            "solution file holds the trivial (zero) field; nothing to verify".into(),
        )));
    }
    let b = breakdown(&field, params.p);
    let lambda = qnls_core::model::multiplier_of(&b, params.mu)?;
    let report = flow::SolveReport {
        field: field.clone(),
        lambda,
        j_value: qnls_core::model::j_mu(&b, params.mu, params.p),
        q_value: qnls_core::model::q_mu(&b, params.mu, params.p, params.dim),
        pohozaev_residual: 0.0,
        grad_norm: f64::NAN,
        iters: 0,
        classification: Classification::GlobalMin,
        status: SolveStatus::Converged,
        mu: params.mu,
        c: b.mass,
    };
    let identities = diagnostics::identity_bundle(&report, params.p, params.dim);
    std::fs::create_dir_all(&cfg.out)?;
    write_identities(&cfg.out.join("identities.csv"), &identities)?;
    let mut failed = false;
    for r in &identities {
        println!(
            "{:<22} lhs={:>13.6e} rhs={:>13.6e} rel={:.3e} {}",
            r.name,
            r.lhs,
            r.rhs,
            r.rel_residual,
            if r.pass { "PASS" } else { "FAIL" }
        );
        failed |= !r.pass;
    }
    if failed {
        return Err(anyhow::Error::from(CoreError::Misclassification(
            "identity violation in solution file".into(),
        )));
    }
    Ok(())
}

fn cmd_decay(cfg: &RunConfig) -> Result<()> {
    if cfg.dim < 3 {
        return Err(anyhow::Error::from(CoreError::InvalidConfig(
            "decay analysis needs N >= 3".into(),
        )));
    }
    let nf = cfg.dim as f64;
    if cfg.lambda == 0.0 {
        let (lo, hi) = ((nf + 2.0) / (nf - 2.0), (3.0 * nf + 2.0) / (nf - 2.0));
        if cfg.p <= lo || cfg.p >= hi {
            return Err(anyhow::Error::from(CoreError::InvalidConfig(format!(
                "the lambda = 0 analysis needs p in ((N+2)/(N-2), (3N+2)/(N-2)) = ({lo:.4}, {hi:.4})"
            ))));
        }
    }
    let transform = DualTransform::build(200.0, 2000)?;
    {
        let (ss, fs) = transform.table();
        let mut tcsv = Csv::new("s,f,f_prime");
        for (s_val, f_val) in ss.iter().zip(fs) {
            let fp = 1.0 / (1.0 + 2.0 * f_val * f_val).sqrt();
            tcsv.row(&[CsvCell::Num(*s_val), CsvCell::Num(*f_val), CsvCell::Num(fp)]);
        }
        std::fs::create_dir_all(&cfg.out)?;
        tcsv.write(&cfg.out.join("transform.csv"))?;
    }
    let shoot_cfg = if cfg.lambda == 0.0 {
        ShootConfig { r_max: if cfg.r_max > 100.0 { cfg.r_max } else { 500.0 }, ..ShootConfig::for_decay((0.5, 8.0)) }
    } else {
        ShootConfig::new(cfg.lambda, (0.5, 8.0), cfg.r_max)?
    };
    let ground = shoot::find_ground(&shoot_cfg, &transform, cfg.p, cfg.dim)?;
    std::fs::create_dir_all(&cfg.out)?;

    let field = &ground.field;
    let grid = field.grid();
    let dv = field.node_gradient();
    let mut csv = Csv::new("r,v,dv,a,b,A");
    let mut rows: Vec<(f64, f64, f64, f64, f64)> = Vec::new();
    for (i, &r) in grid.nodes().iter().enumerate() {
        let v = field.values()[i];
        if v <= 0.0 {
            continue;
        }
        let fpow = transform.f_eval(v)?.powf(cfg.p + 1.0);
        let a = r.powf(nf) * (dv[i] * dv[i] + 2.0 * fpow / (cfg.p + 1.0));
        let b = 2.0 * r.powf(nf) * fpow / (cfg.p + 1.0);
        rows.push((r, v, dv[i], a, b));
    }
    let mut big_a = rows.iter().map(|r| r.3).collect::<Vec<_>>();
    let mut running = 0.0f64;
    for x in big_a.iter_mut().rev() {
        running = running.max(*x);
        *x = running;
    }
    for (row, big) in rows.iter().zip(&big_a) {
        csv.row(&[
            CsvCell::Num(row.0),
            CsvCell::Num(row.1),
            CsvCell::Num(row.2),
            CsvCell::Num(row.3),
            CsvCell::Num(row.4),
            CsvCell::Num(*big),
        ]);
    }
    csv.write(&cfg.out.join("decay.csv"))?;

    let mut summary = String::new();
    if cfg.lambda == 0.0 {
        let rep = shoot::decay_fit(field, &transform, cfg.p, cfg.dim)?;
        let member = shoot::l2_membership(field, cfg.dim);
        summary.push_str(&format!(
            "slope={:.6}\nexpected_slope={:.6}\nc_fit={:.6e}\nc_integral={:.6e}\nratio={:.6}\nl2_membership={}\nwindow=[{:.3},{:.3}]\nv0={:.12e}\n",
            rep.slope,
            -(nf - 2.0),
            rep.c_fit,
            rep.c_integral,
            rep.c_fit / rep.c_integral,
            member,
            rep.window.0,
            rep.window.1,
            ground.v0,
        ));
        // log-log chart with the kernel overlay
        let v_pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.0, r.1)).collect();
        let k_pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.0 > 0.0)
            .map(|r| (r.0, rep.c_integral * qnls_core::dual::kernel_k(r.0, cfg.dim).unwrap()))
            .collect();
        let chart = svg::line_chart(
            &format!("lambda=0 decay, N={}, p={}", cfg.dim, cfg.p),
            "r",
            "v",
            &[
                svg::Series { name: "v(r)", points: v_pts },
                svg::Series { name: "C K(r)", points: k_pts },
            ],
            true,
            true,
        );
        io::write_atomic(&cfg.out.join("decay_loglog.svg"), chart.as_bytes())?;
    } else {
        let member = shoot::l2_membership(field, cfg.dim);
        summary.push_str(&format!("lambda={:.6e}\nl2_membership={member}\nv0={:.12e}\n", cfg.lambda, ground.v0));
    }
    io::write_atomic(&cfg.out.join("decay_summary.txt"), summary.as_bytes())?;
    // profile in the shared solution format (mass is whatever the shot gives)
    let params = Params::new(cfg.dim, cfg.p, field.mass().max(1e-300), 0.0)?;
    io::write_solution(&cfg.out.join("dual_profile.txt"), field, &params)?;
    print!("{summary}");
    Ok(())
}
