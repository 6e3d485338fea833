//! Command line for the fractional-heat solver pipeline: kernel fitting,
//! solving by three methods, convergence studies, cost tables and
//! comparison reports, all emitting CSV.
//!
//! Exit codes: 0 ok, 2 configuration error, 3 numerical divergence,
//! 4 kernel-fit failure.

mod config;

use clap::{Args, Parser, Subcommand};
use config::FileConfig;
use fracheat::baseline::{count_classical_ops, euler_recover, forward_euler_solve};
use fracheat::cost::{quantum_query_bound, scaling_table, KernelSummary};
use fracheat::error::Error;
use fracheat::kernel::fit_fractional_kernel;
use fracheat::recovery::{combine_solution, convergence_study, discrete_l2_error, SolutionField};
use fracheat::schrod::{solve_schrodingerized, Extension, SchrodOptions};
use fracheat::special::exact_heat_solution;
use fracheat::{LaplacianOperator, LiftedSystem, SpatialGrid};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "fracheat", version, about = "Time-fractional heat equation solver pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the rational kernel and write pole/weight and probe CSVs.
    FitKernel(FitKernelArgs),
    /// Solve the fractional heat problem by one method.
    Solve(SolveArgs),
    /// Spatial convergence study of the reference path.
    Converge(ConvergeArgs),
    /// Run all three methods on the same discretization.
    Compare(SolveArgs),
    /// Quantum-vs-classical scaling table.
    Cost(CostArgs),
}

#[derive(Args)]
struct FitKernelArgs {
    #[arg(long)]
    alpha: f64,
    /// Evolution horizon defining the left end 1/T of the fit interval.
    #[arg(long)]
    tmax: f64,
    #[arg(long, default_value_t = 1e-3)]
    tau: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    candidates: usize,
    #[arg(long, default_value_t = 60)]
    max_degree: usize,
    #[arg(long, default_value = "kernel.csv")]
    out: PathBuf,
    #[arg(long, default_value = "kernel_probe.csv")]
    probe_out: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    probe_points: usize,
}

#[derive(Args, Clone)]
struct SolveArgs {
    /// Flat key=value config file; command-line flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    /// Cells per axis (N_x; the grid has N_x - 1 interior points per axis).
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    tmax: Option<f64>,
    /// schrodingerize | reference | euler.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    np: Option<usize>,
    #[arg(long)]
    p_left: Option<f64>,
    #[arg(long)]
    p_right: Option<f64>,
    /// exp | smooth.
    #[arg(long)]
    extension: Option<String>,
    #[arg(long)]
    p_star: Option<f64>,
    #[arg(long)]
    shift_cap: Option<f64>,
    #[arg(long)]
    tau_kernel: Option<f64>,
    #[arg(long)]
    kernel_tol: Option<f64>,
    /// Horizon for the kernel interval [1/T, 1/τ]; defaults to tmax.
    #[arg(long)]
    kernel_tmax: Option<f64>,
    /// Euler step is tau-safety · h²/d. The default 0.05 keeps the stiffest
    /// lifted channel of the fitted kernel inside the stability disk.
    #[arg(long)]
    tau_safety: Option<f64>,
    #[arg(long)]
    cg_tol: Option<f64>,
    /// Recorded in the CSV header; runs are deterministic.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConvergeArgs {
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    tmax: f64,
    /// Comma-separated list of cells per axis.
    #[arg(long, default_value = "8,16,32,64")]
    nx: String,
    #[arg(long, default_value_t = 1e-8)]
    kernel_tol: f64,
    #[arg(long, default_value_t = 1e-3)]
    tau_kernel: f64,
    #[arg(long, default_value = "converge.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct CostArgs {
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// Comma-separated dimensions.
    #[arg(long, default_value = "1,2,4,8")]
    dims: String,
    #[arg(long, default_value_t = 0.0625)]
    h: f64,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 1e-3)]
    tau_kernel: f64,
    #[arg(long, default_value_t = 1e-6)]
    kernel_tol: f64,
    #[arg(long, default_value = "cost.csv")]
    out: PathBuf,
}

/// Resolved run configuration after merging flags, file, and defaults.
struct RunConfig {
    alpha: f64,
    dim: usize,
    nx: usize,
    tmax: f64,
    method: String,
    np: usize,
    p_left: Option<f64>,
    p_right: Option<f64>,
    extension: Extension,
    p_star: f64,
    shift_cap: f64,
    tau_kernel: f64,
    kernel_tol: f64,
    kernel_tmax: Option<f64>,
    tau_safety: f64,
    cg_tol: f64,
    seed: u64,
    out: PathBuf,
}

fn pick<T: std::str::FromStr + Clone>(
    flag: &Option<T>,
    file: &FileConfig,
    key: &str,
    default: T,
) -> Result<T, String> {
    if let Some(v) = flag {
        return Ok(v.clone());
    }
    Ok(file.get::<T>(key)?.unwrap_or(default))
}

fn pick_opt<T: std::str::FromStr + Clone>(
    flag: &Option<T>,
    file: &FileConfig,
    key: &str,
) -> Result<Option<T>, String> {
    if let Some(v) = flag {
        return Ok(Some(v.clone()));
    }
    file.get::<T>(key)
}

impl RunConfig {
    fn resolve(args: &SolveArgs, default_out: &str) -> Result<RunConfig, String> {
        let file = match &args.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let extension = match pick(&args.extension, &file, "extension", "exp".to_string())?.as_str()
        {
            "exp" => Extension::Exp,
            "smooth" => Extension::Smooth,
            other => return Err(format!("unknown extension `{other}` (exp|smooth)")),
        };
        let method = pick(&args.method, &file, "method", "schrodingerize".to_string())?;
        if !["schrodingerize", "reference", "euler"].contains(&method.as_str()) {
            return Err(format!(
                "unknown method `{method}` (schrodingerize|reference|euler)"
            ));
        }
        let cfg = RunConfig {
            alpha: pick(&args.alpha, &file, "alpha", 0.5)?,
            dim: pick(&args.dim, &file, "dim", 1)?,
            nx: pick(&args.nx, &file, "nx", 33)?,
            tmax: pick(&args.tmax, &file, "tmax", 1.0)?,
            method,
            np: pick(&args.np, &file, "np", 512)?,
            p_left: pick_opt(&args.p_left, &file, "p-left")?,
            p_right: pick_opt(&args.p_right, &file, "p-right")?,
            extension,
            p_star: pick(&args.p_star, &file, "p-star", 0.5)?,
            shift_cap: pick(&args.shift_cap, &file, "shift-cap", 1.0)?,
            tau_kernel: pick(&args.tau_kernel, &file, "tau-kernel", 1e-3)?,
            kernel_tol: pick(&args.kernel_tol, &file, "kernel-tol", 1e-6)?,
            kernel_tmax: pick_opt(&args.kernel_tmax, &file, "kernel-tmax")?,
            tau_safety: pick(&args.tau_safety, &file, "tau-safety", 0.05)?,
            cg_tol: pick(&args.cg_tol, &file, "cg-tol", 1e-10)?,
            seed: pick(&args.seed, &file, "seed", 0)?,
            out: pick(&args.out, &file, "out", PathBuf::from(default_out))?,
        };
        if !(cfg.alpha > 0.0 && cfg.alpha <= 1.0) {
            return Err(format!("alpha must be in (0,1], got {}", cfg.alpha));
        }
        if cfg.tmax < 0.0 || cfg.nx < 2 || cfg.dim < 1 {
            return Err("need tmax >= 0, nx >= 2, dim >= 1".into());
        }
        Ok(cfg)
    }
}

fn sci(x: f64) -> String {
    format!("{:.12e}", x)
}

struct MethodOutcome {
    field: SolutionField,
    work: u128,
}

fn run_method(cfg: &RunConfig, method: &str) -> Result<MethodOutcome, Error> {
    let grid = SpatialGrid::new(cfg.dim, cfg.nx)?;
    let u0 = exact_heat_solution(cfg.alpha, cfg.dim, 0.0, &grid)?;
    if cfg.tmax == 0.0 {
        return Ok(MethodOutcome {
            field: SolutionField::new(grid, 0.0, u0)?,
            work: 0,
        });
    }
    let kernel_tmax = cfg.kernel_tmax.unwrap_or(cfg.tmax);
    let (pf, fit) = fit_fractional_kernel(
        cfg.alpha,
        1.0 / kernel_tmax,
        1.0 / cfg.tau_kernel,
        cfg.kernel_tol,
        1000,
        60,
    )?;
    if !fit.converged {
        return Err(Error::NoConvergence(format!(
            "kernel fit stopped at relative error {:.3e}",
            fit.achieved_rel_error
        )));
    }
    let lap = LaplacianOperator::new(grid);
    match method {
        "reference" => {
            let sys = LiftedSystem::assemble(pf, lap, u0.clone())?;
            let u_lifted = sys.reference_solve(cfg.tmax)?;
            let field = combine_solution(&u0, &u_lifted, sys.pf(), sys.lap(), cfg.tmax)?;
            Ok(MethodOutcome {
                field,
                work: (sys.m() * sys.n_d()) as u128,
            })
        }
        "schrodingerize" => {
            let sys = LiftedSystem::assemble(pf, lap, u0.clone())?;
            let opts = SchrodOptions {
                n_p: cfg.np,
                p_left: cfg.p_left,
                p_right: cfg.p_right,
                extension: cfg.extension,
                p_star: cfg.p_star,
                shift_cap: cfg.shift_cap,
            };
            let sol = solve_schrodingerized(&sys, cfg.tmax, &opts)?;
            if sol.diagnostics.boundary_mass_ratio > 1e-6 {
                eprintln!(
                    "warning: wrap-around risk, boundary mass ratio {:.2e} on p in [{:.2}, {:.2}]",
                    sol.diagnostics.boundary_mass_ratio,
                    -sol.diagnostics.p_left,
                    sol.diagnostics.p_right
                );
            }
            let field = combine_solution(&u0, &sol.u_lifted, sys.pf(), sys.lap(), cfg.tmax)?;
            Ok(MethodOutcome {
                field,
                work: (cfg.np * 2 * sys.m() * sys.n_d()) as u128,
            })
        }
        "euler" => {
            let h = 1.0 / cfg.nx as f64;
            let tau = cfg.tau_safety * h * h / cfg.dim as f64;
            let run = forward_euler_solve(&pf, &lap, &u0, tau, cfg.tmax, cfg.cg_tol, true)?;
            let values = euler_recover(&run, &pf, &lap, &u0)?;
            Ok(MethodOutcome {
                field: SolutionField::new(*lap.grid(), cfg.tmax, values)?,
                work: run.op_count as u128,
            })
        }
        other => Err(Error::InvalidInput(format!("unknown method {other}"))),
    }
}

fn write_solution_csv(
    path: &PathBuf,
    cfg: &RunConfig,
    field: &SolutionField,
    exact: &SolutionField,
) -> std::io::Result<()> {
    let mut out = String::new();
    out.push_str("# schema=1\n");
    out.push_str(&format!("# seed={}\n", cfg.seed));
    let d = field.grid.dim();
    let coords: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    out.push_str(&format!("{},u_numeric,u_exact,abs_err\n", coords.join(",")));
    for flat in 0..field.grid.n_interior() {
        let point = field.grid.point(flat);
        let coords: Vec<String> = point.iter().map(|&x| sci(x)).collect();
        let num = field.values[flat];
        let ex = exact.values[flat];
        out.push_str(&format!(
            "{},{},{},{}\n",
            coords.join(","),
            sci(num),
            sci(ex),
            sci((num - ex).abs())
        ));
    }
    std::fs::write(path, out)
}

fn cmd_solve(args: &SolveArgs) -> Result<ExitCode, String> {
    let cfg = RunConfig::resolve(args, "solution.csv")?;
    let started = Instant::now();
    let outcome = run_method(&cfg, &cfg.method).map_err(error_to_string)?;
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;
    let grid = outcome.field.grid;
    let exact = SolutionField::new(
        grid,
        cfg.tmax,
        exact_heat_solution(cfg.alpha, cfg.dim, cfg.tmax, &grid).map_err(error_to_string)?,
    )
    .map_err(error_to_string)?;
    let err_h = discrete_l2_error(&outcome.field, &exact).map_err(error_to_string)?;
    write_solution_csv(&cfg.out, &cfg, &outcome.field, &exact)
        .map_err(|e| format!("cannot write {}: {e}", cfg.out.display()))?;
    println!(
        "method={} err_h={} wall_ms={:.1} work_count={}",
        cfg.method,
        sci(err_h),
        wall_ms,
        outcome.work
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_compare(args: &SolveArgs) -> Result<ExitCode, String> {
    let cfg = RunConfig::resolve(args, "compare.csv")?;
    let grid = SpatialGrid::new(cfg.dim, cfg.nx).map_err(error_to_string)?;
    let exact = SolutionField::new(
        grid,
        cfg.tmax,
        exact_heat_solution(cfg.alpha, cfg.dim, cfg.tmax, &grid).map_err(error_to_string)?,
    )
    .map_err(error_to_string)?;
    let mut out = String::new();
    out.push_str("# schema=1\n");
    out.push_str(&format!("# seed={}\n", cfg.seed));
    out.push_str("method,err_h,wall_ms,work_count,status\n");
    for method in ["reference", "schrodingerize", "euler"] {
        let started = Instant::now();
        match run_method(&cfg, method) {
            Ok(o) => {
                let wall = started.elapsed().as_secs_f64() * 1e3;
                let err = discrete_l2_error(&o.field, &exact).map_err(error_to_string)?;
                out.push_str(&format!(
                    "{method},{},{:.1},{},ok\n",
                    sci(err),
                    wall,
                    o.work
                ));
                println!("{method}: err_h={}", sci(err));
            }
            Err(Error::Divergence(msg)) => {
                let wall = started.elapsed().as_secs_f64() * 1e3;
                out.push_str(&format!("{method},nan,{wall:.1},0,diverged\n"));
                eprintln!("{method} diverged: {msg}");
            }
            Err(e) => return Err(error_to_string(e)),
        }
    }
    std::fs::write(&cfg.out, out).map_err(|e| format!("cannot write {}: {e}", cfg.out.display()))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_fit_kernel(args: &FitKernelArgs) -> Result<ExitCode, String> {
    if !(args.alpha > 0.0 && args.alpha <= 1.0) {
        return Err(format!("alpha must be in (0,1], got {}", args.alpha));
    }
    let (pf, fit) = fit_fractional_kernel(
        args.alpha,
        1.0 / args.tmax,
        1.0 / args.tau,
        args.tol,
        args.candidates,
        args.max_degree,
    )
    .map_err(error_to_string)?;
    let mut out = String::new();
    out.push_str("# schema=1\n");
    out.push_str("k,lambda_k,omega_k\n");
    for (k, (l, w)) in pf.poles.iter().zip(&pf.weights).enumerate() {
        out.push_str(&format!("{},{},{}\n", k + 1, sci(*l), sci(*w)));
    }
    out.push_str(&format!("inf,,{}\n", sci(pf.omega_inf)));
    std::fs::write(&args.out, out)
        .map_err(|e| format!("cannot write {}: {e}", args.out.display()))?;

    let mut probe = String::new();
    probe.push_str("# schema=1\n");
    probe.push_str("lambda,exact,approx,rel_err\n");
    let (lo, hi) = pf.interval;
    let ratio = (hi / lo).ln();
    for i in 0..args.probe_points {
        let lam = lo * (ratio * i as f64 / (args.probe_points - 1) as f64).exp();
        let exact = lam.powf(-pf.alpha);
        let approx = pf.eval_kernel(lam).map_err(error_to_string)?;
        probe.push_str(&format!(
            "{},{},{},{}\n",
            sci(lam),
            sci(exact),
            sci(approx),
            sci((approx - exact).abs() / exact)
        ));
    }
    std::fs::write(&args.probe_out, probe)
        .map_err(|e| format!("cannot write {}: {e}", args.probe_out.display()))?;
    println!(
        "degree={} max_rel_err={} converged={}",
        pf.m(),
        sci(fit.achieved_rel_error),
        fit.converged
    );
    if !fit.converged {
        return Err("kernel fit did not reach the requested tolerance".into());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_converge(args: &ConvergeArgs) -> Result<ExitCode, String> {
    let n_x_list: Vec<usize> = args
        .nx
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|e| format!("bad nx `{s}`: {e}")))
        .collect::<Result<_, _>>()?;
    let rows = convergence_study(
        args.alpha,
        args.dim,
        args.tmax,
        &n_x_list,
        args.kernel_tol,
        args.tau_kernel,
    )
    .map_err(error_to_string)?;
    let mut out = String::new();
    out.push_str("# schema=1\n");
    out.push_str("h,err,order\n");
    for row in &rows {
        let order_csv = row
            .observed_order
            .map(sci)
            .unwrap_or_default();
        out.push_str(&format!("{},{},{order_csv}\n", sci(row.h), sci(row.error)));
        let order_display = row
            .observed_order
            .map(|o| format!("{o:.4}"))
            .unwrap_or_default();
        println!(
            "n_x={:4}  h={:.5}  err={}  order={order_display}",
            row.n_x,
            row.h,
            sci(row.error)
        );
    }
    std::fs::write(&args.out, out)
        .map_err(|e| format!("cannot write {}: {e}", args.out.display()))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_cost(args: &CostArgs) -> Result<ExitCode, String> {
    let dims: Vec<usize> = args
        .dims
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|e| format!("bad dim `{s}`: {e}")))
        .collect::<Result<_, _>>()?;
    let (pf, _) = fit_fractional_kernel(
        args.alpha,
        1.0 / args.t,
        1.0 / args.tau_kernel,
        args.kernel_tol,
        1000,
        60,
    )
    .map_err(error_to_string)?;
    let kernel = KernelSummary {
        lambda_max: pf.lambda_max(),
        lambda_min: pf.lambda_min(),
        omega_norm: pf.omega_norm(),
        omega_inf: pf.omega_inf,
    };
    let rows =
        scaling_table(args.t, &dims, args.h, pf.m(), &kernel, 1.0).map_err(error_to_string)?;
    let mut out = String::new();
    out.push_str("# schema=1\n");
    out.push_str("# model values, constants suppressed\n");
    out.push_str("d,h,quantum_queries,classical_ops,classical_over_quantum\n");
    for r in &rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.d,
            sci(r.h),
            sci(r.quantum_queries),
            sci(r.classical_ops),
            sci(r.ratio)
        ));
        println!(
            "d={}  quantum={}  classical={}  ratio={}",
            r.d,
            sci(r.quantum_queries),
            sci(r.classical_ops),
            sci(r.ratio)
        );
    }
    // headline sanity echo
    let q = quantum_query_bound(
        args.t,
        dims[0],
        args.h,
        kernel.omega_inf,
        kernel.lambda_max,
        kernel.lambda_min,
        kernel.omega_norm,
        1.0,
    )
    .map_err(error_to_string)?;
    if q.horizon_warning {
        eprintln!("warning: t exceeds the constants-1 horizon precondition of the query bound");
    }
    let _ = count_classical_ops(dims[0], args.h, args.t, pf.m());
    std::fs::write(&args.out, out)
        .map_err(|e| format!("cannot write {}: {e}", args.out.display()))?;
    Ok(ExitCode::SUCCESS)
}

fn error_to_string(e: Error) -> String {
    format!("{e}")
}

fn classify(e: &str) -> ExitCode {
    // divergence and kernel failures get their own codes
    if e.contains("diverg") || e.contains("blew up") {
        ExitCode::from(3)
    } else if e.contains("kernel fit") || e.contains("pole") {
        ExitCode::from(4)
    } else {
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::FitKernel(args) => cmd_fit_kernel(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Converge(args) => cmd_converge(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Cost(args) => cmd_cost(args),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            classify(&msg)
        }
    }
}
