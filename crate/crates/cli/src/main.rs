use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use fracfite::bounds::{audit_estimates, best_min_length, constant_chain, fite_rhs, min_length};
use fracfite::sfde::{solve_system, CoefficientSet, SolveOptions};
use fracfite::verify::{run_scenario_with, sweep_with, SweepSpec, Verdict, VerifyOptions};
use fracfite::weighted::GradedGrid;
use fracfite::zeros::ZeroSet;
use fracfite::{Order64, RuleCache64};
use serde::Serialize;
use serde_json::json;

mod config;
mod error;
mod output;

use config::{Format, Overrides, RunConfig};
use error::{CliError, CliResult};
use output::{read_trace, render_trace, to_json, trace_name, write_file};

/// Solver, zero finder and Fite-type bound for sequential fractional equations.
#[derive(Debug, Parser)]
#[command(name = "fracfite", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Sweep and audit seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Grid cells
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Grid grading exponent r
    #[arg(long, global = true)]
    grading: Option<f64>,
    /// Hölder exponent p
    #[arg(long, global = true)]
    p: Option<f64>,
    /// Trace format
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads for sweeps and audits
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Multiplies the bound's right-hand side (negative-path testing only)
    #[arg(long, global = true, hide = true, default_value_t = 1.0)]
    rhs_scale: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one scenario and write its trace
    Solve,
    /// Print the bound, the optimal p and the minimal length
    Bound(BoundArgs),
    /// Run one scenario or a sweep and check the bound
    Verify(VerifyArgs),
    /// Randomized audit of the estimates behind the bound
    Audit(AuditArgs),
    /// Locate zeros of f and g in a stored trace
    Zeros(ZerosArgs),
}

#[derive(Debug, Args)]
struct BoundArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    /// Interval length c − a at which to evaluate the constant chain
    #[arg(long)]
    length: Option<f64>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Use the built-in acceptance grid instead of a config
    #[arg(long)]
    acceptance: bool,
}

#[derive(Debug, Args)]
struct AuditArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
}

#[derive(Debug, Args)]
struct ZerosArgs {
    /// Trace file written by `solve`
    trace: PathBuf,
    /// Left end of the window
    #[arg(long)]
    b: f64,
    /// Right end of the window (default: last node)
    #[arg(long)]
    c: Option<f64>,
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            format: self.format,
            seed: self.seed,
            n: self.n,
            grading: self.grading,
        }
    }

    fn run_config(&self) -> CliResult<RunConfig> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| CliError::Config("--config is required".into()))?;
        let mut cfg = RunConfig::load(path)?;
        cfg.apply(&self.overrides());
        cfg.validate()?;
        Ok(cfg)
    }

    fn out_dir(&self) -> Option<PathBuf> {
        self.out.clone()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
        {
            eprintln!("error: cannot configure {k} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Solve => cmd_solve(&cli),
        Command::Bound(args) => cmd_bound(&cli, args),
        Command::Verify(args) => cmd_verify(&cli, args),
        Command::Audit(args) => cmd_audit(&cli, args),
        Command::Zeros(args) => cmd_zeros(&cli, args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    config: &'a RunConfig,
    trace: String,
    converged: bool,
    method: fracfite::sfde::SolveMethod,
    iterations: usize,
    residual: f64,
    increment_ratios: &'a [f64],
    p_sup: f64,
    m: f64,
}

fn cmd_solve(cli: &Cli) -> CliResult<()> {
    let cfg = cli.run_config()?;
    let s = cfg.scenario()?;
    let order = s.order()?;
    let grid = Arc::new(GradedGrid::new(s.a, s.c, s.n, s.grading)?);
    let p_sup = s.p_sup();
    let forcing =
        s.v.clone()
            .unwrap_or(fracfite::verify::CoefSpec::Const(0.0));
    let coeffs = CoefficientSet::fite(s.p.to_coef(s.a), p_sup, forcing.to_coef(s.a))?;
    let opts = SolveOptions {
        tol: s.tol,
        max_iter: s.max_iter,
        method: s.method,
        accept_stalled: true,
    };
    let rep = solve_system(&coeffs, order, s.f_a, s.g_a, grid, &opts)?;
    let dir = &cfg.output.dir;
    let trace = dir.join(trace_name(cfg.output.format, !rep.converged));
    write_file(&trace, &render_trace(&rep.f, &rep.g, cfg.output.format))?;
    let summary = SolveSummary {
        config: &cfg,
        trace: trace.display().to_string(),
        converged: rep.converged,
        method: rep.method,
        iterations: rep.iterations,
        residual: rep.residual,
        increment_ratios: &rep.increment_ratios,
        p_sup,
        m: s.m(),
    };
    write_file(&dir.join("summary.json"), &to_json(&summary))?;
    if !rep.converged {
        return Err(CliError::Partial(trace));
    }
    println!(
        "solved: method={:?} iterations={} residual={:e} trace={}",
        rep.method,
        rep.iterations,
        rep.residual,
        trace.display()
    );
    Ok(())
}

fn cmd_bound(cli: &Cli, args: &BoundArgs) -> CliResult<()> {
    let order = Order64::new(args.alpha)?;
    if !(args.m > 0.0 && args.m.is_finite()) {
        return Err(CliError::Config(format!("m = {} must be positive", args.m)));
    }
    let rhs = fite_rhs(order)?;
    let (p, len) = match cli.p {
        Some(p) => (p, min_length(order, args.m, p)?),
        None => best_min_length(order, args.m)?,
    };
    let chain = args
        .length
        .map(|l| constant_chain(order, p, l))
        .transpose()?;
    let record = json!({
        "config": {"alpha": args.alpha, "m": args.m, "p": cli.p, "length": args.length},
        "rhs": rhs,
        "p": p,
        "optimized_p": cli.p.is_none(),
        "min_length": len,
        "chain": chain,
    });
    let text = to_json(&record);
    if let Some(dir) = cli.out_dir() {
        write_file(&dir.join("bound.json"), &text)?;
    }
    print!("{text}");
    Ok(())
}

fn cmd_verify(cli: &Cli, args: &VerifyArgs) -> CliResult<()> {
    let opts = VerifyOptions {
        rhs_scale: cli.rhs_scale,
    };
    let cfg = if args.acceptance {
        let mut cfg = RunConfig {
            scenario: None,
            sweep: Some(SweepSpec::acceptance(0)),
            output: Default::default(),
        };
        cfg.apply(&cli.overrides());
        cfg
    } else {
        cli.run_config()?
    };
    let path = cfg.output.dir.join("verify.json");
    if let Some(spec) = &cfg.sweep {
        let report = sweep_with(spec, &opts)?;
        let counts = report.counts;
        write_file(
            &path,
            &to_json(&json!({"config": &cfg, "rhs_scale": opts.rhs_scale, "report": report})),
        )?;
        println!(
            "scenarios={} bound_holds={} no_zero_pair={} counterexample={} solver_failed={} vacuous={}",
            report.total, counts.bound_holds, counts.no_zero_pair, counts.counterexample, counts.solver_failed, counts.vacuous
        );
        if counts.counterexample > 0 {
            return Err(CliError::Counterexamples(counts.counterexample));
        }
    } else {
        let report = run_scenario_with(&RuleCache64::new(), cfg.scenario()?, &opts)?;
        write_file(
            &path,
            &to_json(&json!({"config": &cfg, "rhs_scale": opts.rhs_scale, "report": &report})),
        )?;
        println!(
            "verdict={}",
            serde_json::to_string(&report.verdict).unwrap_or_default()
        );
        if report.verdict == Verdict::Counterexample {
            return Err(CliError::Counterexamples(1));
        }
    }
    Ok(())
}

fn cmd_audit(cli: &Cli, args: &AuditArgs) -> CliResult<()> {
    let order = Order64::new(args.alpha)?;
    let p = cli.p.unwrap_or(1.5);
    let seed = cli.seed.unwrap_or(42);
    let report = audit_estimates(order, p, args.trials, seed)?;
    let text = to_json(&json!({
        "config": {"alpha": args.alpha, "p": p, "trials": args.trials, "seed": seed},
        "report": report,
    }));
    if let Some(dir) = cli.out_dir() {
        write_file(&dir.join("audit.json"), &text)?;
    }
    print!("{text}");
    Ok(())
}

fn cmd_zeros(cli: &Cli, args: &ZerosArgs) -> CliResult<()> {
    let trace = read_trace(&args.trace)?;
    let c = args.c.unwrap_or_else(|| trace.f.grid().c());
    let zeros = ZeroSet::locate(&trace.f, &trace.g, args.b, c)?;
    let text = to_json(&json!({
        "config": {"trace": args.trace, "b": args.b, "c": c},
        "zeros": zeros,
        "first_pair": zeros.first_pair(),
    }));
    if let Some(dir) = cli.out_dir() {
        write_file(&dir.join("zeros.json"), &text)?;
    }
    print!("{text}");
    Ok(())
}
