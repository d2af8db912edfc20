//! Command-line front end for the relaxation library: solve built-in or
//! TOML-described problems, refine saved trajectories onto doubled grids,
//! and evaluate saved trajectories, emitting plot-ready CSV files.
//!
//! Exit codes: 0 when the requested run converged (or an evaluation
//! completed), 2 when the sweep budget ran out first, 1 on any error.

mod config;
mod csvio;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use delrelax::problems::ProblemSpec;
use delrelax::solver::{max_residual, perturb_interior, residuals, solve};
use delrelax::trajectory::{Trajectory, TrajectoryKind};
use delrelax::{evaluate_cost, Boundary, SolveOutcome, SweepConfig, UpdateRule};

use config::ConfigFile;

#[derive(Parser)]
#[command(
    name = "delrelax",
    version,
    about = "Parallel relaxation for discrete variational trajectory problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Relax a problem from its initial guess; write trajectory.csv,
    /// residuals.csv, and summary.txt into the output directory.
    Solve(RunArgs),
    /// Double the resolution of a saved trajectory (N doubles, h halves,
    /// pinned-waypoint indices double) and re-solve on the finer grid.
    Refine {
        /// Trajectory CSV produced by an earlier `solve` or `refine`.
        input: PathBuf,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Evaluate a saved trajectory against a problem: report its cost and
    /// stationarity residuals without iterating.
    Eval {
        /// Trajectory CSV to evaluate.
        input: PathBuf,
        #[command(flatten)]
        args: RunArgs,
    },
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum RuleArg {
    /// Solve each node's local stationarity system to tolerance every sweep.
    Exact,
    /// One Newton step per node per sweep.
    Newton,
}

#[derive(Args)]
struct RunArgs {
    /// Built-in problem: zermelo (fig2), fuel (fig3), interpolation (fig4),
    /// interpolation-coarse, or free-particle.
    #[arg(long, value_name = "NAME")]
    problem: Option<String>,

    /// TOML problem description; see the configs/ directory for commented
    /// examples.
    #[arg(long, value_name = "PATH", conflicts_with = "problem")]
    config: Option<PathBuf>,

    /// Override the segment count N (solve only).
    #[arg(long = "N", value_name = "INT")]
    n: Option<usize>,

    /// Override the time horizon T.
    #[arg(long = "T", value_name = "REAL")]
    t: Option<f64>,

    /// Node update rule.
    #[arg(long, value_enum, value_name = "RULE")]
    rule: Option<RuleArg>,

    /// Damping factor in [0, 1): each node moves by (1 - damping) of its
    /// computed step.
    #[arg(long, value_name = "REAL")]
    damping: Option<f64>,

    /// Stopping factor c: iteration ends when every residual norm is below
    /// c·h².
    #[arg(long = "tol-factor", value_name = "REAL")]
    tol_factor: Option<f64>,

    /// Sweep budget before giving up (exit code 2).
    #[arg(long = "max-iter", value_name = "INT")]
    max_iter: Option<usize>,

    /// Worker threads for the per-node updates; 1 runs sequentially. The
    /// result is identical for every thread count.
    #[arg(long, value_name = "INT")]
    threads: Option<usize>,

    /// Output directory (default: runs/<problem-name>).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Apply a seeded smooth perturbation (amplitude 1e-3) to the initial
    /// guess, for exploring distinct local optima reproducibly.
    #[arg(long, value_name = "INT")]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(converged) => {
            if converged {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<bool> {
    match command {
        Command::Solve(args) => cmd_solve(&args),
        Command::Refine { input, args } => cmd_refine(&input, &args),
        Command::Eval { input, args } => cmd_eval(&input, &args),
    }
}

/// Resolve the problem description and file-level solver settings.
fn load_problem(args: &RunArgs) -> Result<(ProblemSpec, SweepConfig)> {
    let (mut spec, mut sweep) = match (&args.problem, &args.config) {
        (Some(name), None) => (delrelax::builtin(name)?, SweepConfig::default()),
        (None, Some(path)) => {
            let file = ConfigFile::load(path)?;
            (file.problem(path)?, file.sweep_config()?)
        }
        (None, None) => bail!("select a problem with --problem <name> or --config <path>"),
        (Some(_), Some(_)) => unreachable!("clap rejects --problem with --config"),
    };
    if let Some(t) = args.t {
        spec = spec.with_horizon(t)?;
    }
    if let Some(rule) = args.rule {
        sweep.rule = match rule {
            RuleArg::Exact => UpdateRule::ExactParallel,
            RuleArg::Newton => UpdateRule::JacobiNewton,
        };
    }
    if let Some(d) = args.damping {
        sweep.damping = d;
    }
    if let Some(t) = args.tol_factor {
        sweep.tolerance_factor = t;
    }
    if let Some(m) = args.max_iter {
        sweep.max_sweeps = m;
    }
    if let Some(w) = args.threads {
        sweep.parallel_width = w;
    }
    sweep.validate()?;
    Ok((spec, sweep))
}

fn out_dir(args: &RunArgs, spec: &ProblemSpec) -> PathBuf {
    args.out
        .clone()
        .unwrap_or_else(|| Path::new("runs").join(&spec.name))
}

fn cmd_solve(args: &RunArgs) -> Result<bool> {
    let (spec, sweep) = load_problem(args)?;
    let spec = match args.n {
        Some(n) => spec.with_segments(n)?,
        None => spec,
    };
    let mut guess = spec.default_guess()?;
    if let Some(seed) = args.seed {
        guess = perturb_interior(&guess, &spec.knots, 1e-3, seed)?;
    }
    let outcome = solve(&spec, &guess, &sweep)?;
    report_run(&out_dir(args, &spec), &spec, &sweep, args.seed, &outcome)
}

fn cmd_refine(input: &Path, args: &RunArgs) -> Result<bool> {
    if args.n.is_some() {
        bail!("--N does not apply to refine: the refined grid always doubles the input's N");
    }
    let coarse_traj = csvio::read_trajectory(input)?;
    let (base, sweep) = load_problem(args)?;
    let coarse = base
        .with_segments(coarse_traj.segments())
        .with_context(|| format!("matching the problem to {}", input.display()))?;
    coarse
        .check_guess(&coarse_traj)
        .with_context(|| format!("{} is not a trajectory of this problem", input.display()))?;

    let fine = coarse.refined();
    let mut guess = coarse_traj.refine();
    if let Some(seed) = args.seed {
        guess = perturb_interior(&guess, &fine.knots, 1e-3, seed)?;
    }
    let outcome = solve(&fine, &guess, &sweep)?;
    report_run(&out_dir(args, &fine), &fine, &sweep, args.seed, &outcome)
}

fn cmd_eval(input: &Path, args: &RunArgs) -> Result<bool> {
    if args.n.is_some() {
        bail!("--N does not apply to eval: the input file fixes the grid");
    }
    if args.seed.is_some() {
        bail!("--seed does not apply to eval: nothing is perturbed");
    }
    let traj = csvio::read_trajectory(input)?;
    let (base, sweep) = load_problem(args)?;
    let spec = base
        .with_segments(traj.segments())
        .with_context(|| format!("matching the problem to {}", input.display()))?;
    if spec.step().to_bits() != traj.h().to_bits() {
        bail!(
            "step mismatch: problem '{}' with N={} has h={}, but {} was sampled at h={}; \
             pass --T to change the horizon",
            spec.name,
            traj.segments(),
            spec.step(),
            input.display(),
            traj.h()
        );
    }
    warn_on_boundary_mismatch(&spec, &traj);

    let ld = spec.discrete_lagrangian()?;
    let cost = evaluate_cost(&spec, &traj)?;
    let node_residuals = residuals(&ld, &traj, &spec.knots)?;
    let max_r = max_residual(&ld, &traj, &spec.knots)?;
    let tolerance = sweep.tolerance_factor * spec.step() * spec.step();

    println!("problem = {}", spec.name);
    println!("cost = {cost}");
    println!("max_residual = {max_r}");
    println!("tolerance = {tolerance}");
    println!("stationary = {}", max_r < tolerance);

    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        let path = dir.join("residuals_by_node.csv");
        csvio::write_node_residuals(&path, &node_residuals)?;
        println!("node_residuals = {}", path.display());
    }
    Ok(true)
}

fn warn_on_boundary_mismatch(spec: &ProblemSpec, traj: &Trajectory) {
    let mismatch = match (&spec.boundary, traj.kind()) {
        (Boundary::Positions { start, end }, TrajectoryKind::Positions) => {
            let nodes = traj.positions().unwrap();
            nodes[0] != *start || nodes[nodes.len() - 1] != *end
        }
        (Boundary::Phase { start, end }, TrajectoryKind::Phase) => {
            let nodes = traj.phase_points().unwrap();
            let first = nodes[0];
            let last = nodes[nodes.len() - 1];
            first.q != start.q || first.v != start.v || last.q != end.q || last.v != end.v
        }
        _ => return, // kind mismatch surfaces as a hard error later
    };
    if mismatch {
        eprintln!(
            "warning: trajectory endpoints do not match the boundary states of problem '{}'",
            spec.name
        );
    }
    for knot in spec.knots.iter() {
        if traj.position(knot.index) != knot.position {
            eprintln!(
                "warning: node {} does not sit on the pinned waypoint of problem '{}'",
                knot.index, spec.name
            );
        }
    }
}

/// Write the three output files, echo the summary, and translate the
/// convergence flag into the process exit code.
fn report_run(
    dir: &Path,
    spec: &ProblemSpec,
    sweep: &SweepConfig,
    seed: Option<u64>,
    outcome: &SolveOutcome,
) -> Result<bool> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;

    csvio::write_trajectory(&dir.join("trajectory.csv"), &outcome.trajectory)?;
    csvio::write_residual_history(&dir.join("residuals.csv"), &outcome.report)?;

    let cost = evaluate_cost(spec, &outcome.trajectory)?;
    let report = &outcome.report;
    let mut summary = String::new();
    writeln!(summary, "problem = {}", spec.name).unwrap();
    writeln!(summary, "segments = {}", spec.segments).unwrap();
    writeln!(summary, "step = {}", spec.step()).unwrap();
    writeln!(
        summary,
        "rule = {}",
        match sweep.rule {
            UpdateRule::ExactParallel => "exact",
            UpdateRule::JacobiNewton => "newton",
        }
    )
    .unwrap();
    writeln!(summary, "damping = {}", sweep.damping).unwrap();
    writeln!(summary, "threads = {}", sweep.parallel_width).unwrap();
    match seed {
        Some(seed) => writeln!(summary, "seed = {seed}").unwrap(),
        None => writeln!(summary, "seed = none").unwrap(),
    }
    writeln!(summary, "converged = {}", report.converged).unwrap();
    writeln!(summary, "iterations = {}", report.sweeps).unwrap();
    writeln!(summary, "cost = {cost}").unwrap();
    writeln!(
        summary,
        "final_max_residual = {}",
        report.final_max_residual
    )
    .unwrap();
    writeln!(summary, "tolerance = {}", report.tolerance).unwrap();
    writeln!(summary, "wall_seconds = {}", report.wall_seconds).unwrap();

    std::fs::write(dir.join("summary.txt"), &summary)
        .with_context(|| format!("writing {}", dir.join("summary.txt").display()))?;

    print!("{summary}");
    println!("outputs = {}", dir.display());
    Ok(report.converged)
}
