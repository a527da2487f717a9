//! `frift`: solve, certify and compare functional integro-differential
//! fractional problems described in problem files.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 solver failure,
//! 3 certificate rejection.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use frift_core::fracint::Scheme;
use frift_core::solver::{Method, SolveConfig};

#[derive(Debug, Parser)]
#[command(name = "frift", version, about = "Fractional integro-differential solver and certificate checker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone)]
struct SolverArgs {
    /// Number of grid steps on [0, T].
    #[arg(long = "n", default_value_t = 1000)]
    n: usize,
    /// Relative sup-norm stopping tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long = "max-iter", default_value_t = 200)]
    max_iter: usize,
    /// picard or march.
    #[arg(long, default_value = "picard")]
    method: Method,
    /// rect or trap.
    #[arg(long, default_value = "trap")]
    scheme: Scheme,
    /// Divergence guard on the sup norm.
    #[arg(long = "blow-up", default_value_t = 1e6)]
    blow_up: f64,
    /// Constant initial iterate (default: φ(0)).
    #[arg(long)]
    initial: Option<f64>,
}

impl SolverArgs {
    fn config(&self) -> SolveConfig {
        SolveConfig {
            n_steps: self.n,
            scheme: self.scheme,
            method: self.method,
            tol: self.tol,
            max_iter: self.max_iter,
            blow_up: self.blow_up,
            initial: self.initial,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a problem and optionally write the trajectory as CSV `t,x`.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the existence bound and the Dhage condition at radius r.
    Certify {
        file: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        r: f64,
        /// Samples for constant estimation.
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        /// Estimate constants the file does not declare.
        #[arg(long)]
        estimate: bool,
        /// Override a constant, e.g. `--set L=0.1`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Solve with φ and with a second history and check the dependence bound.
    Compare {
        file: PathBuf,
        /// Second history, an expression in theta.
        #[arg(long)]
        phi2: String,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// CSV `t,x1,x2` with both trajectories.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fractional integral of u(t) on a uniform grid, as CSV `t,Ialpha_u`.
    Fracint {
        #[arg(long)]
        alpha: f64,
        /// u as an expression in t.
        #[arg(long)]
        expr: String,
        #[arg(long = "T", default_value_t = 1.0)]
        t_end: f64,
        #[arg(long = "n", default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value = "trap")]
        scheme: Scheme,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Residuals of a trajectory CSV against a problem.
    Residual {
        file: PathBuf,
        #[arg(long)]
        traj: PathBuf,
        #[arg(long, default_value = "trap")]
        scheme: Scheme,
    },
    /// Certificate, solve, residual and dependence check on the built-in benchmark.
    Bench {
        #[arg(long = "n", default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 2.0)]
        r: f64,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Run a parameter sweep and write the atlas CSV.
    Sweep {
        plan: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn configure_threads() -> Result<(), commands::CliError> {
    let Ok(value) = std::env::var("FRIFT_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| commands::CliError::Usage(format!("FRIFT_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| commands::CliError::Usage(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Solve { file, solver, out } => commands::solve(&file, &solver.config(), out.as_deref()),
        Command::Certify { file, r, samples, estimate, set } => commands::certify(&file, r, samples, estimate, &set),
        Command::Compare { file, phi2, solver, set, out } => {
            commands::compare(&file, &phi2, &solver.config(), &set, out.as_deref())
        }
        Command::Fracint { alpha, expr, t_end, n, scheme, out } => {
            commands::fracint(alpha, &expr, t_end, n, scheme, out.as_deref())
        }
        Command::Residual { file, traj, scheme } => commands::residual(&file, &traj, scheme),
        Command::Bench { n, tol, r, set } => commands::bench(n, tol, r, &set),
        Command::Sweep { plan, out } => commands::sweep(&plan, &out),
    });
    match result {
        Ok(outcome) => ExitCode::from(outcome.code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
