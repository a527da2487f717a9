use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use frift_core::certify::{audit_claim, existence_bound, verify_dependence, CertifyError, Certificate};
use frift_core::expr::{parse_expr, EvalEnv, Role};
use frift_core::fracint::{frac_integral, make_weights, Grid, Scheme};
use frift_core::model::{
    constant_value, estimate_constants, parse_problem, read_trajectory_csv, write_pair_csv, write_trajectory_csv,
    ProblemSpec, CONSTANT_KEYS,
};
use frift_core::solver::{residual as residual_of, solve as run_solve, SolveConfig, SolveReport};
use frift_core::sweep::{run_sweep, summary, write_atlas, SweepPlan};
use frift_core::BENCHMARK;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, unreadable or malformed input.
    Usage(String),
    /// A solve could not run to a verdict.
    Solver(String),
    /// A certificate or bound could not be established.
    Rejected(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Solver(m) | CliError::Rejected(m) => f.write_str(m),
        }
    }
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Solver(_) => 2,
            CliError::Rejected(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    SolverFailure,
    Rejected,
}

impl Outcome {
    pub fn code(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::SolverFailure => 2,
            Outcome::Rejected => 3,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn load_problem(path: &Path) -> Result<ProblemSpec, CliError> {
    parse_problem(&read_file(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn apply_overrides(spec: &mut ProblemSpec, set: &[String]) -> Result<(), CliError> {
    for item in set {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got `{item}`")))?;
        let v = constant_value(value.trim(), 0).map_err(usage)?;
        if !spec.constants.set(key.trim(), v) {
            return Err(CliError::Usage(format!(
                "unknown constant `{}` (expected one of {})",
                key.trim(),
                CONSTANT_KEYS.join(", ")
            )));
        }
    }
    spec.constants.validate().map_err(CliError::Usage)
}

fn print_warnings(spec: &ProblemSpec) {
    for w in &spec.warnings {
        eprintln!("warning: {w}");
    }
}

fn opt_num(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:e}"))
}

fn solve_summary(report: &SolveReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "method = {}", report.method);
    let _ = writeln!(s, "status = {}", report.status);
    let _ = writeln!(s, "iterations = {}", report.iterations);
    let _ = writeln!(s, "final_delta = {:e}", report.final_delta);
    let _ = writeln!(s, "sup_norm = {:e}", report.sup_norm());
    let _ = writeln!(s, "residual_integral = {}", opt_num(report.residual_integral));
    let _ = write!(s, "clamp_warnings = {}", report.clamp_warnings);
    s
}

pub fn solve(file: &Path, cfg: &SolveConfig, out: Option<&Path>) -> Result<Outcome, CliError> {
    let spec = load_problem(file)?;
    print_warnings(&spec);
    let report = run_solve(&spec, cfg).map_err(usage)?;
    println!("{}", solve_summary(&report));
    if let Some(path) = out {
        write_trajectory_csv(&report.trajectory, create(path)?).map_err(usage)?;
    }
    Ok(if report.status.is_converged() { Outcome::Success } else { Outcome::SolverFailure })
}

fn certificate_report(spec: &ProblemSpec, cert: &Certificate) -> String {
    let mut s = cert.to_string();
    if let Some(claimed) = &spec.claimed {
        let audit = audit_claim(cert, claimed);
        let _ = write!(
            s,
            "\nclaimed interval: [{}, {}]",
            claimed.low.map_or("-".into(), |v| v.to_string()),
            claimed.high.map_or("-".into(), |v| v.to_string())
        );
        let _ = write!(s, "\nclaim_discrepancy = {}", audit.discrepancy);
        for note in &audit.notes {
            let _ = write!(s, "\n  {note}");
        }
    }
    s
}

pub fn certify(file: &Path, r: f64, samples: usize, estimate: bool, set: &[String]) -> Result<Outcome, CliError> {
    let mut spec = load_problem(file)?;
    apply_overrides(&mut spec, set)?;
    if !(r.is_finite() && r > 0.0) {
        return Err(CliError::Usage(format!("--r must be positive, got {r}")));
    }
    let mut constants = spec.constants;
    if estimate {
        let est = estimate_constants(&spec, samples, r).map_err(usage)?;
        let measured: Vec<&str> = CONSTANT_KEYS.iter().copied().filter(|k| constants.get(k).is_none()).collect();
        constants = constants.or(&est.constants);
        println!("estimated ({} samples, radius {r}): {}", samples, if measured.is_empty() { "none".into() } else { measured.join(", ") });
        if let Some(ratio) = est.growth_ratio.filter(|r| *r > 1.0 + 1e-9) {
            println!("warning: |g| exceeds gamma(t)*psi(...) by a factor {ratio:.4} on the probes");
        }
    }
    let cert = match existence_bound(&constants, spec.alpha, spec.t_end, r) {
        Ok(c) => c,
        Err(e @ CertifyError::MissingConstants(_)) => {
            return Err(CliError::Usage(format!("{e}; declare them in [constants] or pass --estimate")))
        }
        Err(e) => return Err(usage(e)),
    };
    println!("{}", certificate_report(&spec, &cert));
    if cert.admissible && cert.dhage_ok {
        Ok(Outcome::Success)
    } else {
        if cert.denom <= 0.0 {
            println!("rejected: denom = {:e} <= 0", cert.denom);
        } else {
            println!("rejected: r = {r} does not exceed rhs = {:e}", cert.rhs);
        }
        Ok(Outcome::Rejected)
    }
}

fn dependence_report(spec: &ProblemSpec, phi2: &str, cfg: &SolveConfig, out: Option<&Path>) -> Result<(String, Outcome), CliError> {
    let phi2_ast = parse_expr(phi2, Role::Phi).map_err(|e| CliError::Usage(format!("--phi2: {e}")))?;
    let check = match verify_dependence(spec, &phi2_ast, cfg) {
        Ok(c) => c,
        Err(e @ CertifyError::DependenceUndefined(_)) => return Err(CliError::Rejected(e.to_string())),
        Err(e @ CertifyError::Solve(_)) => return Err(CliError::Solver(e.to_string())),
        Err(e) => return Err(usage(e)),
    };
    let mut s = String::new();
    let _ = writeln!(s, "phi2 = {phi2_ast}");
    let _ = writeln!(s, "status_x = {}", check.first.status);
    let _ = writeln!(s, "status_y = {}", check.second.status);
    let _ = writeln!(s, "phi_gap = {:e}", check.phi_gap);
    let _ = writeln!(s, "y_norm = {:e}", check.y_norm);
    let _ = writeln!(s, "constants = {}", if check.constants_measured { "measured" } else { "declared" });
    let _ = writeln!(s, "empirical = {}", opt_num(check.empirical));
    let _ = writeln!(s, "bound = {:e}", check.bound);
    let verdict = match check.satisfied {
        Some(true) => "satisfied",
        Some(false) => "violated",
        None => "no verdict",
    };
    let _ = write!(s, "verdict = {verdict}");
    if check.estimation_failure {
        let _ = write!(s, "\nwarning: bound violated with measured constants; the estimates are too low");
    }
    if let Some(path) = out {
        write_pair_csv(&check.first.trajectory, &check.second.trajectory, create(path)?).map_err(usage)?;
    }
    let outcome = match check.satisfied {
        Some(true) => Outcome::Success,
        Some(false) => Outcome::Rejected,
        None => Outcome::SolverFailure,
    };
    Ok((s, outcome))
}

pub fn compare(file: &Path, phi2: &str, cfg: &SolveConfig, set: &[String], out: Option<&Path>) -> Result<Outcome, CliError> {
    let mut spec = load_problem(file)?;
    apply_overrides(&mut spec, set)?;
    print_warnings(&spec);
    let (report, outcome) = dependence_report(&spec, phi2, cfg, out)?;
    println!("{report}");
    Ok(outcome)
}

pub fn fracint(alpha: f64, expr: &str, t_end: f64, n: usize, scheme: Scheme, out: Option<&Path>) -> Result<Outcome, CliError> {
    let u = parse_expr(expr, Role::GammaFn).map_err(|e| CliError::Usage(format!("--expr: {e}")))?;
    let grid = Grid::new(t_end, n).map_err(usage)?;
    let weights = make_weights(alpha, grid, scheme).map_err(usage)?;
    let values = grid
        .nodes()
        .map(|t| u.eval(&EvalEnv::new().t(t)).map_err(|e| CliError::Usage(format!("u({t}): {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let integral = frac_integral(&values, &weights).map_err(usage)?;
    let write = |w: &mut dyn Write| -> io::Result<()> {
        writeln!(w, "t,Ialpha_u")?;
        for (t, v) in grid.nodes().zip(&integral) {
            writeln!(w, "{t:.16e},{v:.16e}")?;
        }
        w.flush()
    };
    match out {
        Some(path) => write(&mut create(path)?),
        None => write(&mut io::stdout().lock()),
    }
    .map_err(usage)?;
    Ok(Outcome::Success)
}

/// Residual acceptance threshold relative to (1 + ‖x‖∞).
pub const RESIDUAL_GATE: f64 = 1e-6;

pub fn residual(file: &Path, traj: &Path, scheme: Scheme) -> Result<Outcome, CliError> {
    let spec = load_problem(file)?;
    let input = File::open(traj).map_err(|e| CliError::Usage(format!("{}: {e}", traj.display())))?;
    let trajectory = read_trajectory_csv(&spec, input).map_err(|e| CliError::Usage(format!("{}: {e}", traj.display())))?;
    let r = residual_of(&spec, &trajectory, scheme).map_err(|e| CliError::Solver(e.to_string()))?;
    let norm = trajectory.sup_norm();
    println!("n = {}", trajectory.grid().n_steps());
    println!("sup_norm = {norm:e}");
    println!("residual_integral = {:e}", r.integral);
    println!("residual_frac_deriv = {}", opt_num(r.frac_deriv));
    println!("clamp_warnings = {}", r.clamp_warnings);
    let ok = r.integral <= RESIDUAL_GATE * (1.0 + norm);
    println!("gate = {}", if ok { "pass" } else { "fail" });
    Ok(if ok { Outcome::Success } else { Outcome::SolverFailure })
}

fn stage_line(name: &str, result: &Result<Outcome, CliError>) -> String {
    match result {
        Ok(Outcome::Success) => format!("[{name}] PASS"),
        Ok(o) => format!("[{name}] FAIL (exit {})", o.code()),
        Err(e) => format!("[{name}] FAIL: {e}"),
    }
}

pub fn bench(n: usize, tol: f64, r: f64, set: &[String]) -> Result<Outcome, CliError> {
    let mut spec = parse_problem(BENCHMARK).map_err(usage)?;
    apply_overrides(&mut spec, set)?;
    let cfg = SolveConfig { n_steps: n, tol, ..SolveConfig::default() };
    cfg.validate().map_err(usage)?;
    println!("benchmark: alpha = {}, T = {}, delta = {}", spec.alpha, spec.t_end, spec.delta);
    println!("  f = {}\n  g = {}\n  k = {}\n  phi = {}", spec.f, spec.g, spec.k, spec.phi);
    println!();

    let mut stages: Vec<(&str, Result<Outcome, CliError>)> = Vec::new();

    println!("== certify (r = {r}) ==");
    let certify = match existence_bound(&spec.constants, spec.alpha, spec.t_end, r) {
        Ok(cert) => {
            println!("{}", certificate_report(&spec, &cert));
            Ok(if cert.admissible && cert.dhage_ok { Outcome::Success } else { Outcome::Rejected })
        }
        Err(e) => Err(CliError::Usage(e.to_string())),
    };
    println!("{}\n", stage_line("certify", &certify));
    stages.push(("certify", certify));

    println!("== solve (n = {n}, tol = {tol:e}) ==");
    let report = run_solve(&spec, &cfg).map_err(usage)?;
    println!("{}", solve_summary(&report));
    let ball = report.sup_norm() <= r;
    println!("sup_norm <= r: {ball}");
    let solve = if report.status.is_converged() && ball { Ok(Outcome::Success) } else { Ok(Outcome::SolverFailure) };
    println!("{}\n", stage_line("solve", &solve));
    stages.push(("solve", solve));

    println!("== residual ==");
    let residual = match residual_of(&spec, &report.trajectory, cfg.scheme) {
        Ok(res) => {
            println!("residual_integral = {:e}", res.integral);
            println!("residual_frac_deriv = {}", opt_num(res.frac_deriv));
            let gate = 10.0 * tol * (1.0 + report.sup_norm());
            println!("gate = {gate:e}");
            Ok(if report.status.is_converged() && res.integral <= gate { Outcome::Success } else { Outcome::SolverFailure })
        }
        Err(e) => Err(CliError::Solver(e.to_string())),
    };
    println!("{}\n", stage_line("residual", &residual));
    stages.push(("residual", residual));

    println!("== compare (phi2 = 0.9*sin(theta)) ==");
    let compare = dependence_report(&spec, "0.9*sin(theta)", &cfg, None).map(|(text, outcome)| {
        println!("{text}");
        outcome
    });
    println!("{}\n", stage_line("compare", &compare));
    stages.push(("compare", compare));

    let failed: Vec<&str> = stages.iter().filter(|(_, r)| !matches!(r, Ok(Outcome::Success))).map(|(n, _)| *n).collect();
    if failed.is_empty() {
        println!("all stages passed");
        return Ok(Outcome::Success);
    }
    println!("failed stages: {}", failed.join(", "));
    let first = stages.into_iter().find(|(_, r)| !matches!(r, Ok(Outcome::Success))).map(|(_, r)| r);
    match first {
        Some(Ok(outcome)) => Ok(outcome),
        Some(Err(e)) => Err(e),
        None => Ok(Outcome::Success),
    }
}

pub fn sweep(plan_path: &Path, out: &Path) -> Result<Outcome, CliError> {
    let plan = SweepPlan::parse(&read_file(plan_path)?).map_err(|e| CliError::Usage(format!("{}: {e}", plan_path.display())))?;
    let outcome = run_sweep(&plan).map_err(usage)?;
    write_atlas(&outcome, create(out)?).map_err(usage)?;
    println!("{}", summary(&outcome));
    Ok(Outcome::Success)
}
