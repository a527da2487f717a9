//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.
//!
//! Every numeric threshold below is a named constant so the gate values are
//! visible in one place.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use frift_core::certify::{audit_claim, dhage_condition, existence_bound, verify_dependence};
use frift_core::expr::{parse_expr, BinOp, EvalEnv, Expr, ExprAst, ExprError, Func, Role, Segment, Var};
use frift_core::fracint::{frac_integral, make_weights, Grid, Scheme};
use frift_core::model::{estimate_constants, parse_problem, read_trajectory_csv, ProblemSpec};
use frift_core::solver::{march_solve, picard_solve, residual, Method, SolveConfig, SolveReport};
use frift_core::specfun::gamma;
use frift_core::BENCHMARK;

// criterion 1
const GAMMA_REL_TOL: f64 = 1e-12;
const GAMMA_BUDGET: Duration = Duration::from_secs(1);
/// Γ(10.3) for the decimal argument 10.3, to 20 significant digits.
#[allow(clippy::excessive_precision)]
const GAMMA_10_3: f64 = 716_430.689_062_375_244_5;

// criterion 2
const FRAC_ABS_TOL: f64 = 1e-4;
const FRAC_N: usize = 2000;
const EOC_RECT_MIN: f64 = 0.9;
const EOC_TRAP_MIN: f64 = 1.7;
const FRAC_BUDGET: Duration = Duration::from_secs(30);

// criterion 3
const B_FACTOR_REF: f64 = 7.8540;
const B_FACTOR_TOL: f64 = 1e-3;
const ROOT_REF: f64 = 18.334;
const ROOT_TOL: f64 = 0.01;
const LM_REF: f64 = 0.1091;
const LM_TOL: f64 = 1e-3;
const ADMISSIBLE_HIGH_REF: f64 = 6.336;
const ADMISSIBLE_HIGH_TOL: f64 = 0.01;
const CERT_BUDGET: Duration = Duration::from_secs(1);

// criterion 4
const SOLVE_N: usize = 2000;
const REFINED_N: usize = 8000;
const SOLVE_TOL: f64 = 1e-8;
const MAX_ITER: usize = 200;
const BALL_RADIUS: f64 = 2.0;
const REFINED_GAP_TOL: f64 = 1e-3;
const SOLVE_BUDGET: Duration = Duration::from_secs(60);

// criterion 5
const RANDOM_PROBLEMS: usize = 20;
const RANDOM_L_MAX: f64 = 0.2;
const RANDOM_N: usize = 400;
const AGREEMENT_FACTOR: f64 = 10.0;
const METHOD_BUDGET: Duration = Duration::from_secs(300);

// criterion 6
const PHI2: [&str; 3] = ["0.9*sin(theta)", "0.99*sin(theta)", "sin(theta) + 0.05*theta/pi"];
const DEPENDENCE_BUDGET: Duration = Duration::from_secs(180);

// criterion 7
const SECOND_START: f64 = 0.5;
const UNIQUENESS_BUDGET: Duration = Duration::from_secs(120);

// criterion 8
const RESIDUAL_FACTOR: f64 = 10.0;
const FRAC_RESIDUAL_COARSE: usize = 500;
const FRAC_RESIDUAL_FINE: usize = 2000;
const RESIDUAL_BUDGET: Duration = Duration::from_secs(120);

// criterion 9
const GENERATED_EXPRESSIONS: usize = 2000;
const PARSER_BUDGET: Duration = Duration::from_secs(30);

// criterion 10
const CSV_RESIDUAL_TOL: f64 = 1e-12;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn bench() -> ProblemSpec {
    parse_problem(BENCHMARK).expect("benchmark parses")
}

fn cfg(n_steps: usize) -> SolveConfig {
    SolveConfig { n_steps, tol: SOLVE_TOL, max_iter: MAX_ITER, ..SolveConfig::default() }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Converged solves collected for the residual gate.
#[derive(Default)]
struct Solved {
    runs: Vec<(String, ProblemSpec, SolveReport)>,
}

impl Solved {
    fn keep(&mut self, label: impl Into<String>, spec: &ProblemSpec, report: &SolveReport) {
        if report.status.is_converged() {
            self.runs.push((label.into(), spec.clone(), report.clone()));
        }
    }
}

// ---------------------------------------------------------------- criterion 1

/// ln Γ by the Stirling series after shifting the argument past 30.
fn ln_gamma_oracle(x: f64) -> f64 {
    const B2K: [f64; 8] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
        -3617.0 / 510.0,
    ];
    let mut shift = 0.0;
    let mut z = x;
    while z < 30.0 {
        shift += z.ln();
        z += 1.0;
    }
    let mut series = 0.0;
    for (k, b) in B2K.iter().enumerate() {
        let m = 2.0 * (k as f64 + 1.0);
        series += b / (m * (m - 1.0) * z.powf(m - 1.0));
    }
    (z - 0.5) * z.ln() - z + 0.5 * (2.0 * std::f64::consts::PI).ln() + series - shift
}

fn criterion_gamma() -> Outcome {
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let cases = [(0.5, sqrt_pi), (1.0, 1.0), (1.5, sqrt_pi / 2.0), (5.0, 24.0), (10.3, GAMMA_10_3)];
    let mut worst: f64 = 0.0;
    for (x, want) in cases {
        let got = gamma(x).map_err(|e| format!("gamma({x}): {e}"))?;
        let oracle = ln_gamma_oracle(x).exp();
        let rel = ((got - want) / want).abs();
        let rel_oracle = ((got - oracle) / oracle).abs();
        check(rel <= GAMMA_REL_TOL && rel_oracle <= GAMMA_REL_TOL, || {
            format!("gamma({x}) = {got:e}, reference {want:e} (rel {rel:e}), oracle rel {rel_oracle:e}")
        })?;
        worst = worst.max(rel).max(rel_oracle);
    }
    Ok(format!("max relative error {worst:.1e}"))
}

// ---------------------------------------------------------------- criterion 2

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    step(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
}

/// (I^α t^p)(1) by quadrature after u = (1 − s)^α.
fn quadrature_oracle(p: i32, alpha: f64) -> f64 {
    let f = |u: f64| (1.0 - u.powf(1.0 / alpha)).powi(p);
    simpson(&f, 0.0, 1.0, 1e-14) / alpha / ln_gamma_oracle(alpha).exp()
}

fn frac_at_one(p: i32, alpha: f64, n: usize, scheme: Scheme) -> Result<f64, String> {
    let grid = Grid::new(1.0, n).map_err(|e| e.to_string())?;
    let u: Vec<f64> = grid.nodes().map(|t| t.powi(p)).collect();
    let w = make_weights(alpha, grid, scheme).map_err(|e| e.to_string())?;
    Ok(*frac_integral(&u, &w).map_err(|e| e.to_string())?.last().unwrap())
}

fn criterion_fracint() -> Outcome {
    let mut worst: f64 = 0.0;
    for alpha in [0.3, 0.5, 0.8] {
        for p in 0..=2 {
            let power = (ln_gamma_oracle(p as f64 + 1.0) - ln_gamma_oracle(p as f64 + alpha + 1.0)).exp();
            let quad = quadrature_oracle(p, alpha);
            check((power - quad).abs() <= 1e-10, || format!("oracles disagree at p={p}, α={alpha}: {power} vs {quad}"))?;
            let got = frac_at_one(p, alpha, FRAC_N, Scheme::Trap)?;
            let err = (got - power).abs();
            check(err <= FRAC_ABS_TOL, || format!("p={p}, α={alpha}: error {err:e}"))?;
            worst = worst.max(err);
        }
    }
    // EOC on t² with α = 0.5, where both schemes reach their nominal order
    let exact = (ln_gamma_oracle(3.0) - ln_gamma_oracle(3.5)).exp();
    let mut orders = Vec::new();
    for (scheme, min) in [(Scheme::Rect, EOC_RECT_MIN), (Scheme::Trap, EOC_TRAP_MIN)] {
        let errs = [250, 500, 1000, 2000]
            .iter()
            .map(|&n| frac_at_one(2, 0.5, n, scheme).map(|v| (v - exact).abs()))
            .collect::<Result<Vec<_>, _>>()?;
        let eoc: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        check(eoc.iter().all(|&e| e >= min), || format!("{scheme} EOC {eoc:?} below {min}"))?;
        orders.push(format!("{scheme} EOC {:.3}", eoc.last().unwrap()));
    }
    Ok(format!("max error {worst:.1e}; {}", orders.join(", ")))
}

// ---------------------------------------------------------------- criterion 3

fn criterion_certificate() -> Outcome {
    let spec = bench();
    let cert = existence_bound(&spec.constants, spec.alpha, spec.t_end, 2.0).map_err(|e| e.to_string())?;
    check((cert.b_factor - B_FACTOR_REF).abs() <= B_FACTOR_TOL, || format!("B_factor {}", cert.b_factor))?;
    let root = cert.r_interval.high;
    check((root - ROOT_REF).abs() <= ROOT_TOL, || format!("denominator root {root}"))?;
    check((144.0 / cert.b_factor - root).abs() <= 1e-9, || format!("root {root} is not 144/B"))?;
    let (m, ok) = dhage_condition(&spec.constants, spec.alpha, spec.t_end, 2.0).map_err(|e| e.to_string())?;
    let lm = spec.constants.l.unwrap() * m;
    check(ok && (lm - LM_REF).abs() <= LM_TOL, || format!("L*M {lm}"))?;
    check((cert.l_times_m - lm).abs() <= 1e-15, || "certificate and Dhage check disagree".into())?;
    let high = cert.admissible_interval.ok_or("empty admissible interval")?.high;
    check((high - ADMISSIBLE_HIGH_REF).abs() <= ADMISSIBLE_HIGH_TOL, || format!("admissible upper endpoint {high}"))?;
    let claimed = spec.claimed.ok_or("benchmark has no [claims]")?;
    let audit = audit_claim(&cert, &claimed);
    check(audit.discrepancy, || "claimed interval not flagged".into())?;
    check(audit.notes.iter().any(|n| n.contains("6.33")), || format!("notes lack the direct endpoint: {:?}", audit.notes))?;
    Ok(format!("B = {:.6}, root = {root:.4}, L*M = {lm:.5}, admissible high = {high:.4}, claim flagged", cert.b_factor))
}

// ---------------------------------------------------------------- criterion 4

fn criterion_solve(solved: &mut Solved) -> Outcome {
    let spec = bench();
    let coarse = picard_solve(&spec, &cfg(SOLVE_N)).map_err(|e| e.to_string())?;
    check(coarse.status.is_converged(), || format!("status {}", coarse.status))?;
    check(coarse.iterations <= MAX_ITER, || format!("{} iterations", coarse.iterations))?;
    let norm = coarse.sup_norm();
    check(norm <= BALL_RADIUS, || format!("sup norm {norm}"))?;
    let fine = picard_solve(&spec, &cfg(REFINED_N)).map_err(|e| e.to_string())?;
    check(fine.status.is_converged(), || format!("refined status {}", fine.status))?;
    let stride = REFINED_N / SOLVE_N;
    let on_coarse: Vec<f64> = fine.trajectory.main().iter().step_by(stride).copied().collect();
    let gap = sup_diff(coarse.trajectory.main(), &on_coarse);
    check(gap <= REFINED_GAP_TOL, || format!("gap to n={REFINED_N}: {gap:e}"))?;
    solved.keep("benchmark n=2000", &spec, &coarse);
    solved.keep("benchmark n=8000", &spec, &fine);
    Ok(format!("{} iterations, sup norm {norm:.6}, gap to n={REFINED_N} {gap:.2e}", coarse.iterations))
}

// ---------------------------------------------------------------- criterion 5

fn random_problem(rng: &mut ChaCha8Rng) -> ProblemSpec {
    let alpha = rng.gen_range(0.2..0.9);
    let t_end = rng.gen_range(0.5..3.0);
    let delta = rng.gen_range(0.0..1.5);
    let (a, b, c0) = (rng.gen_range(0.0..0.15), rng.gen_range(0.5..1.3), rng.gen_range(1.0..2.0));
    let f = format!("{c0:?} + {a:?}*sin({b:?}*x + t)");
    let (g0, g1, g2, g3) = (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..0.3), rng.gen_range(0.0..0.2), rng.gen_range(0.0..0.2));
    let d = rng.gen_range(0.0..1.0) * delta;
    let g = format!("{g0:?}*cos(t) + {g1:?}*xat(-{d:?}) + {g2:?}*sin(y) + {g3:?}*xnorm");
    let (k0, k1) = (rng.gen_range(-0.5..0.5), rng.gen_range(-1.0..1.0));
    let k = format!("{k0:?}*xat(0) + {k1:?}*exp(-t)");
    let p = rng.gen_range(-1.0..1.0);
    parse_problem(&format!(
        "[problem]\nalpha = {alpha:?}\nT = {t_end:?}\ndelta = {delta:?}\nf = {f}\ng = {g}\nk = {k}\nphi = {p:?}*sin(theta)\n"
    ))
    .expect("generated problem parses")
}

fn agree(label: &str, spec: &ProblemSpec, n: usize, solved: &mut Solved) -> Result<f64, String> {
    let c = cfg(n);
    let p = picard_solve(spec, &c).map_err(|e| format!("{label}: {e}"))?;
    let m = march_solve(spec, &SolveConfig { method: Method::March, ..c }).map_err(|e| format!("{label}: {e}"))?;
    check(p.status.is_converged() && m.status.is_converged(), || format!("{label}: {} / {}", p.status, m.status))?;
    let gap = sup_diff(p.trajectory.main(), m.trajectory.main());
    check(gap <= AGREEMENT_FACTOR * SOLVE_TOL, || format!("{label}: gap {gap:e}"))?;
    solved.keep(format!("{label} picard"), spec, &p);
    solved.keep(format!("{label} march"), spec, &m);
    Ok(gap)
}

fn criterion_methods(solved: &mut Solved) -> Outcome {
    let mut worst = agree("benchmark", &bench(), SOLVE_N, solved)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut accepted, mut drawn) = (0, 0);
    while accepted < RANDOM_PROBLEMS {
        drawn += 1;
        let spec = random_problem(&mut rng);
        let l = estimate_constants(&spec, 500, BALL_RADIUS).map_err(|e| e.to_string())?.constants.l.unwrap();
        if l > RANDOM_L_MAX {
            continue;
        }
        worst = worst.max(agree(&format!("random problem {accepted}"), &spec, RANDOM_N, solved)?);
        accepted += 1;
    }
    Ok(format!("benchmark + {accepted} random problems ({drawn} drawn), max gap {worst:.1e}"))
}

// ---------------------------------------------------------------- criterion 6

fn criterion_dependence(solved: &mut Solved) -> Outcome {
    let spec = bench();
    let mut lines = Vec::new();
    for src in PHI2 {
        let phi2 = parse_expr(src, Role::Phi).map_err(|e| e.to_string())?;
        let dep = verify_dependence(&spec, &phi2, &cfg(SOLVE_N)).map_err(|e| format!("{src}: {e}"))?;
        let empirical = dep.empirical.ok_or_else(|| format!("{src}: {} / {}", dep.first.status, dep.second.status))?;
        check(empirical <= dep.bound + AGREEMENT_FACTOR * SOLVE_TOL, || {
            format!("{src}: empirical {empirical:e} > bound {:e}", dep.bound)
        })?;
        check(dep.satisfied == Some(true), || format!("{src}: verdict {:?}", dep.satisfied))?;
        let second = ProblemSpec { phi: phi2, ..spec.clone() };
        solved.keep(format!("phi2 = {src}"), &second, &dep.second);
        lines.push(format!("{src}: {empirical:.3e} <= {:.3e}", dep.bound));
    }
    Ok(lines.join("; "))
}

// ---------------------------------------------------------------- criterion 7

fn criterion_uniqueness(solved: &mut Solved) -> Outcome {
    let spec = bench();
    let phi0 = spec.phi_at(0.0).map_err(|e| e.to_string())?;
    let a = picard_solve(&spec, &SolveConfig { initial: Some(phi0), ..cfg(SOLVE_N) }).map_err(|e| e.to_string())?;
    let b = picard_solve(&spec, &SolveConfig { initial: Some(SECOND_START), ..cfg(SOLVE_N) }).map_err(|e| e.to_string())?;
    check(a.status.is_converged() && b.status.is_converged(), || format!("{} / {}", a.status, b.status))?;
    let gap = sup_diff(a.trajectory.main(), b.trajectory.main());
    check(gap <= AGREEMENT_FACTOR * SOLVE_TOL, || format!("gap {gap:e}"))?;
    solved.keep("start 0.5", &spec, &b);
    Ok(format!("starts {phi0} and {SECOND_START}: gap {gap:.1e}"))
}

// ---------------------------------------------------------------- criterion 8

fn criterion_residual(solved: &Solved) -> Outcome {
    check(!solved.runs.is_empty(), || "no converged runs to check".into())?;
    let mut worst: f64 = 0.0;
    for (label, spec, report) in &solved.runs {
        // every run above uses the trap scheme
        let r = residual(spec, &report.trajectory, Scheme::Trap).map_err(|e| format!("{label}: {e}"))?;
        let gate = RESIDUAL_FACTOR * SOLVE_TOL * (1.0 + report.sup_norm());
        check(r.integral <= gate, || format!("{label}: residual {:e} > {gate:e}", r.integral))?;
        worst = worst.max(r.integral / gate);
    }
    // analytic problem: f = g = 1, so x(t) = t^α/Γ(α+1)
    let spec = parse_problem("[problem]\nalpha = 0.5\nT = 1\ndelta = 0.5\nf = 1\ng = 1\nk = 0\nphi = 0\n").unwrap();
    let frac = |n: usize| -> Result<f64, String> {
        let report = picard_solve(&spec, &cfg(n)).map_err(|e| e.to_string())?;
        let r = residual(&spec, &report.trajectory, Scheme::Trap).map_err(|e| e.to_string())?;
        r.frac_deriv.ok_or_else(|| format!("no interior nodes at n={n}"))
    };
    let (coarse, fine) = (frac(FRAC_RESIDUAL_COARSE)?, frac(FRAC_RESIDUAL_FINE)?);
    check(fine < coarse, || format!("frac residual {coarse:e} -> {fine:e}"))?;
    Ok(format!(
        "{} runs, worst residual/gate {worst:.1e}; frac residual {coarse:.2e} -> {fine:.2e}",
        solved.runs.len()
    ))
}

// ---------------------------------------------------------------- criterion 9

struct Ramp;

impl Segment for Ramp {
    fn xat(&self, theta: f64) -> f64 {
        theta.clamp(-1.0, 0.0) + 1.0
    }
    fn xnorm(&self) -> f64 {
        1.0
    }
}

fn random_expr(rng: &mut ChaCha8Rng, depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..6) {
            0 => Expr::Num(rng.gen_range(0..2000) as f64 / 8.0),
            1 => Expr::Num(rng.gen_range(0.0..1e3)),
            2 => Expr::Pi,
            3 => Expr::Var(Var::T),
            4 => Expr::Var(Var::Y),
            _ => Expr::Call(Func::XNorm, vec![]),
        };
    }
    match rng.gen_range(0..4) {
        0 => Expr::Neg(Box::new(random_expr(rng, depth - 1))),
        1 => {
            let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow][rng.gen_range(0..5)];
            Expr::binary(op, random_expr(rng, depth - 1), random_expr(rng, depth - 1))
        }
        2 => {
            let f = [Func::Sin, Func::Cos, Func::Exp, Func::Abs, Func::Sqrt, Func::XAt][rng.gen_range(0..6)];
            Expr::Call(f, vec![random_expr(rng, depth - 1)])
        }
        _ => {
            let f = if rng.gen_bool(0.5) { Func::Min } else { Func::Max };
            Expr::Call(f, vec![random_expr(rng, depth - 1), random_expr(rng, depth - 1)])
        }
    }
}

/// Operator-precedence evaluation of `n0 op n1 op n2 ...`, written independently
/// of the crate's parser. `None` when an intermediate is not finite.
fn precedence_oracle(nums: &[f64], ops: &[char]) -> Option<f64> {
    fn prec(op: char) -> u8 {
        match op {
            '+' | '-' => 1,
            '*' | '/' => 2,
            _ => 3,
        }
    }
    fn apply(op: char, a: f64, b: f64) -> f64 {
        match op {
            '+' => a + b,
            '-' => a - b,
            '*' => a * b,
            '/' => a / b,
            _ => a.powf(b),
        }
    }
    let mut values = vec![nums[0]];
    let mut stack: Vec<char> = Vec::new();
    let reduce = |values: &mut Vec<f64>, op: char| -> Option<()> {
        let b = values.pop()?;
        let a = values.pop()?;
        let v = apply(op, a, b);
        v.is_finite().then(|| values.push(v))
    };
    for (op, &num) in ops.iter().zip(&nums[1..]) {
        while let Some(&top) = stack.last() {
            // ^ is right-associative
            let pops = prec(top) > prec(*op) || (prec(top) == prec(*op) && *op != '^');
            if !pops {
                break;
            }
            stack.pop();
            reduce(&mut values, top)?;
        }
        stack.push(*op);
        values.push(num);
    }
    while let Some(op) = stack.pop() {
        reduce(&mut values, op)?;
    }
    values.pop()
}

fn criterion_parser() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let ramp = Ramp;
    for i in 0..GENERATED_EXPRESSIONS {
        let ast = ExprAst::from_expr(random_expr(&mut rng, 5), Role::G).map_err(|e| e.to_string())?;
        let minimal = ast.to_string();
        let full = ast.to_full_paren_string();
        let back = parse_expr(&minimal, Role::G).map_err(|e| format!("case {i}: `{minimal}`: {e}"))?;
        check(back == ast, || format!("case {i}: `{minimal}` does not round-trip"))?;
        let back_full = parse_expr(&full, Role::G).map_err(|e| format!("case {i}: `{full}`: {e}"))?;
        check(back_full == ast, || format!("case {i}: `{full}` does not round-trip"))?;
        let env = EvalEnv::new().t(rng.gen_range(-3.0..3.0)).y(rng.gen_range(-3.0..3.0)).segment(&ramp);
        let (a, b) = (back.eval(&env), back_full.eval(&env));
        let same = match (&a, &b) {
            (Ok(x), Ok(y)) => x.to_bits() == y.to_bits(),
            (x, y) => x == y,
        };
        check(same, || format!("case {i}: `{minimal}` gives {a:?}, `{full}` gives {b:?}"))?;
    }

    let mut compared = 0;
    for i in 0..GENERATED_EXPRESSIONS {
        let len = rng.gen_range(2..7);
        let nums: Vec<f64> = (0..len).map(|_| rng.gen_range(1..10) as f64).collect();
        let ops: Vec<char> = (1..len).map(|_| ['+', '-', '*', '/', '^'][rng.gen_range(0..5)]).collect();
        let mut src = format!("{}", nums[0]);
        for (op, n) in ops.iter().zip(&nums[1..]) {
            src.push_str(&format!(" {op} {n}"));
        }
        let Some(want) = precedence_oracle(&nums, &ops) else { continue };
        let got = parse_expr(&src, Role::Psi)
            .map_err(|e| format!("precedence case {i}: `{src}`: {e}"))?
            .eval(&EvalEnv::new())
            .map_err(|e| format!("precedence case {i}: `{src}`: {e}"))?;
        check(got.to_bits() == want.to_bits(), || format!("`{src}` = {got}, expected {want}"))?;
        compared += 1;
    }

    let typed: [(&str, Role, ExprError); 6] = [
        ("xnorm", Role::F, ExprError::SegmentNotAllowed { pos: 0, name: "xnorm".into(), role: Role::F }),
        ("t + y", Role::F, ExprError::UnknownIdentifier { pos: 4, name: "y".into(), role: Role::F }),
        ("2*xat(0)", Role::Phi, ExprError::SegmentNotAllowed { pos: 2, name: "xat".into(), role: Role::Phi }),
        ("r * t", Role::Psi, ExprError::UnknownIdentifier { pos: 4, name: "t".into(), role: Role::Psi }),
        ("1 + sin(1, 2)", Role::Psi, ExprError::Arity { pos: 4, name: "sin".into(), expected: 1, found: 2 }),
        ("max(1)", Role::Psi, ExprError::Arity { pos: 0, name: "max".into(), expected: 2, found: 1 }),
    ];
    for (src, role, want) in &typed {
        let got = parse_expr(src, *role).err();
        check(got.as_ref() == Some(want), || format!("`{src}` as {role:?}: {got:?}, expected {want:?}"))?;
    }
    let more: [(&str, Role, usize); 4] = [("x", Role::K, 0), ("sin(theta) + x", Role::Phi, 13), ("xnorm(1)", Role::G, 0), ("xat", Role::K, 0)];
    for (src, role, pos) in more {
        let err = parse_expr(src, role).err().ok_or_else(|| format!("`{src}` accepted as {role:?}"))?;
        let typed_ok = matches!(err, ExprError::UnknownIdentifier { .. } | ExprError::Arity { .. } | ExprError::SegmentNotAllowed { .. });
        check(typed_ok && err.pos() == pos, || format!("`{src}`: {err:?}, expected position {pos}"))?;
    }
    Ok(format!(
        "{GENERATED_EXPRESSIONS} round trips, {compared} precedence oracle comparisons, {} typed error cases",
        typed.len() + more.len()
    ))
}

// ---------------------------------------------------------------- criterion 10

fn frift(args: &[&str]) -> Result<(i32, String), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_frift")).args(args).output().map_err(|e| e.to_string())?;
    Ok((out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned()))
}

fn criterion_cli(dir: &Path) -> Outcome {
    let file = dir.join("bench.frift");
    std::fs::write(&file, BENCHMARK).map_err(|e| e.to_string())?;
    let f = file.to_str().unwrap();
    let csv = dir.join("x.csv");
    let c = csv.to_str().unwrap();
    let missing = dir.join("missing.frift");
    let m = missing.to_str().unwrap();
    let bare = dir.join("bare.frift");
    std::fs::write(&bare, BENCHMARK.split("[constants]").next().unwrap()).map_err(|e| e.to_string())?;
    let b = bare.to_str().unwrap();

    let matrix: Vec<(Vec<&str>, i32)> = vec![
        (vec!["solve", f, "--n", "400", "--out", c], 0),
        (vec!["solve", f, "--n", "400", "--max-iter", "1"], 2),
        (vec!["solve", f, "--n", "400", "--blow-up", "1e-6"], 2),
        (vec!["solve", m], 1),
        (vec!["solve", f, "--bogus"], 1),
        (vec!["certify", f, "--r", "2"], 0),
        (vec!["certify", f, "--r", "25"], 3),
        (vec!["certify", f, "--r", "0"], 1),
        (vec!["certify", b, "--r", "2"], 1),
        (vec!["compare", f, "--phi2", "0.9*sin(theta)", "--n", "400"], 0),
        (vec!["compare", f, "--phi2", "xnorm"], 1),
        (vec!["compare", f, "--phi2", "0.9*sin(theta)", "--set", "L=1"], 3),
        (vec!["fracint", "--alpha", "0.5", "--expr", "1"], 0),
        (vec!["fracint", "--alpha", "1.5", "--expr", "1"], 1),
        (vec!["residual", f, "--traj", c], 0),
        (vec!["bench", "--n", "250"], 0),
    ];
    for (args, want) in &matrix {
        let (code, text) = frift(args)?;
        check(code == *want, || format!("`frift {}` exited {code}, expected {want}\n{text}", args.join(" ")))?;
    }

    let (_, text) = frift(&["residual", f, "--traj", c])?;
    let printed: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("residual_integral = "))
        .ok_or("no residual_integral line")?
        .parse()
        .map_err(|e| format!("{e}"))?;
    let spec = bench();
    let file = std::fs::File::open(&csv).map_err(|e| e.to_string())?;
    let traj = read_trajectory_csv(&spec, file).map_err(|e| e.to_string())?;
    let reread = residual(&spec, &traj, Scheme::Trap).map_err(|e| e.to_string())?.integral;
    let report = picard_solve(&spec, &SolveConfig { n_steps: 400, ..SolveConfig::default() }).map_err(|e| e.to_string())?;
    let in_memory = report.residual_integral.ok_or("no in-memory residual")?;
    let diff = (printed - in_memory).abs().max((reread - in_memory).abs());
    check(diff <= CSV_RESIDUAL_TOL, || format!("CSV residual {printed:e} / {reread:e} vs in-memory {in_memory:e}"))?;
    Ok(format!("{} exit-code cases; CSV residual difference {diff:.1e}", matrix.len()))
}

// ---------------------------------------------------------------- driver

fn main() {
    let dir = std::env::temp_dir().join(format!("frift-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    let mut solved = Solved::default();

    let mut failures = 0;
    let mut run = |id: u32, name: &str, budget: Option<Duration>, body: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let mut outcome = body();
        let elapsed = start.elapsed();
        if let (Ok(_), Some(limit)) = (&outcome, budget) {
            if elapsed > limit {
                outcome = Err(format!("took {elapsed:.2?}, budget {limit:.0?}"));
            }
        }
        match outcome {
            Ok(detail) => println!("criterion {id:>2} {name}: PASS ({detail}; {elapsed:.2?})"),
            Err(why) => {
                failures += 1;
                println!("criterion {id:>2} {name}: FAIL ({why}; {elapsed:.2?})");
            }
        }
    };

    run(1, "gamma accuracy", Some(GAMMA_BUDGET), &mut criterion_gamma);
    run(2, "fractional integral oracle", Some(FRAC_BUDGET), &mut criterion_fracint);
    run(3, "benchmark certificate", Some(CERT_BUDGET), &mut criterion_certificate);
    run(4, "benchmark solve", Some(SOLVE_BUDGET), &mut || criterion_solve(&mut solved));
    run(5, "method agreement", Some(METHOD_BUDGET), &mut || criterion_methods(&mut solved));
    run(6, "dependence bound", Some(DEPENDENCE_BUDGET), &mut || criterion_dependence(&mut solved));
    run(7, "uniqueness", Some(UNIQUENESS_BUDGET), &mut || criterion_uniqueness(&mut solved));
    run(8, "residual gate", Some(RESIDUAL_BUDGET), &mut || criterion_residual(&solved));
    run(9, "parser suite", Some(PARSER_BUDGET), &mut criterion_parser);
    run(10, "cli contract", None, &mut || criterion_cli(&dir));

    let _ = std::fs::remove_dir_all(&dir);
    if failures > 0 {
        println!("acceptance: {failures} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all 10 criteria passed");
}
