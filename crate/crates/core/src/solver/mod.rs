//! Fixed-point solvers for `x(t) = f(t, x(t)) · I^α[g(·, x_·, ∫₀^· k)](t)`.
//!
//! [`picard_solve`] iterates the whole-trajectory operator; [`march_solve`]
//! fixes one node at a time with an inner scalar loop. Both keep the history
//! rows at the φ samples and report failures as a [`SolveStatus`] rather than
//! an error.

mod residual;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::expr::{EvalEnv, EvalError, ExprAst};
use crate::fracint::{cumulative_trapezoid, make_weights, FracError, Grid, Scheme};
use crate::model::{window, ProblemSpec, StateWindow, Trajectory, TrajectoryError};

pub use residual::{residual, Residual, ResidualError, FRAC_RESIDUAL_START};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Picard,
    March,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Picard => "picard",
            Method::March => "march",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "picard" => Ok(Method::Picard),
            "march" => Ok(Method::March),
            other => Err(format!("unknown method `{other}` (expected picard or march)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    pub n_steps: usize,
    pub scheme: Scheme,
    pub method: Method,
    /// Stop once the sup-norm update is at most `tol·(1 + ‖x‖∞)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Divergence guard on ‖x‖∞.
    pub blow_up: f64,
    /// Constant initial iterate on [0, T]; `None` uses φ(0).
    pub initial: Option<f64>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            n_steps: 1000,
            scheme: Scheme::Trap,
            method: Method::Picard,
            tol: 1e-8,
            max_iter: 200,
            blow_up: 1e6,
            initial: None,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |msg: String| Err(SolveError::Config(msg));
        if self.n_steps == 0 {
            return bad("n_steps must be positive".into());
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1".into());
        }
        #[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN
        if !(self.blow_up > 0.0) {
            return bad(format!("blow_up must be positive, got {}", self.blow_up));
        }
        if let Some(c) = self.initial {
            if !c.is_finite() {
                return bad(format!("initial iterate must be finite, got {c}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveStatus {
    Converged,
    /// `node` is set when the inner loop of the marching solver gave up.
    MaxIterExceeded { node: Option<usize> },
    Diverged,
    EvalError(String),
}

impl SolveStatus {
    pub fn is_converged(&self) -> bool {
        matches!(self, SolveStatus::Converged)
    }

    /// Short machine-readable label.
    pub fn label(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIterExceeded { .. } => "max_iter_exceeded",
            SolveStatus::Diverged => "diverged",
            SolveStatus::EvalError(_) => "eval_error",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveStatus::MaxIterExceeded { node: Some(n) } => write!(f, "max_iter_exceeded (inner loop at node {n})"),
            SolveStatus::EvalError(msg) => write!(f, "eval_error: {msg}"),
            other => f.write_str(other.label()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub method: Method,
    /// Sweeps for Picard; the largest inner iteration count for marching.
    pub iterations: usize,
    /// Last sup-norm update (largest final inner update for marching).
    pub final_delta: f64,
    pub trajectory: Trajectory,
    /// Integral-form residual of the returned trajectory; `None` after
    /// divergence or an evaluation error.
    pub residual_integral: Option<f64>,
    /// `xat` offsets clamped to [-δ, 0] while evaluating the final iterate.
    pub clamp_warnings: usize,
}

impl SolveReport {
    pub fn sup_norm(&self) -> f64 {
        self.trajectory.sup_norm()
    }
}

/// Setup failures; iteration outcomes are reported through [`SolveStatus`].
#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Frac(#[from] FracError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error("history function: {0}")]
    History(#[from] EvalError),
}

/// An expression failure tied to a grid node.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{role} at node {node} (t = {t}): {source}")]
pub struct NodeError {
    pub role: &'static str,
    pub node: usize,
    pub t: f64,
    #[source]
    pub source: EvalError,
}

fn eval_at(ast: &ExprAst, role: &'static str, node: usize, env: EvalEnv<'_>) -> Result<f64, NodeError> {
    ast.eval(&env).map_err(|source| NodeError { role, node, t: env.t.unwrap_or(f64::NAN), source })
}

fn first_error<T>(results: Vec<Result<T, NodeError>>) -> Result<Vec<T>, NodeError> {
    results.into_iter().collect()
}

/// g sampled along a trajectory: G_j = g(t_j, x_{t_j}, z_j) with z the running
/// trapezoid integral of k(τ, x_τ).
pub(crate) struct RhsSamples {
    pub g: Vec<f64>,
    pub clamps: usize,
}

pub(crate) fn rhs_samples(spec: &ProblemSpec, traj: &Trajectory) -> Result<RhsSamples, NodeError> {
    let grid = *traj.grid();
    let mut windows: Vec<StateWindow<'_>> = grid
        .nodes()
        .map(|t| window(traj, t).expect("grid nodes lie inside the trajectory"))
        .collect();
    let k = first_error(
        windows
            .par_iter_mut()
            .enumerate()
            .map(|(j, w)| {
                let t = grid.node(j);
                eval_at(&spec.k, "k", j, EvalEnv::new().t(t).segment(&*w))
            })
            .collect(),
    )?;
    let z = cumulative_trapezoid(&k, grid.step());
    let g = first_error(
        windows
            .par_iter_mut()
            .enumerate()
            .map(|(j, w)| {
                let t = grid.node(j);
                eval_at(&spec.g, "g", j, EvalEnv::new().t(t).y(z[j]).segment(&*w))
            })
            .collect(),
    )?;
    let clamps = windows.iter().map(StateWindow::clamp_count).sum();
    Ok(RhsSamples { g, clamps })
}

fn sup_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Solves with the method named in `cfg`.
pub fn solve(spec: &ProblemSpec, cfg: &SolveConfig) -> Result<SolveReport, SolveError> {
    match cfg.method {
        Method::Picard => picard_solve(spec, cfg),
        Method::March => march_solve(spec, cfg),
    }
}

fn setup(spec: &ProblemSpec, cfg: &SolveConfig) -> Result<(Grid, Trajectory), SolveError> {
    cfg.validate()?;
    let grid = Grid::new(spec.t_end, cfg.n_steps)?;
    let x0 = match cfg.initial {
        Some(c) => c,
        None => spec.phi_at(0.0)?,
    };
    Ok((grid, Trajectory::from_spec(spec, grid, x0)?))
}

fn finish(
    spec: &ProblemSpec,
    cfg: &SolveConfig,
    status: SolveStatus,
    iterations: usize,
    final_delta: f64,
    trajectory: Trajectory,
    clamp_warnings: usize,
) -> SolveReport {
    let residual_integral = match status {
        SolveStatus::Converged | SolveStatus::MaxIterExceeded { .. } => {
            residual(spec, &trajectory, cfg.scheme).ok().map(|r| r.integral)
        }
        SolveStatus::Diverged | SolveStatus::EvalError(_) => None,
    };
    SolveReport {
        status,
        method: cfg.method,
        iterations,
        final_delta,
        trajectory,
        residual_integral,
        clamp_warnings,
    }
}

/// Waveform Picard iteration
/// `x^{m+1}(t_n) = f(t_n, x^m(t_n)) · Σ_j w_{n,j} g(t_j, x^m_{t_j}, z^m_j)`
/// from the constant iterate φ(0) (or `cfg.initial`).
pub fn picard_solve(spec: &ProblemSpec, cfg: &SolveConfig) -> Result<SolveReport, SolveError> {
    let (grid, mut traj) = setup(spec, cfg)?;
    let weights = make_weights(spec.alpha, grid, cfg.scheme)?;
    let mut final_delta = f64::INFINITY;
    let mut clamps = 0;
    for iter in 1..=cfg.max_iter {
        let rhs = match rhs_samples(spec, &traj) {
            Ok(r) => r,
            Err(e) => {
                return Ok(finish(spec, cfg, SolveStatus::EvalError(e.to_string()), iter, final_delta, traj, clamps));
            }
        };
        clamps = rhs.clamps;
        let integral = weights.apply(&rhs.g)?;
        let current = traj.main();
        let next = first_error(
            (0..grid.len())
                .map(|n| {
                    let t = grid.node(n);
                    Ok(eval_at(&spec.f, "f", n, EvalEnv::new().t(t).x(current[n]))? * integral[n])
                })
                .collect(),
        );
        let next = match next {
            Ok(v) => v,
            Err(e) => {
                return Ok(finish(spec, cfg, SolveStatus::EvalError(e.to_string()), iter, final_delta, traj, clamps));
            }
        };
        final_delta = current.iter().zip(&next).fold(0.0, |m, (a, b)| m.max((a - b).abs()));
        let norm = sup_abs(&next);
        traj.set_main(next);
        if !(norm.is_finite() && norm <= cfg.blow_up) {
            return Ok(finish(spec, cfg, SolveStatus::Diverged, iter, final_delta, traj, clamps));
        }
        if final_delta <= cfg.tol * (1.0 + norm) {
            return Ok(finish(spec, cfg, SolveStatus::Converged, iter, final_delta, traj, clamps));
        }
    }
    Ok(finish(spec, cfg, SolveStatus::MaxIterExceeded { node: None }, cfg.max_iter, final_delta, traj, clamps))
}

/// Node-by-node marching. At t_n the quadrature over j < n uses values already
/// fixed; x(t_n), which enters through f, the window and the trap weight
/// w_{n,n}, is found by scalar fixed-point iteration started from x(t_{n-1}).
pub fn march_solve(spec: &ProblemSpec, cfg: &SolveConfig) -> Result<SolveReport, SolveError> {
    let (grid, mut traj) = setup(spec, cfg)?;
    let weights = make_weights(spec.alpha, grid, cfg.scheme)?;
    let n = grid.n_steps();
    let h = grid.step();
    let diag = weights.diagonal();
    let mut g = vec![0.0; n + 1];
    let mut k = vec![0.0; n + 1];
    let mut z = vec![0.0; n + 1];
    let mut clamps = 0;
    let mut max_inner = 0;
    let mut worst_delta: f64 = 0.0;

    macro_rules! fail {
        ($status:expr) => {
            return Ok(finish(spec, cfg, $status, max_inner, worst_delta, traj, clamps))
        };
    }
    let eval_error = |e: NodeError| SolveStatus::EvalError(e.to_string());

    // node values of k, z and g once x(t_m) is settled
    let settle = |traj: &Trajectory, m: usize, k: &mut [f64], z: &mut [f64], g: &mut [f64]| -> Result<usize, NodeError> {
        let t = grid.node(m);
        let w = window(traj, t).expect("grid node");
        k[m] = eval_at(&spec.k, "k", m, EvalEnv::new().t(t).segment(&w))?;
        z[m] = if m == 0 { 0.0 } else { z[m - 1] + 0.5 * h * (k[m - 1] + k[m]) };
        g[m] = eval_at(&spec.g, "g", m, EvalEnv::new().t(t).y(z[m]).segment(&w))?;
        Ok(w.clamp_count())
    };

    // I^α(·)(0) = 0, so x(0) = 0 whatever f is
    let x_start = traj.main()[0];
    match eval_at(&spec.f, "f", 0, EvalEnv::new().t(0.0).x(x_start)) {
        Ok(fv) => traj.main_mut()[0] = fv * 0.0,
        Err(e) => fail!(eval_error(e)),
    }
    match settle(&traj, 0, &mut k, &mut z, &mut g) {
        Ok(c) => clamps += c,
        Err(e) => fail!(eval_error(e)),
    }

    for m in 1..=n {
        let t = grid.node(m);
        let hist = weights.history_sum(m, &g);
        let mut x = traj.main()[m - 1];
        traj.main_mut()[m] = x;
        let mut converged = false;
        let mut iters = 0;
        let mut delta = f64::INFINITY;
        while iters < cfg.max_iter {
            iters += 1;
            let step = (|| -> Result<f64, NodeError> {
                let g_m = if diag != 0.0 {
                    let w = window(&traj, t).expect("grid node");
                    let k_m = eval_at(&spec.k, "k", m, EvalEnv::new().t(t).segment(&w))?;
                    let z_m = z[m - 1] + 0.5 * h * (k[m - 1] + k_m);
                    eval_at(&spec.g, "g", m, EvalEnv::new().t(t).y(z_m).segment(&w))?
                } else {
                    0.0
                };
                Ok(eval_at(&spec.f, "f", m, EvalEnv::new().t(t).x(x))? * (hist + diag * g_m))
            })();
            let next = match step {
                Ok(v) => v,
                Err(e) => fail!(eval_error(e)),
            };
            delta = (next - x).abs();
            x = next;
            traj.main_mut()[m] = x;
            if !(x.is_finite() && x.abs() <= cfg.blow_up) {
                max_inner = max_inner.max(iters);
                fail!(SolveStatus::Diverged);
            }
            if delta <= cfg.tol * (1.0 + x.abs()) {
                converged = true;
                break;
            }
        }
        max_inner = max_inner.max(iters);
        worst_delta = worst_delta.max(delta);
        if !converged {
            fail!(SolveStatus::MaxIterExceeded { node: Some(m) });
        }
        match settle(&traj, m, &mut k, &mut z, &mut g) {
            Ok(c) => clamps += c,
            Err(e) => fail!(eval_error(e)),
        }
    }
    Ok(finish(spec, cfg, SolveStatus::Converged, max_inner, worst_delta, traj, clamps))
}
