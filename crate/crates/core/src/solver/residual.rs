use thiserror::Error;

use crate::expr::EvalEnv;
use crate::fracint::{frac_derivative, make_weights, FracError, Scheme};
use crate::model::{ProblemSpec, Trajectory};

use super::{eval_at, first_error, rhs_samples, NodeError};

/// The derivative-form residual skips nodes with t < FRAC_RESIDUAL_START·T.
/// Near t = 0 the discrete d/dt∘I^(1-α) has an O(1) error that does not shrink
/// with h, because x/f behaves like a power of t there.
pub const FRAC_RESIDUAL_START: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    /// sup_n |x(t_n) − f(t_n, x(t_n))·(I^α G)(t_n)|.
    pub integral: f64,
    /// max |d^α/dt^α (x/f) − G| over interior nodes with t ≥ FRAC_RESIDUAL_START·T;
    /// `None` when the grid has no such node.
    pub frac_deriv: Option<f64>,
    pub clamp_warnings: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResidualError {
    #[error(transparent)]
    Eval(#[from] NodeError),
    #[error(transparent)]
    Frac(#[from] FracError),
}

/// Residuals of `traj` in the integral form and in the fractional-derivative
/// form of the equation, with G the sampled right-hand side.
pub fn residual(spec: &ProblemSpec, traj: &Trajectory, scheme: Scheme) -> Result<Residual, ResidualError> {
    let grid = *traj.grid();
    let rhs = rhs_samples(spec, traj)?;
    let weights = make_weights(spec.alpha, grid, scheme)?;
    let integral = weights.apply(&rhs.g)?;
    let x = traj.main();
    let f = first_error(
        (0..grid.len())
            .map(|n| eval_at(&spec.f, "f", n, EvalEnv::new().t(grid.node(n)).x(x[n])))
            .collect(),
    )?;
    let integral_res = (0..grid.len()).fold(0.0f64, |m, n| m.max((x[n] - f[n] * integral[n]).abs()));

    let quotient: Vec<f64> = x.iter().zip(&f).map(|(xv, fv)| xv / fv).collect();
    let deriv = frac_derivative(&quotient, spec.alpha, grid)?;
    let start = FRAC_RESIDUAL_START * grid.t_end();
    let frac_deriv = (1..grid.n_steps())
        .filter(|&j| grid.node(j) >= start)
        .map(|j| (deriv[j] - rhs.g[j]).abs())
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
    Ok(Residual { integral: integral_res, frac_deriv, clamp_warnings: rhs.clamps })
}
