//! Riemann–Liouville fractional integral on uniform grids.
//!
//! `I^α u(t) = 1/Γ(α) ∫₀ᵗ (t-s)^(α-1) u(s) ds` is discretized by product
//! integration: the smooth factor `u` is replaced by a piecewise-constant
//! (`Rect`, left endpoint) or piecewise-linear (`Trap`) interpolant and the
//! kernel moments over each subinterval are integrated exactly. On a uniform
//! grid the weights depend only on `n - j`, so only the Toeplitz coefficients
//! are stored.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::specfun::{gamma, GammaError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FracError {
    #[error("order alpha = {0} is outside the admissible range")]
    AlphaOutOfRange(f64),
    #[error("grid must have at least one step")]
    EmptyGrid,
    #[error("horizon must be positive and finite, got {0}")]
    BadHorizon(f64),
    #[error("expected {expected} samples, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Gamma(#[from] GammaError),
}

/// Uniform grid `t_j = j·h` on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    t_end: f64,
    n_steps: usize,
}

impl Grid {
    pub fn new(t_end: f64, n_steps: usize) -> Result<Self, FracError> {
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(FracError::BadHorizon(t_end));
        }
        if n_steps == 0 {
            return Err(FracError::EmptyGrid);
        }
        Ok(Self { t_end, n_steps })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        if j == self.n_steps {
            self.t_end
        } else {
            j as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_steps).map(|j| self.node(j))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Rect,
    Trap,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Rect => "rect",
            Scheme::Trap => "trap",
        })
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rect" => Ok(Scheme::Rect),
            "trap" => Ok(Scheme::Trap),
            other => Err(format!("unknown scheme `{other}` (expected rect or trap)")),
        }
    }
}

/// Σ_{k ≥ k0, k ≡ k0 mod step} C(p, k) u^k for |u| ≤ 1/4.
fn binomial_tail(p: f64, u: f64, k0: usize, step: usize) -> f64 {
    let mut coeff = 1.0;
    let mut power = 1.0;
    for k in 0..k0 {
        coeff *= (p - k as f64) / (k + 1) as f64;
        power *= u;
    }
    let mut sum = 0.0;
    let mut k = k0;
    loop {
        let term = coeff * power;
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() || k > 200 {
            return sum;
        }
        for _ in 0..step {
            coeff *= (p - k as f64) / (k + 1) as f64;
            power *= u;
            k += 1;
        }
    }
}

/// m^α - (m-1)^α without cancellation.
fn first_difference(alpha: f64, m: usize) -> f64 {
    if m == 1 {
        return 1.0;
    }
    let m = m as f64;
    -m.powf(alpha) * (alpha * (-1.0 / m).ln_1p()).exp_m1()
}

/// (m+1)^p - 2 m^p + (m-1)^p, p = α + 1.
fn second_difference(p: f64, m: usize) -> f64 {
    let mf = m as f64;
    if m < 4 {
        return (mf + 1.0).powf(p) - 2.0 * mf.powf(p) + (mf - 1.0).powf(p);
    }
    2.0 * mf.powf(p) * binomial_tail(p, 1.0 / mf, 2, 2)
}

/// (n-1)^p - (n-1-α) n^α, the trapezoid weight at the left endpoint.
fn left_endpoint(alpha: f64, n: usize) -> f64 {
    let p = alpha + 1.0;
    let nf = n as f64;
    if n < 4 {
        return (nf - 1.0).powf(p) - (nf - 1.0 - alpha) * nf.powf(alpha);
    }
    nf.powf(p) * binomial_tail(p, -1.0 / nf, 2, 1)
}

/// Product-integration weights for one (α, grid, scheme).
#[derive(Debug, Clone)]
pub struct QuadWeights {
    alpha: f64,
    scheme: Scheme,
    grid: Grid,
    scale: f64,
    // rect: index m = n - j ≥ 1; trap: interior second differences, index m = n - j
    toeplitz: Vec<f64>,
    // trap only: weight of j = 0 for target n
    left: Vec<f64>,
}

/// Builds the weight table. `alpha` must lie in `(0, 1]`.
pub fn make_weights(alpha: f64, grid: Grid, scheme: Scheme) -> Result<QuadWeights, FracError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(FracError::AlphaOutOfRange(alpha));
    }
    let n = grid.n_steps();
    let h_alpha = grid.step().powf(alpha);
    let (scale, toeplitz, left) = match scheme {
        Scheme::Rect => {
            let scale = h_alpha / gamma(alpha + 1.0)?;
            let diffs = (0..=n)
                .map(|m| if m == 0 { 0.0 } else { first_difference(alpha, m) })
                .collect();
            (scale, diffs, Vec::new())
        }
        Scheme::Trap => {
            let scale = h_alpha / gamma(alpha + 2.0)?;
            let p = alpha + 1.0;
            let seconds = (0..=n)
                .map(|m| if m == 0 { 1.0 } else { second_difference(p, m) })
                .collect();
            let left = (0..=n)
                .map(|k| if k == 0 { 0.0 } else { left_endpoint(alpha, k) })
                .collect();
            (scale, seconds, left)
        }
    };
    Ok(QuadWeights {
        alpha,
        scheme,
        grid,
        scale,
        toeplitz,
        left,
    })
}

impl QuadWeights {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Weight w_{n,j} of sample j in the value at node n (zero for j > n).
    pub fn weight(&self, n: usize, j: usize) -> f64 {
        if n == 0 || j > n {
            return 0.0;
        }
        match self.scheme {
            Scheme::Rect if j == n => 0.0,
            Scheme::Rect => self.scale * self.toeplitz[n - j],
            Scheme::Trap if j == 0 => self.scale * self.left[n],
            Scheme::Trap if j == n => self.scale,
            Scheme::Trap => self.scale * self.toeplitz[n - j],
        }
    }

    /// Weight attached to the newest sample (j = n); zero for the rectangle rule.
    pub fn diagonal(&self) -> f64 {
        match self.scheme {
            Scheme::Rect => 0.0,
            Scheme::Trap => self.scale,
        }
    }

    pub fn row(&self, n: usize) -> Vec<f64> {
        (0..=n).map(|j| self.weight(n, j)).collect()
    }

    /// Σ_{j < n} w_{n,j} u_j: the part of row n that excludes the diagonal.
    pub fn history_sum(&self, n: usize, values: &[f64]) -> f64 {
        if n == 0 {
            return 0.0;
        }
        match self.scheme {
            Scheme::Rect => {
                let s: f64 = (0..n).map(|j| self.toeplitz[n - j] * values[j]).sum();
                self.scale * s
            }
            Scheme::Trap => {
                let interior: f64 = (1..n).map(|j| self.toeplitz[n - j] * values[j]).sum();
                self.scale * (self.left[n] * values[0] + interior)
            }
        }
    }

    /// (I^α u)(t_n) for every node; the entry at t_0 is 0.
    pub fn apply(&self, values: &[f64]) -> Result<Vec<f64>, FracError> {
        let expected = self.grid.len();
        if values.len() != expected {
            return Err(FracError::LengthMismatch {
                expected,
                found: values.len(),
            });
        }
        let diag = self.diagonal();
        Ok((0..expected)
            .into_par_iter()
            .map(|n| {
                if n == 0 {
                    0.0
                } else {
                    self.history_sum(n, values) + diag * values[n]
                }
            })
            .collect())
    }
}

/// Applies precomputed weights to node samples.
pub fn frac_integral(values: &[f64], weights: &QuadWeights) -> Result<Vec<f64>, FracError> {
    weights.apply(values)
}

/// d/dt ∘ I^(1-α) on node samples: trapezoid product integration followed by
/// centered differences (second-order one-sided at the ends).
pub fn frac_derivative(values: &[f64], alpha: f64, grid: Grid) -> Result<Vec<f64>, FracError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(FracError::AlphaOutOfRange(alpha));
    }
    let weights = make_weights(1.0 - alpha, grid, Scheme::Trap)?;
    let integral = weights.apply(values)?;
    let h = grid.step();
    let n = grid.n_steps();
    let mut out = vec![0.0; n + 1];
    if n == 1 {
        let d = (integral[1] - integral[0]) / h;
        return Ok(vec![d, d]);
    }
    out[0] = (-3.0 * integral[0] + 4.0 * integral[1] - integral[2]) / (2.0 * h);
    out[n] = (3.0 * integral[n] - 4.0 * integral[n - 1] + integral[n - 2]) / (2.0 * h);
    for j in 1..n {
        out[j] = (integral[j + 1] - integral[j - 1]) / (2.0 * h);
    }
    Ok(out)
}

/// Running composite trapezoid ∫₀^{t_j} u on a uniform grid.
pub fn cumulative_trapezoid(values: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for (j, v) in values.iter().enumerate() {
        if j > 0 {
            acc += 0.5 * h * (values[j - 1] + v);
        }
        out.push(acc);
    }
    out
}
