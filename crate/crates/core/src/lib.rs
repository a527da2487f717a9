//! Solvers, diagnostics and existence certificates for functional
//! integro-differential fractional equations of Riemann–Liouville type
//!
//! ```text
//! d^α/dt^α [ x(t) / f(t, x(t)) ] = g(t, x_t, ∫₀ᵗ k(s, x_s) ds),   t ∈ [0, T]
//! x(t) = φ(t),                                                    t ∈ [-δ, 0]
//! ```
//!
//! solved through the equivalent fixed point
//! `x(t) = f(t, x(t)) · I^α[g(·, x_·, ∫₀^· k)](t)`.

pub mod certify;
pub mod expr;
pub mod fracint;
pub mod model;
pub mod solver;
pub mod specfun;
pub mod sweep;

/// The built-in benchmark problem file: α = 1/2 on [0, π] with a history of
/// length π, φ(θ) = sin θ, and its declared constants.
pub const BENCHMARK: &str = include_str!("../../../problems/bench.frift");
