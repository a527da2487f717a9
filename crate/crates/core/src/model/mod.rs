//! Problem data: the equation's ingredients, the hypothesis constants, and the
//! sampled trajectory on `[-δ, T]` together with its delayed-state windows.

mod estimate;
mod problem_file;
mod trajectory;

use thiserror::Error;

use crate::expr::{EvalEnv, ExprAst, ExprError};

pub use estimate::{estimate_constants, ConstantsEstimate, EstimateError, SampledSegment};
pub use problem_file::{
    constant_value, parse_problem, parse_sections, render_problem, spec_from_sections, Section, SectionEntry,
};
pub use trajectory::{
    history_offsets, read_trajectory_csv, window, write_pair_csv, write_trajectory_csv, StateWindow, Trajectory,
    TrajectoryError,
};

/// |φ(0)| above this triggers the compatibility warning.
pub const PHI_ZERO_TOL: f64 = 1e-12;

/// Constants of the standing hypotheses. A `None` entry is unknown; certificate
/// operations report which ones they need.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HypothesisConstants {
    /// Lipschitz constant of f in x.
    pub l: Option<f64>,
    /// sup_t |f(t, 0)|.
    pub f_sup: Option<f64>,
    /// L¹ norm of the bound β on |k|.
    pub beta_l1: Option<f64>,
    /// sup_t γ(t).
    pub gamma_sup: Option<f64>,
    /// Contraction constant of ψ, with ψ(r) = psi_slope·r.
    pub psi_slope: Option<f64>,
    /// Lipschitz constant of k in the segment.
    pub l_k: Option<f64>,
    /// Lipschitz constants of g in the segment and in the integral argument.
    pub l1: Option<f64>,
    pub l2: Option<f64>,
}

/// Names as they appear in the `[constants]` section.
pub const CONSTANT_KEYS: [&str; 8] = ["L", "F", "beta_l1", "gamma_sup", "psi_slope", "L_k", "L1", "L2"];

impl HypothesisConstants {
    pub fn get(&self, key: &str) -> Option<f64> {
        self.slot(key).and_then(|i| self.values()[i])
    }

    pub fn set(&mut self, key: &str, value: f64) -> bool {
        let slot = match key {
            "L" => &mut self.l,
            "F" => &mut self.f_sup,
            "beta_l1" => &mut self.beta_l1,
            "gamma_sup" => &mut self.gamma_sup,
            "psi_slope" => &mut self.psi_slope,
            "L_k" => &mut self.l_k,
            "L1" => &mut self.l1,
            "L2" => &mut self.l2,
            _ => return false,
        };
        *slot = Some(value);
        true
    }

    fn slot(&self, key: &str) -> Option<usize> {
        CONSTANT_KEYS.iter().position(|k| *k == key)
    }

    pub fn values(&self) -> [Option<f64>; 8] {
        [
            self.l,
            self.f_sup,
            self.beta_l1,
            self.gamma_sup,
            self.psi_slope,
            self.l_k,
            self.l1,
            self.l2,
        ]
    }

    pub fn is_empty(&self) -> bool {
        self.values().iter().all(Option::is_none)
    }

    /// Entries of `self` win; gaps are filled from `other`.
    pub fn or(&self, other: &HypothesisConstants) -> HypothesisConstants {
        HypothesisConstants {
            l: self.l.or(other.l),
            f_sup: self.f_sup.or(other.f_sup),
            beta_l1: self.beta_l1.or(other.beta_l1),
            gamma_sup: self.gamma_sup.or(other.gamma_sup),
            psi_slope: self.psi_slope.or(other.psi_slope),
            l_k: self.l_k.or(other.l_k),
            l1: self.l1.or(other.l1),
            l2: self.l2.or(other.l2),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (key, value) in CONSTANT_KEYS.iter().zip(self.values()) {
            if let Some(v) = value {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(format!("constant {key} must be finite and nonnegative, got {v}"));
                }
            }
        }
        if let Some(p) = self.psi_slope {
            if p >= 1.0 {
                return Err(format!("psi_slope must be < 1 (contraction), got {p}"));
            }
        }
        Ok(())
    }
}

/// An interval of radii claimed admissible for a problem, kept so that the
/// certificate can audit it against direct evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClaimedInterval {
    pub low: Option<f64>,
    pub high: Option<f64>,
}

/// The complete problem: order, horizon, delay, and the expressions for
/// f, g, k, φ plus the optional profiles γ, β, ψ.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub alpha: f64,
    pub t_end: f64,
    pub delta: f64,
    pub f: ExprAst,
    pub g: ExprAst,
    pub k: ExprAst,
    pub phi: ExprAst,
    pub gamma_fn: Option<ExprAst>,
    pub beta_fn: Option<ExprAst>,
    pub psi: Option<ExprAst>,
    /// Declared in the file; empty when the section is absent.
    pub constants: HypothesisConstants,
    pub claimed: Option<ClaimedInterval>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("line {line}: in `{key}`: {source}")]
    Expr {
        line: usize,
        key: String,
        #[source]
        source: ExprError,
    },
    #[error("invalid problem: {0}")]
    Invalid(String),
}

impl ProblemSpec {
    /// Checks numeric ranges, constants, and the f ≠ 0 requirement on a probe grid;
    /// refreshes `warnings`.
    pub fn validate(&mut self) -> Result<(), ProblemError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(ProblemError::Invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(ProblemError::Invalid(format!("T must be positive, got {}", self.t_end)));
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(ProblemError::Invalid(format!("delta must be nonnegative, got {}", self.delta)));
        }
        self.constants.validate().map_err(ProblemError::Invalid)?;
        self.probe_f()?;
        self.warnings.clear();
        let phi0 = self
            .phi
            .eval(&EvalEnv::new().theta(0.0))
            .map_err(|e| ProblemError::Invalid(format!("phi(0): {e}")))?;
        if phi0.abs() > PHI_ZERO_TOL {
            self.warnings.push(format!(
                "phi(0) = {phi0} is nonzero while the integral equation forces x(0) = 0; \
                 the trajectory will jump at t = 0"
            ));
        }
        Ok(())
    }

    fn probe_f(&self) -> Result<(), ProblemError> {
        const T_PROBES: usize = 8;
        const X_PROBES: [f64; 7] = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0];
        for i in 0..=T_PROBES {
            let t = self.t_end * i as f64 / T_PROBES as f64;
            for x in X_PROBES {
                let v = self
                    .f
                    .eval(&EvalEnv::new().t(t).x(x))
                    .map_err(|e| ProblemError::Invalid(format!("f({t}, {x}): {e}")))?;
                if v.abs() <= 1e-14 {
                    return Err(ProblemError::Invalid(format!(
                        "f must not vanish, but f({t}, {x}) = {v}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn phi_at(&self, theta: f64) -> Result<f64, crate::expr::EvalError> {
        self.phi.eval(&EvalEnv::new().theta(theta))
    }
}
