use crate::expr::{ExprAst, Role};
use crate::model::{estimate_constants, HypothesisConstants, ProblemSpec};
use crate::solver::{solve, SolveConfig, SolveReport};

use super::{require, time_factor, CertifyError};

const DEPENDENCE_KEYS: [&str; 5] = ["L", "F", "L1", "L2", "L_k"];

/// (L·‖y‖ + F)(L1 + L2·L_k·T) · T^α/Γ(α+1) / (1 − L) · ‖φ₁ − φ₂‖.
pub fn dependence_bound(
    constants: &HypothesisConstants,
    alpha: f64,
    t_end: f64,
    y_norm: f64,
    phi_gap: f64,
) -> Result<f64, CertifyError> {
    let v = require(constants, &DEPENDENCE_KEYS)?;
    let (l, f, l1, l2, lk) = (v[0], v[1], v[2], v[3], v[4]);
    if l >= 1.0 {
        return Err(CertifyError::DependenceUndefined(l));
    }
    if !(y_norm >= 0.0 && phi_gap >= 0.0) {
        return Err(CertifyError::BadInput(format!("norms must be nonnegative, got {y_norm} and {phi_gap}")));
    }
    Ok((l * y_norm + f) * (l1 + l2 * lk * t_end) * time_factor(alpha, t_end)? / (1.0 - l) * phi_gap)
}

#[derive(Debug, Clone)]
pub struct DependenceCheck {
    /// Solutions for φ and φ₂.
    pub first: SolveReport,
    pub second: SolveReport,
    pub phi_gap: f64,
    pub y_norm: f64,
    /// ‖x − y‖∞ over [0, T]; `None` unless both solves converged.
    pub empirical: Option<f64>,
    pub bound: f64,
    pub satisfied: Option<bool>,
    /// The constants were estimated by sampling rather than declared.
    pub constants_measured: bool,
    pub constants: HypothesisConstants,
    /// Measured constants yet the bound failed: the estimates were too low.
    pub estimation_failure: bool,
}

/// Samples at the history nodes plus tenfold oversampling of [-δ, 0].
fn phi_gap(spec: &ProblemSpec, phi2: &ExprAst, n_steps: usize) -> Result<f64, CertifyError> {
    let h = spec.t_end / n_steps as f64;
    let count = if spec.delta > 0.0 { ((spec.delta / h).ceil() as usize * 10).max(10) } else { 0 };
    let mut gap: f64 = 0.0;
    let eval = |e: &ExprAst, theta: f64| {
        e.eval(&crate::expr::EvalEnv::new().theta(theta)).map_err(|err| CertifyError::BadInput(format!("phi at {theta}: {err}")))
    };
    for i in 0..=count {
        let theta = if count == 0 { 0.0 } else { -spec.delta + spec.delta * i as f64 / count as f64 };
        gap = gap.max((eval(&spec.phi, theta)? - eval(phi2, theta)?).abs());
    }
    Ok(gap)
}

/// Solves with φ and with `phi2` and compares ‖x − y‖∞ with [`dependence_bound`].
///
/// Declared constants are used when all of L, F, L1, L2, L_k are present;
/// otherwise the missing ones are estimated on a box covering both solutions.
pub fn verify_dependence(spec: &ProblemSpec, phi2: &ExprAst, cfg: &SolveConfig) -> Result<DependenceCheck, CertifyError> {
    if phi2.role() != Role::Phi {
        return Err(CertifyError::BadInput(format!("second history must be a phi expression, got role {}", phi2.role().name())));
    }
    if let Some(l) = spec.constants.l.filter(|l| *l >= 1.0) {
        return Err(CertifyError::DependenceUndefined(l));
    }
    let mut spec2 = spec.clone();
    spec2.phi = phi2.clone();
    spec2.validate().map_err(|e| CertifyError::BadInput(e.to_string()))?;
    let (first, second) = rayon::join(|| solve(spec, cfg), || solve(&spec2, cfg));
    let first = first.map_err(|e| CertifyError::Solve(e.to_string()))?;
    let second = second.map_err(|e| CertifyError::Solve(e.to_string()))?;
    let gap = phi_gap(spec, phi2, cfg.n_steps)?;
    let y_norm = second.sup_norm();

    let declared = spec.constants;
    let constants_measured = DEPENDENCE_KEYS.iter().any(|k| declared.get(k).is_none());
    let constants = if constants_measured {
        let radius = [first.sup_norm(), y_norm, first.trajectory.history().iter().fold(0.0f64, |m, v| m.max(v.abs())) + gap]
            .into_iter()
            .fold(1e-3f64, f64::max);
        let est = estimate_constants(spec, 2000, radius).map_err(|e| CertifyError::BadInput(e.to_string()))?;
        declared.or(&est.constants)
    } else {
        declared
    };
    let bound = dependence_bound(&constants, spec.alpha, spec.t_end, y_norm, gap)?;

    let (empirical, satisfied) = if first.status.is_converged() && second.status.is_converged() {
        let e = first
            .trajectory
            .main()
            .iter()
            .zip(second.trajectory.main())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        (Some(e), Some(e <= bound + 10.0 * cfg.tol))
    } else {
        (None, None)
    };
    Ok(DependenceCheck {
        first,
        second,
        phi_gap: gap,
        y_norm,
        empirical,
        bound,
        satisfied,
        constants_measured,
        constants,
        estimation_failure: constants_measured && satisfied == Some(false),
    })
}
