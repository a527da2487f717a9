//! Existence certificates and the dependence-on-data bound.
//!
//! With ψ(r) = psi_slope·r and `B = T^α/Γ(α+1)·sup γ·(1 + ‖β‖₁)`, a radius r is
//! admissible when
//!
//! ```text
//! denom(r) = 1 − L·B·ψ(r) > 0   and   r > F·B·ψ(r) / denom(r).
//! ```
//!
//! For r > 0 this rearranges to `r < (1 − F·B·psi_slope)/(L·B·psi_slope)`, so the
//! admissible radii form an interval starting at 0. The certificate always
//! decides admissibility by evaluating the inequality directly and reports the
//! closed form next to it.

mod dependence;

use std::fmt;

use thiserror::Error;

use crate::model::{ClaimedInterval, HypothesisConstants};
use crate::specfun::{gamma, GammaError};

pub use dependence::{dependence_bound, verify_dependence, DependenceCheck};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertifyError {
    #[error("missing constants: {}", .0.join(", "))]
    MissingConstants(Vec<&'static str>),
    #[error("radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error("{0}")]
    BadInput(String),
    #[error("gamma function: {0}")]
    Gamma(#[from] GammaError),
    #[error("dependence bound undefined: L = {0} must be < 1")]
    DependenceUndefined(f64),
    #[error("{0}")]
    Solve(String),
}

fn require(c: &HypothesisConstants, keys: &[&'static str]) -> Result<Vec<f64>, CertifyError> {
    let missing: Vec<&'static str> = keys.iter().copied().filter(|k| c.get(k).is_none()).collect();
    if !missing.is_empty() {
        return Err(CertifyError::MissingConstants(missing));
    }
    Ok(keys.iter().map(|k| c.get(k).unwrap_or(0.0)).collect())
}

fn check_alpha_t(alpha: f64, t_end: f64) -> Result<(), CertifyError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CertifyError::BadInput(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(CertifyError::BadInput(format!("T must be positive, got {t_end}")));
    }
    Ok(())
}

fn check_radius(r: f64) -> Result<(), CertifyError> {
    if !(r.is_finite() && r > 0.0) {
        return Err(CertifyError::BadRadius(r));
    }
    Ok(())
}

/// T^α / Γ(α+1).
pub fn time_factor(alpha: f64, t_end: f64) -> Result<f64, CertifyError> {
    check_alpha_t(alpha, t_end)?;
    Ok(t_end.powf(alpha) / gamma(alpha + 1.0)?)
}

/// B = T^α/Γ(α+1) · gamma_sup · (1 + beta_l1).
pub fn b_factor(constants: &HypothesisConstants, alpha: f64, t_end: f64) -> Result<f64, CertifyError> {
    let v = require(constants, &["gamma_sup", "beta_l1"])?;
    Ok(time_factor(alpha, t_end)? * v[0] * (1.0 + v[1]))
}

/// An open interval of radii; `high` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusInterval {
    pub low: f64,
    pub high: f64,
}

impl RadiusInterval {
    pub fn contains(&self, r: f64) -> bool {
        r > self.low && r < self.high
    }
}

impl fmt::Display for RadiusInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.high.is_finite() {
            write!(f, "({}, {:.8})", self.low, self.high)
        } else {
            write!(f, "({}, inf)", self.low)
        }
    }
}

/// Direct evaluation of the existence inequality at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundEvaluation {
    pub r: f64,
    pub denom: f64,
    /// Right-hand side F·B·ψ(r)/denom; infinite when denom ≤ 0.
    pub rhs: f64,
    pub admissible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub constants: HypothesisConstants,
    pub alpha: f64,
    pub t_end: f64,
    pub b_factor: f64,
    /// M = B·ψ(r), the bound on the integral operator over the ball of radius r.
    pub m: f64,
    pub r_tested: f64,
    pub denom: f64,
    pub rhs: f64,
    pub admissible: bool,
    /// L·M, the Dhage value; `dhage_ok` is L·M < 1.
    pub l_times_m: f64,
    pub dhage_ok: bool,
    /// Radii with denom > 0: (0, 1/(L·B·psi_slope)), unbounded when the product is 0.
    pub r_interval: RadiusInterval,
    /// Closed-form admissible radii (0, (1 − F·B·psi_slope)/(L·B·psi_slope)); `None` when empty.
    pub admissible_interval: Option<RadiusInterval>,
    /// Direct evaluation agrees with the closed form just inside and just
    /// outside a finite upper endpoint; `None` when there is no finite endpoint.
    pub endpoint_check: Option<bool>,
}

/// Relative offset used to probe either side of a closed-form endpoint.
pub const ENDPOINT_PROBE: f64 = 1e-9;

impl Certificate {
    fn params(&self) -> (f64, f64, f64) {
        let l = self.constants.l.unwrap_or(0.0);
        let f = self.constants.f_sup.unwrap_or(0.0);
        let p = self.constants.psi_slope.unwrap_or(0.0);
        (l, f, p)
    }

    /// Evaluates the inequality at `r` with the certificate's constants.
    pub fn evaluate(&self, r: f64) -> BoundEvaluation {
        let (l, f, p) = self.params();
        let bp = self.b_factor * p * r;
        let denom = 1.0 - l * bp;
        let rhs = if denom > 0.0 { f * bp / denom } else { f64::INFINITY };
        BoundEvaluation { r, denom, rhs, admissible: r > 0.0 && denom > 0.0 && r > rhs }
    }
}

/// Evaluates the existence bound at radius `r`.
pub fn existence_bound(
    constants: &HypothesisConstants,
    alpha: f64,
    t_end: f64,
    r: f64,
) -> Result<Certificate, CertifyError> {
    let v = require(constants, &["L", "F", "beta_l1", "gamma_sup", "psi_slope"])?;
    check_radius(r)?;
    let (l, f, p) = (v[0], v[1], v[4]);
    let b = b_factor(constants, alpha, t_end)?;
    let lbp = l * b * p;
    let fbp = f * b * p;
    let r_interval = RadiusInterval { low: 0.0, high: if lbp > 0.0 { 1.0 / lbp } else { f64::INFINITY } };
    let admissible_interval = if fbp >= 1.0 {
        None
    } else {
        Some(RadiusInterval { low: 0.0, high: if lbp > 0.0 { (1.0 - fbp) / lbp } else { f64::INFINITY } })
    };
    let m = b * p * r;
    let l_times_m = l * m;
    let mut cert = Certificate {
        constants: *constants,
        alpha,
        t_end,
        b_factor: b,
        m,
        r_tested: r,
        denom: 0.0,
        rhs: 0.0,
        admissible: false,
        l_times_m,
        dhage_ok: l_times_m < 1.0,
        r_interval,
        admissible_interval,
        endpoint_check: None,
    };
    let at = cert.evaluate(r);
    cert.denom = at.denom;
    cert.rhs = at.rhs;
    cert.admissible = at.admissible;
    if let Some(iv) = admissible_interval.filter(|iv| iv.high.is_finite()) {
        let eps = ENDPOINT_PROBE * iv.high.max(1.0);
        cert.endpoint_check = Some(cert.evaluate(iv.high - eps).admissible && !cert.evaluate(iv.high + eps).admissible);
    }
    Ok(cert)
}

/// M = B·ψ(r) and whether L·M < 1.
pub fn dhage_condition(
    constants: &HypothesisConstants,
    alpha: f64,
    t_end: f64,
    r: f64,
) -> Result<(f64, bool), CertifyError> {
    let v = require(constants, &["L", "psi_slope"])?;
    if !(r.is_finite() && r >= 0.0) {
        return Err(CertifyError::BadRadius(r));
    }
    let m = b_factor(constants, alpha, t_end)? * v[1] * r;
    Ok((m, v[0] * m < 1.0))
}

/// Comparison of a claimed admissible interval with direct evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ClaimAudit {
    pub claimed: ClaimedInterval,
    /// Direct evaluation at each claimed endpoint.
    pub low_admissible: Option<bool>,
    pub high_admissible: Option<bool>,
    /// The claim is not the computed interval (endpoints differ by more than 0.1 %).
    pub discrepancy: bool,
    pub notes: Vec<String>,
}

fn close(a: f64, b: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= 1e-3 * a.abs().max(b.abs()).max(1e-12)
}

/// Audits `claimed` against the certificate's intervals.
pub fn audit_claim(cert: &Certificate, claimed: &ClaimedInterval) -> ClaimAudit {
    let mut notes = Vec::new();
    let mut discrepancy = false;
    let computed = cert.admissible_interval;
    let (l, f, p) = cert.params();
    let b = cert.b_factor;
    match computed {
        Some(iv) => notes.push(format!("direct evaluation admits r in {iv}")),
        None => notes.push("direct evaluation admits no radius".into()),
    }
    let eval = |r: Option<f64>| r.filter(|v| *v > 0.0).map(|v| cert.evaluate(v).admissible);
    let low_admissible = eval(claimed.low);
    let high_admissible = eval(claimed.high);
    if let Some(lo) = claimed.low {
        let expected = computed.map(|iv| iv.low);
        if expected.is_none_or(|e| !close(lo, e) && lo.abs() > 1e-12) {
            discrepancy = true;
            if l * b * p > 0.0 {
                notes.push(format!(
                    "claimed r_low = {lo} differs from (1 - F*B*psi_slope)/(L*B*psi_slope) = {:.8}, which is the upper end of the admissible radii, not a lower bound",
                    (1.0 - f * b * p) / (l * b * p)
                ));
            } else {
                notes.push(format!("claimed r_low = {lo} differs from the computed lower end 0"));
            }
        }
    }
    if let Some(hi) = claimed.high {
        if close(hi, cert.r_interval.high) || (hi - cert.r_interval.high).abs() <= 0.01 {
            notes.push(format!(
                "claimed r_high = {hi} reproduces the denominator root 1/(L*B*psi_slope) = {:.8}",
                cert.r_interval.high
            ));
        }
        if computed.is_none_or(|iv| !close(hi, iv.high)) {
            discrepancy = true;
            notes.push(format!(
                "claimed r_high = {hi} is not the admissible upper end {}",
                computed.map_or("(empty)".to_string(), |iv| format!("{:.8}", iv.high))
            ));
        }
    }
    for (name, r, ok) in [("r_low", claimed.low, low_admissible), ("r_high", claimed.high, high_admissible)] {
        if let (Some(r), Some(false)) = (r, ok) {
            let e = cert.evaluate(r);
            notes.push(format!("{name} = {r} is rejected by direct evaluation (denom = {:.6e}, rhs = {:.6e})", e.denom, e.rhs));
        }
    }
    ClaimAudit { claimed: *claimed, low_admissible, high_admissible, discrepancy, notes }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (l, fs, p) = self.params();
        writeln!(f, "constants: L = {l}, F = {fs}, beta_l1 = {}, gamma_sup = {}, psi_slope = {p}",
            self.constants.beta_l1.unwrap_or(f64::NAN), self.constants.gamma_sup.unwrap_or(f64::NAN))?;
        writeln!(f, "alpha = {}, T = {}", self.alpha, self.t_end)?;
        writeln!(f, "B_factor = {:.10}", self.b_factor)?;
        writeln!(f, "r = {}", self.r_tested)?;
        writeln!(f, "denom = {:.10}", self.denom)?;
        writeln!(f, "rhs = {:.10}", self.rhs)?;
        writeln!(f, "admissible = {}", self.admissible)?;
        writeln!(f, "M = {:.10}", self.m)?;
        writeln!(f, "L*M = {:.10}", self.l_times_m)?;
        writeln!(f, "dhage_ok = {}", self.dhage_ok)?;
        writeln!(f, "r_interval (denom > 0) = {}", self.r_interval)?;
        match self.admissible_interval {
            Some(iv) => writeln!(f, "admissible_interval = {iv}")?,
            None => writeln!(f, "admissible_interval = empty")?,
        }
        match self.endpoint_check {
            Some(ok) => write!(f, "endpoint_check = {}", if ok { "consistent" } else { "INCONSISTENT" }),
            None => write!(f, "endpoint_check = n/a"),
        }
    }
}
