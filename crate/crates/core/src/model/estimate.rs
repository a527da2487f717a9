//! Sampling estimators for the hypothesis constants.
//!
//! Every estimate is a supremum over a finite probe set and therefore a lower
//! bound on the true constant. The probe set is a fixed structured part plus
//! `samples` pseudo-random draws from a fixed seed, so a larger sample count
//! always probes a superset and never lowers an estimate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::expr::{EvalEnv, EvalError, ExprAst, Segment};
use crate::fracint::cumulative_trapezoid;

use super::{HypothesisConstants, ProblemSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("sampling radius must be positive and finite, got {0}")]
    DegenerateRadius(f64),
    #[error("evaluating {role} at t = {t}: {source}")]
    Eval {
        role: &'static str,
        t: f64,
        #[source]
        source: EvalError,
    },
}

/// Base time probes on [0, T] before oversampling.
const BASE_PROBES: usize = 64;
const OVERSAMPLE: usize = 10;
const SEGMENT_KNOTS: usize = 9;
const SEED: u64 = 0x5eed_f12d;

/// A piecewise-linear test segment on [-δ, 0] with uniformly spaced knots.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSegment {
    delta: f64,
    values: Vec<f64>,
}

impl SampledSegment {
    pub fn new(delta: f64, values: Vec<f64>) -> Self {
        assert!(!values.is_empty());
        Self { delta, values }
    }

    pub fn constant(delta: f64, c: f64) -> Self {
        Self::new(delta, vec![c; SEGMENT_KNOTS])
    }

    /// sup |self - other|, exact for segments on the same knots.
    pub fn distance(&self, other: &SampledSegment) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    fn shifted(&self, c: f64) -> SampledSegment {
        Self::new(self.delta, self.values.iter().map(|v| v + c).collect())
    }
}

impl Segment for SampledSegment {
    fn xat(&self, theta: f64) -> f64 {
        let k = self.values.len();
        if k == 1 || self.delta <= 0.0 {
            return self.values[k - 1];
        }
        let pos = (theta.clamp(-self.delta, 0.0) + self.delta) / self.delta * (k - 1) as f64;
        let i = (pos.floor() as usize).min(k - 2);
        let w = pos - i as f64;
        self.values[i] + w * (self.values[i + 1] - self.values[i])
    }

    fn xnorm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Estimated constants plus the diagnostics gathered on the way.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsEstimate {
    pub constants: HypothesisConstants,
    pub samples: usize,
    pub radius: f64,
    /// sup |g| / (γ(t)·ψ(‖x‖ + |y|)) over the probes when γ and ψ are declared;
    /// above 1 means the declared profiles do not bound g.
    pub growth_ratio: Option<f64>,
    /// sup |k| / (β(t)·‖x‖) when β is declared.
    pub kernel_ratio: Option<f64>,
}

struct Probe {
    t: f64,
    x: (f64, f64),
    y: (f64, f64),
    seg: (SampledSegment, SampledSegment),
}

fn quotient(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num.abs() / den
    } else {
        0.0
    }
}

/// Lower-bound estimates of the hypothesis constants for `spec`, probing states
/// with amplitude up to `radius`.
///
/// γ and ψ cannot be separated from samples of g alone. A declared `gamma`
/// profile gives `gamma_sup` directly and a declared `psi` gives `psi_slope`;
/// with only one of them (ψ may also come from a declared `psi_slope`) the
/// other is recovered as the tightest envelope of |g|. `beta_l1` integrates
/// the tightest β(t) with |k| ≤ β(t)·‖x‖.
pub fn estimate_constants(spec: &ProblemSpec, samples: usize, radius: f64) -> Result<ConstantsEstimate, EstimateError> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(EstimateError::DegenerateRadius(radius));
    }
    let n_probe = BASE_PROBES * OVERSAMPLE;
    let times: Vec<f64> = (0..=n_probe).map(|i| spec.t_end * i as f64 / n_probe as f64).collect();
    let delta = spec.delta;

    let eval = |ast: &ExprAst, role: &'static str, env: EvalEnv<'_>| -> Result<f64, EstimateError> {
        ast.eval(&env).map_err(|source| EstimateError::Eval { role, t: env.t.unwrap_or(f64::NAN), source })
    };

    // structured probes at every time node, then random ones
    let mut probes = Vec::new();
    for (i, &t) in times.iter().enumerate() {
        let c = radius * (0.5 + 0.5 * ((i % 3) as f64) / 2.0);
        let base = SampledSegment::constant(delta, c);
        probes.push(Probe {
            t,
            x: (0.5 * radius, 0.25 * radius),
            y: (0.5 * radius, 0.25 * radius),
            seg: (base.clone(), base.shifted(-0.5 * c)),
        });
        probes.push(Probe {
            t,
            x: (-0.5 * radius, -0.75 * radius),
            y: (-0.5 * radius, -0.25 * radius),
            seg: (SampledSegment::constant(delta, -c), SampledSegment::constant(delta, -0.25 * c)),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for _ in 0..samples {
        let t = times[rng.gen_range(0..times.len())];
        let x = (rng.gen_range(-radius..=radius), rng.gen_range(-radius..=radius));
        let y = (rng.gen_range(-radius..=radius), rng.gen_range(-radius..=radius));
        let a: Vec<f64> = (0..SEGMENT_KNOTS).map(|_| rng.gen_range(-radius..=radius)).collect();
        let b: Vec<f64> = (0..SEGMENT_KNOTS).map(|_| rng.gen_range(-radius..=radius)).collect();
        let shift = rng.gen_range(-0.25 * radius..=0.25 * radius);
        let use_shift: bool = rng.gen();
        let first = SampledSegment::new(delta, a);
        let second = if use_shift { first.shifted(shift) } else { SampledSegment::new(delta, b) };
        probes.push(Probe { t, x, y, seg: (first, second) });
    }

    let mut f_sup: f64 = 0.0;
    for &t in &times {
        f_sup = f_sup.max(eval(&spec.f, "f", EvalEnv::new().t(t).x(0.0))?.abs());
    }

    let mut psi_slope = spec.constants.psi_slope;
    if let Some(psi) = &spec.psi {
        let span = 2.0 * radius * (1.0 + spec.t_end);
        let pts: Vec<f64> = (0..=n_probe).map(|i| span * i as f64 / n_probe as f64).collect();
        let vals = pts.iter().map(|&r| eval(psi, "psi", EvalEnv::new().r(r))).collect::<Result<Vec<_>, _>>()?;
        let mut slope: f64 = 0.0;
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len().min(i + 8) {
                slope = slope.max(quotient(vals[j] - vals[i], pts[j] - pts[i]));
            }
        }
        psi_slope = Some(slope);
    }
    let psi_value = |s: f64| -> Result<Option<f64>, EstimateError> {
        match (&spec.psi, psi_slope) {
            (Some(psi), _) => Ok(Some(eval(psi, "psi", EvalEnv::new().r(s))?)),
            (None, Some(p)) => Ok(Some(p * s)),
            (None, None) => Ok(None),
        }
    };

    let gamma_at = |t: f64| spec.gamma_fn.as_ref().map(|g| eval(g, "gamma", EvalEnv::new().t(t))).transpose();
    let beta_at = |t: f64| spec.beta_fn.as_ref().map(|b| eval(b, "beta", EvalEnv::new().t(t))).transpose();

    let mut gamma_sup = None;
    if spec.gamma_fn.is_some() {
        let mut sup: f64 = 0.0;
        for &t in &times {
            sup = sup.max(gamma_at(t)?.unwrap_or(0.0));
        }
        gamma_sup = Some(sup);
    }

    let mut l: f64 = 0.0;
    let mut l_k: f64 = 0.0;
    let mut l1: f64 = 0.0;
    let mut l2: f64 = 0.0;
    let mut envelope: f64 = 0.0;
    let mut growth_ratio: Option<f64> = None;
    let mut kernel_ratio: Option<f64> = None;
    let mut beta_profile = vec![0.0f64; times.len()];

    for p in &probes {
        let t = p.t;
        let (s1, s2) = (&p.seg.0, &p.seg.1);
        let f1 = eval(&spec.f, "f", EvalEnv::new().t(t).x(p.x.0))?;
        let f2 = eval(&spec.f, "f", EvalEnv::new().t(t).x(p.x.1))?;
        l = l.max(quotient(f1 - f2, (p.x.0 - p.x.1).abs()));

        let k1 = eval(&spec.k, "k", EvalEnv::new().t(t).segment(s1))?;
        let k2 = eval(&spec.k, "k", EvalEnv::new().t(t).segment(s2))?;
        let dist = s1.distance(s2);
        l_k = l_k.max(quotient(k1 - k2, dist));
        let idx = ((t / spec.t_end) * n_probe as f64).round() as usize;
        for (kv, s) in [(k1, s1), (k2, s2)] {
            let r = quotient(kv, s.xnorm());
            beta_profile[idx] = beta_profile[idx].max(r);
            if let Some(b) = beta_at(t)? {
                let denom = b * s.xnorm();
                if denom > 0.0 {
                    kernel_ratio = Some(kernel_ratio.unwrap_or(0.0).max(kv.abs() / denom));
                }
            }
        }

        let g11 = eval(&spec.g, "g", EvalEnv::new().t(t).y(p.y.0).segment(s1))?;
        let g21 = eval(&spec.g, "g", EvalEnv::new().t(t).y(p.y.0).segment(s2))?;
        let g12 = eval(&spec.g, "g", EvalEnv::new().t(t).y(p.y.1).segment(s1))?;
        l1 = l1.max(quotient(g11 - g21, dist));
        l2 = l2.max(quotient(g11 - g12, (p.y.0 - p.y.1).abs()));

        for (gv, s, y) in [(g11, s1, p.y.0), (g21, s2, p.y.0), (g12, s1, p.y.1)] {
            let arg = s.xnorm() + y.abs();
            if let Some(psi) = psi_value(arg)? {
                if gamma_sup.is_none() {
                    envelope = envelope.max(quotient(gv, psi));
                }
                if let Some(gam) = gamma_at(t)? {
                    let denom = gam * psi;
                    if denom > 0.0 {
                        growth_ratio = Some(growth_ratio.unwrap_or(0.0).max(gv.abs() / denom));
                    }
                }
            }
        }
    }
    if gamma_sup.is_none() && psi_slope.is_some() {
        gamma_sup = Some(envelope);
    }
    let h = spec.t_end / n_probe as f64;
    let beta_l1 = *cumulative_trapezoid(&beta_profile, h).last().unwrap_or(&0.0);

    let constants = HypothesisConstants {
        l: Some(l),
        f_sup: Some(f_sup),
        beta_l1: Some(beta_l1),
        gamma_sup,
        psi_slope,
        l_k: Some(l_k),
        l1: Some(l1),
        l2: Some(l2),
    };
    Ok(ConstantsEstimate {
        constants,
        samples,
        radius,
        growth_ratio,
        kernel_ratio,
    })
}
