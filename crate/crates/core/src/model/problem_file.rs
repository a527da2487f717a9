//! Line-oriented problem files.
//!
//! ```text
//! # comment
//! [problem]
//! alpha = 0.5
//! T = pi
//! delta = pi
//! f = 1 + (sin(t)/12)*abs(x)
//! g = t*(xnorm + abs(y))/12
//! k = xat(0)/(4*pi)
//! phi = sin(theta)
//! gamma = t            # optional profiles γ(t), β(t), ψ(r)
//! psi = r/12
//!
//! [constants]          # optional
//! L = 1/12
//! F = 1
//!
//! [claims]             # optional: a radius interval to audit
//! r_low = 0.26
//! r_high = 18.34
//! ```
//!
//! One `key = value` per line. Numeric values may be constant expressions
//! (`pi`, `1/12`). Unknown or duplicate keys and sections are errors.

use std::fmt::Write as _;

use crate::expr::{parse_expr, EvalEnv, ExprAst, Role};

use super::{ClaimedInterval, HypothesisConstants, ProblemError, ProblemSpec, CONSTANT_KEYS};

#[derive(Debug, Clone, PartialEq)]
pub struct SectionEntry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<SectionEntry>,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&SectionEntry> {
        self.entries.iter().find(|e| e.key == key)
    }
}

/// Splits a file into sections; rejects stray, malformed or duplicate lines.
pub fn parse_sections(source: &str) -> Result<Vec<Section>, ProblemError> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in source.lines().enumerate() {
        let line = idx + 1;
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        if let Some(rest) = text.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ProblemError::Format { line, msg: format!("malformed section header `{text}`") })?
                .trim();
            if sections.iter().any(|s| s.name == name) {
                return Err(ProblemError::Format { line, msg: format!("duplicate section [{name}]") });
            }
            sections.push(Section { name: name.to_string(), line, entries: Vec::new() });
            continue;
        }
        let (key, value) = text
            .split_once('=')
            .ok_or_else(|| ProblemError::Format { line, msg: format!("expected `key = value`, found `{text}`") })?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(ProblemError::Format { line, msg: "empty key or value".into() });
        }
        let section = sections
            .last_mut()
            .ok_or_else(|| ProblemError::Format { line, msg: format!("`{key}` appears before any section") })?;
        if section.get(key).is_some() {
            return Err(ProblemError::Format { line, msg: format!("duplicate key `{key}` in [{}]", section.name) });
        }
        section.entries.push(SectionEntry { key: key.to_string(), value: value.to_string(), line });
    }
    Ok(sections)
}

/// Evaluates a constant expression such as `pi/2` or `1e-3`.
pub fn constant_value(text: &str, line: usize) -> Result<f64, ProblemError> {
    let ast = parse_expr(text, Role::Psi).map_err(|source| ProblemError::Expr {
        line,
        key: text.to_string(),
        source,
    })?;
    ast.eval(&EvalEnv::new())
        .map_err(|e| ProblemError::Format { line, msg: format!("`{text}` is not a constant: {e}") })
}

fn expr_entry(entry: &SectionEntry, role: Role) -> Result<ExprAst, ProblemError> {
    parse_expr(&entry.value, role).map_err(|source| ProblemError::Expr {
        line: entry.line,
        key: entry.key.clone(),
        source,
    })
}

const PROBLEM_KEYS: [&str; 10] = ["alpha", "T", "delta", "f", "g", "k", "phi", "gamma", "beta", "psi"];

/// Builds a spec from parsed sections. Sections named in `passthrough` are
/// left for the caller (the sweep plan uses this for `[sweep]`).
pub fn spec_from_sections(sections: &[Section], passthrough: &[&str]) -> Result<ProblemSpec, ProblemError> {
    let mut problem = None;
    let mut constants = HypothesisConstants::default();
    let mut claimed = None;
    for section in sections {
        match section.name.as_str() {
            "problem" => problem = Some(section),
            "constants" => {
                for e in &section.entries {
                    let v = constant_value(&e.value, e.line)?;
                    if !constants.set(&e.key, v) {
                        return Err(ProblemError::Format {
                            line: e.line,
                            msg: format!("unknown constant `{}` (expected one of {})", e.key, CONSTANT_KEYS.join(", ")),
                        });
                    }
                }
            }
            "claims" => {
                let mut interval = ClaimedInterval { low: None, high: None };
                for e in &section.entries {
                    let v = constant_value(&e.value, e.line)?;
                    match e.key.as_str() {
                        "r_low" => interval.low = Some(v),
                        "r_high" => interval.high = Some(v),
                        other => {
                            return Err(ProblemError::Format { line: e.line, msg: format!("unknown key `{other}` in [claims]") })
                        }
                    }
                }
                claimed = Some(interval);
            }
            name if passthrough.contains(&name) => {}
            name => {
                return Err(ProblemError::Format { line: section.line, msg: format!("unknown section [{name}]") });
            }
        }
    }
    let problem = problem.ok_or(ProblemError::Format { line: 0, msg: "missing [problem] section".into() })?;
    if let Some(e) = problem.entries.iter().find(|e| !PROBLEM_KEYS.contains(&e.key.as_str())) {
        return Err(ProblemError::Format { line: e.line, msg: format!("unknown key `{}` in [problem]", e.key) });
    }
    let required = |key: &str| {
        problem.get(key).ok_or(ProblemError::Format {
            line: problem.line,
            msg: format!("[problem] is missing `{key}`"),
        })
    };
    let number = |key: &str| required(key).and_then(|e| constant_value(&e.value, e.line));
    let optional = |key: &str, role| problem.get(key).map(|e| expr_entry(e, role)).transpose();

    let mut spec = ProblemSpec {
        alpha: number("alpha")?,
        t_end: number("T")?,
        delta: number("delta")?,
        f: expr_entry(required("f")?, Role::F)?,
        g: expr_entry(required("g")?, Role::G)?,
        k: expr_entry(required("k")?, Role::K)?,
        phi: expr_entry(required("phi")?, Role::Phi)?,
        gamma_fn: optional("gamma", Role::GammaFn)?,
        beta_fn: optional("beta", Role::BetaFn)?,
        psi: optional("psi", Role::Psi)?,
        constants,
        claimed,
        warnings: Vec::new(),
    };
    spec.validate()?;
    Ok(spec)
}

/// Parses and validates a problem file.
pub fn parse_problem(source: &str) -> Result<ProblemSpec, ProblemError> {
    spec_from_sections(&parse_sections(source)?, &[])
}

/// Writes `spec` back in the file format; `parse_problem` reproduces it.
pub fn render_problem(spec: &ProblemSpec) -> String {
    let mut out = String::from("[problem]\n");
    // Debug formatting of f64 is the shortest exact representation
    let _ = writeln!(out, "alpha = {:?}", spec.alpha);
    let _ = writeln!(out, "T = {:?}", spec.t_end);
    let _ = writeln!(out, "delta = {:?}", spec.delta);
    let _ = writeln!(out, "f = {}", spec.f);
    let _ = writeln!(out, "g = {}", spec.g);
    let _ = writeln!(out, "k = {}", spec.k);
    let _ = writeln!(out, "phi = {}", spec.phi);
    for (key, e) in [("gamma", &spec.gamma_fn), ("beta", &spec.beta_fn), ("psi", &spec.psi)] {
        if let Some(e) = e {
            let _ = writeln!(out, "{key} = {e}");
        }
    }
    if !spec.constants.is_empty() {
        out.push_str("\n[constants]\n");
        for (key, value) in CONSTANT_KEYS.iter().zip(spec.constants.values()) {
            if let Some(v) = value {
                let _ = writeln!(out, "{key} = {v:?}");
            }
        }
    }
    if let Some(c) = &spec.claimed {
        out.push_str("\n[claims]\n");
        if let Some(v) = c.low {
            let _ = writeln!(out, "r_low = {v:?}");
        }
        if let Some(v) = c.high {
            let _ = writeln!(out, "r_high = {v:?}");
        }
    }
    out
}
