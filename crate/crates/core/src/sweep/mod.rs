//! Parameter sweeps: certificate verdict and Picard outcome per grid cell.
//!
//! A plan is a problem file with an extra section
//!
//! ```text
//! [sweep]
//! axis.alpha = 0.3, 0.5, 0.7
//! axis.L = 0, 0.05, 1/12
//! r = 2
//! n = 500            # solver settings: n, tol, max_iter, method, scheme, blow_up
//! cap = 10000
//! samples = 500      # used only when constants have to be estimated
//! ```
//!
//! Axes and how each cell is built from the base problem:
//!
//! | axis        | effect                                                        |
//! |-------------|---------------------------------------------------------------|
//! | `alpha`     | order α                                                       |
//! | `T`         | horizon; F and declared γ/β profiles are re-sampled on [0, T] |
//! | `L`         | f(t,x) ↦ f(t,0) + (L/L₀)(f(t,x) − f(t,0))                       |
//! | `gamma_sup` | g and γ scaled by gamma_sup/γ₀                                |
//! | `psi_slope` | g and ψ scaled by psi_slope/p₀                                |
//! | `beta_l1`   | k and β scaled by beta_l1/β₀                                  |
//!
//! Subscript 0 denotes the base value. With declared constants the axis
//! value replaces the constant exactly; otherwise each cell is estimated.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::certify::{dhage_condition, existence_bound};
use crate::expr::{BinOp, EvalEnv, Expr, ExprAst, Role, Var};
use crate::fracint::{cumulative_trapezoid, Scheme};
use crate::model::{
    constant_value, estimate_constants, parse_sections, spec_from_sections, HypothesisConstants, ProblemError,
    ProblemSpec, Section,
};
use crate::solver::{solve, Method, SolveConfig, SolveStatus};

pub const DEFAULT_CELL_CAP: usize = 10_000;
pub const AXES: [&str; 6] = ["alpha", "T", "L", "gamma_sup", "psi_slope", "beta_l1"];
const CERT_KEYS: [&str; 5] = ["L", "F", "beta_l1", "gamma_sup", "psi_slope"];
const PROFILE_SAMPLES: usize = 640;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("line {line}: {msg}")]
    Plan { line: usize, msg: String },
    #[error("{cells} cells exceed the cap of {cap}")]
    TooManyCells { cells: usize, cap: usize },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub base: ProblemSpec,
    pub axes: Vec<Axis>,
    pub solver: SolveConfig,
    pub r: f64,
    pub cap: usize,
    pub samples: usize,
}

/// Splits on commas outside parentheses.
fn split_values(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(text[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(text[start..].trim());
    out
}

impl SweepPlan {
    /// Parses a problem file carrying a `[sweep]` section.
    pub fn parse(source: &str) -> Result<Self, SweepError> {
        let sections = parse_sections(source)?;
        let base = spec_from_sections(&sections, &["sweep"])?;
        let sweep = sections
            .iter()
            .find(|s| s.name == "sweep")
            .ok_or(SweepError::Plan { line: 0, msg: "missing [sweep] section".into() })?;
        Self::from_section(base, sweep)
    }

    fn from_section(base: ProblemSpec, sweep: &Section) -> Result<Self, SweepError> {
        let mut plan = SweepPlan {
            base,
            axes: Vec::new(),
            solver: SolveConfig { n_steps: 500, ..SolveConfig::default() },
            r: 2.0,
            cap: DEFAULT_CELL_CAP,
            samples: 500,
        };
        for e in &sweep.entries {
            let err = |msg: String| SweepError::Plan { line: e.line, msg };
            let number = || constant_value(&e.value, e.line).map_err(SweepError::from);
            let count = || -> Result<usize, SweepError> {
                let v = number()?;
                if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                    Ok(v as usize)
                } else {
                    Err(err(format!("`{}` must be a positive integer", e.key)))
                }
            };
            if let Some(name) = e.key.strip_prefix("axis.") {
                if !AXES.contains(&name) {
                    return Err(err(format!("unknown axis `{name}` (expected one of {})", AXES.join(", "))));
                }
                if plan.axes.iter().any(|a| a.name == name) {
                    return Err(err(format!("duplicate axis `{name}`")));
                }
                let values = split_values(&e.value)
                    .into_iter()
                    .map(|v| constant_value(v, e.line))
                    .collect::<Result<Vec<_>, _>>()?;
                if values.iter().any(|v| !v.is_finite() || (name != "alpha" && name != "T" && *v < 0.0)) {
                    return Err(err(format!("axis `{name}` has an invalid value")));
                }
                plan.axes.push(Axis { name: name.to_string(), values });
                continue;
            }
            match e.key.as_str() {
                "r" => plan.r = number()?,
                "n" => plan.solver.n_steps = count()?,
                "tol" => plan.solver.tol = number()?,
                "max_iter" => plan.solver.max_iter = count()?,
                "blow_up" => plan.solver.blow_up = number()?,
                "method" => plan.solver.method = e.value.parse::<Method>().map_err(err)?,
                "scheme" => plan.solver.scheme = e.value.parse::<Scheme>().map_err(err)?,
                "cap" => plan.cap = count()?,
                "samples" => plan.samples = count()?,
                other => return Err(err(format!("unknown key `{other}` in [sweep]"))),
            }
        }
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let bad = |msg: String| Err(SweepError::Plan { line: 0, msg });
        if self.axes.is_empty() {
            return bad("a sweep needs at least one axis".into());
        }
        if let Some(a) = self.axes.iter().find(|a| a.values.is_empty()) {
            return bad(format!("axis `{}` has no values", a.name));
        }
        if !(self.r.is_finite() && self.r > 0.0) {
            return bad(format!("r must be positive, got {}", self.r));
        }
        self.solver.validate().map_err(|e| SweepError::Plan { line: 0, msg: e.to_string() })?;
        let cells = self.cell_count();
        if cells > self.cap {
            return Err(SweepError::TooManyCells { cells, cap: self.cap });
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).fold(1usize, |acc, n| acc.saturating_mul(n))
    }

    /// Cartesian product in row-major order, first axis slowest.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = vec![Cell { index: 0, values: Vec::new() }];
        for axis in &self.axes {
            cells = cells
                .into_iter()
                .flat_map(|c| {
                    axis.values.iter().map(move |v| {
                        let mut values = c.values.clone();
                        values.push(*v);
                        Cell { index: 0, values }
                    })
                })
                .collect();
        }
        for (i, c) in cells.iter_mut().enumerate() {
            c.index = i;
        }
        cells
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub index: usize,
    /// One value per plan axis, in axis order.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub cell: Cell,
    pub admissible: Option<bool>,
    pub dhage_ok: Option<bool>,
    pub status: Option<String>,
    pub iterations: Option<usize>,
    pub sup_norm: Option<f64>,
    pub residual_integral: Option<f64>,
    pub constants_measured: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub axes: Vec<String>,
    /// Sorted by cell values.
    pub rows: Vec<CellResult>,
    /// Cells certified admissible with measured constants whose solve diverged.
    pub anomalies: Vec<usize>,
}

fn scaled(ast: &ExprAst, factor: f64) -> ExprAst {
    ExprAst::from_expr(Expr::binary(BinOp::Mul, Expr::Num(factor), ast.root().clone()), ast.role())
        .expect("scaling keeps the variable set")
}

fn sup_on(ast: &ExprAst, t_end: f64) -> Result<f64, String> {
    let mut sup: f64 = 0.0;
    for i in 0..=PROFILE_SAMPLES {
        let t = t_end * i as f64 / PROFILE_SAMPLES as f64;
        sup = sup.max(ast.eval(&EvalEnv::new().t(t)).map_err(|e| e.to_string())?.abs());
    }
    Ok(sup)
}

fn l1_on(ast: &ExprAst, t_end: f64) -> Result<f64, String> {
    let vals = (0..=PROFILE_SAMPLES)
        .map(|i| ast.eval(&EvalEnv::new().t(t_end * i as f64 / PROFILE_SAMPLES as f64)).map(f64::abs))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    Ok(*cumulative_trapezoid(&vals, t_end / PROFILE_SAMPLES as f64).last().unwrap_or(&0.0))
}

fn f_at_zero_sup(spec: &ProblemSpec) -> Result<f64, String> {
    let f0 = spec.f.root().substitute(Var::X, &Expr::Num(0.0));
    sup_on(&ExprAst::from_expr(f0, Role::GammaFn).map_err(|e| e.to_string())?, spec.t_end)
}

fn ratio(target: f64, base: Option<f64>, name: &str) -> Result<f64, String> {
    match base {
        _ if target == 0.0 => Ok(0.0),
        Some(b) if b > 0.0 => Ok(target / b),
        Some(_) => Err(format!("cannot rescale to {name} = {target}: base value is 0")),
        None => Err(format!("cannot rescale {name}: base value unknown")),
    }
}

/// Builds the cell's problem and the constants its certificate uses.
fn build_cell(plan: &SweepPlan, base_constants: &HypothesisConstants, cell: &Cell) -> Result<(ProblemSpec, HypothesisConstants, bool), String> {
    let mut spec = plan.base.clone();
    let mut constants = *base_constants;
    let mut overrides = Vec::new();
    for (axis, &v) in plan.axes.iter().zip(&cell.values) {
        match axis.name.as_str() {
            "alpha" => spec.alpha = v,
            "T" => spec.t_end = v,
            "L" => {
                let s = ratio(v, base_constants.l, "L")?;
                let f0 = spec.f.root().substitute(Var::X, &Expr::Num(0.0));
                let diff = Expr::binary(BinOp::Sub, spec.f.root().clone(), f0.clone());
                let root = Expr::binary(BinOp::Add, f0, Expr::binary(BinOp::Mul, Expr::Num(s), diff));
                spec.f = ExprAst::from_expr(root, spec.f.role()).map_err(|e| e.to_string())?;
                overrides.push(("L", v));
            }
            "gamma_sup" => {
                let s = ratio(v, base_constants.gamma_sup, "gamma_sup")?;
                spec.g = scaled(&spec.g, s);
                spec.gamma_fn = spec.gamma_fn.as_ref().map(|e| scaled(e, s));
                overrides.push(("gamma_sup", v));
            }
            "psi_slope" => {
                let s = ratio(v, base_constants.psi_slope, "psi_slope")?;
                spec.g = scaled(&spec.g, s);
                spec.psi = spec.psi.as_ref().map(|e| scaled(e, s));
                overrides.push(("psi_slope", v));
            }
            "beta_l1" => {
                let s = ratio(v, base_constants.beta_l1, "beta_l1")?;
                spec.k = scaled(&spec.k, s);
                spec.beta_fn = spec.beta_fn.as_ref().map(|e| scaled(e, s));
                overrides.push(("beta_l1", v));
            }
            other => return Err(format!("unknown axis `{other}`")),
        }
    }
    spec.validate().map_err(|e| e.to_string())?;
    let declared = spec.constants;
    let measured = CERT_KEYS.iter().any(|k| declared.get(k).is_none());
    if measured {
        let est = estimate_constants(&spec, plan.samples, plan.r).map_err(|e| e.to_string())?;
        constants = declared.or(&est.constants);
    } else if spec.t_end != plan.base.t_end {
        constants.f_sup = Some(f_at_zero_sup(&spec)?);
        if let Some(g) = &spec.gamma_fn {
            constants.gamma_sup = Some(sup_on(g, spec.t_end)?);
        }
        if let Some(b) = &spec.beta_fn {
            constants.beta_l1 = Some(l1_on(b, spec.t_end)?);
        }
    }
    if !measured {
        for (key, v) in overrides {
            constants.set(key, v);
        }
    }
    spec.constants = constants;
    Ok((spec, constants, measured))
}

fn run_cell(plan: &SweepPlan, base_constants: &HypothesisConstants, cell: Cell) -> CellResult {
    let mut row = CellResult {
        cell,
        admissible: None,
        dhage_ok: None,
        status: None,
        iterations: None,
        sup_norm: None,
        residual_integral: None,
        constants_measured: false,
        error: None,
    };
    let (spec, constants, measured) = match build_cell(plan, base_constants, &row.cell) {
        Ok(v) => v,
        Err(e) => {
            row.error = Some(e);
            return row;
        }
    };
    row.constants_measured = measured;
    let mut errors = Vec::new();
    match existence_bound(&constants, spec.alpha, spec.t_end, plan.r) {
        Ok(cert) => row.admissible = Some(cert.admissible),
        Err(e) => errors.push(format!("certificate: {e}")),
    }
    match dhage_condition(&constants, spec.alpha, spec.t_end, plan.r) {
        Ok((_, ok)) => row.dhage_ok = Some(ok),
        Err(e) => errors.push(format!("dhage: {e}")),
    }
    match solve(&spec, &plan.solver) {
        Ok(report) => {
            if let SolveStatus::EvalError(msg) = &report.status {
                errors.push(msg.clone());
            }
            row.status = Some(report.status.label().to_string());
            row.iterations = Some(report.iterations);
            row.sup_norm = Some(report.sup_norm());
            row.residual_integral = report.residual_integral;
        }
        Err(e) => errors.push(format!("solver: {e}")),
    }
    if !errors.is_empty() {
        row.error = Some(errors.join("; "));
    }
    row
}

fn compare_cells(a: &Cell, b: &Cell) -> Ordering {
    a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
        .then(a.index.cmp(&b.index))
}

/// Base-problem constants the axis rescalings are measured against.
fn base_constants(plan: &SweepPlan) -> HypothesisConstants {
    let declared = plan.base.constants;
    if CERT_KEYS.iter().all(|k| declared.get(k).is_some()) {
        return declared;
    }
    match estimate_constants(&plan.base, plan.samples, plan.r) {
        Ok(est) => declared.or(&est.constants),
        Err(_) => declared,
    }
}

/// Runs `cells` (in any order, in parallel) and sorts the rows.
pub fn run_cells(plan: &SweepPlan, cells: Vec<Cell>) -> SweepOutcome {
    let base = base_constants(plan);
    let mut rows: Vec<CellResult> = cells.into_par_iter().map(|c| run_cell(plan, &base, c)).collect();
    rows.sort_by(|a, b| compare_cells(&a.cell, &b.cell));
    let anomalies = rows
        .iter()
        .filter(|r| r.constants_measured && r.admissible == Some(true) && r.status.as_deref() == Some("diverged"))
        .map(|r| r.cell.index)
        .collect();
    SweepOutcome { axes: plan.axes.iter().map(|a| a.name.clone()).collect(), rows, anomalies }
}

pub fn run_sweep(plan: &SweepPlan) -> Result<SweepOutcome, SweepError> {
    plan.validate()?;
    Ok(run_cells(plan, plan.cells()))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn num(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.16e}")).unwrap_or_default()
}

/// Writes the atlas: one row per cell.
pub fn write_atlas<W: Write>(outcome: &SweepOutcome, out: W) -> Result<(), SweepError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["cell".to_string()];
    header.extend(outcome.axes.iter().cloned());
    header.extend(
        ["admissible", "dhage_ok", "status", "iterations", "sup_norm", "residual_integral", "constants", "error"]
            .map(String::from),
    );
    w.write_record(&header)?;
    for row in &outcome.rows {
        let mut rec = vec![row.cell.index.to_string()];
        rec.extend(row.cell.values.iter().map(|v| format!("{v:?}")));
        rec.push(opt(row.admissible));
        rec.push(opt(row.dhage_ok));
        rec.push(row.status.clone().unwrap_or_default());
        rec.push(opt(row.iterations));
        rec.push(num(row.sup_norm));
        rec.push(num(row.residual_integral));
        rec.push(if row.constants_measured { "measured" } else { "declared" }.to_string());
        rec.push(row.error.clone().unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Human-readable summary: counts per verdict and the anomaly list.
pub fn summary(outcome: &SweepOutcome) -> String {
    let mut s = String::new();
    let total = outcome.rows.len();
    let admissible = outcome.rows.iter().filter(|r| r.admissible == Some(true)).count();
    let converged = outcome.rows.iter().filter(|r| r.status.as_deref() == Some("converged")).count();
    let both = outcome
        .rows
        .iter()
        .filter(|r| r.admissible == Some(true) && r.status.as_deref() == Some("converged"))
        .count();
    let failed = outcome.rows.iter().filter(|r| r.error.is_some()).count();
    let _ = writeln!(s, "cells: {total}");
    let _ = writeln!(s, "admissible: {admissible}");
    let _ = writeln!(s, "converged: {converged}");
    let _ = writeln!(s, "admissible and converged: {both}");
    let _ = writeln!(s, "cells with errors: {failed}");
    if outcome.anomalies.is_empty() {
        let _ = write!(s, "anomalies: none");
    } else {
        let list: Vec<String> = outcome.anomalies.iter().map(usize::to_string).collect();
        let _ = write!(s, "anomalies (admissible with measured constants, diverged): cells {}", list.join(", "));
    }
    s
}
