use std::f64::consts::PI;

use thiserror::Error;

use super::{BinOp, Expr, Func, Var};

/// Read access to a delayed state segment x_t on [-δ, 0].
pub trait Segment {
    /// x_t(θ); implementations clamp θ into [-δ, 0].
    fn xat(&self, theta: f64) -> f64;
    /// sup over θ ∈ [-δ, 0] of |x_t(θ)|.
    fn xnorm(&self) -> f64;
}

/// Variable bindings for one evaluation.
#[derive(Clone, Copy, Default)]
pub struct EvalEnv<'a> {
    pub t: Option<f64>,
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub theta: Option<f64>,
    pub r: Option<f64>,
    pub segment: Option<&'a dyn Segment>,
}

impl<'a> EvalEnv<'a> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn t(mut self, v: f64) -> Self {
        self.t = Some(v);
        self
    }

    pub fn x(mut self, v: f64) -> Self {
        self.x = Some(v);
        self
    }

    pub fn y(mut self, v: f64) -> Self {
        self.y = Some(v);
        self
    }

    pub fn theta(mut self, v: f64) -> Self {
        self.theta = Some(v);
        self
    }

    pub fn r(mut self, v: f64) -> Self {
        self.r = Some(v);
        self
    }

    pub fn segment(mut self, seg: &'a dyn Segment) -> Self {
        self.segment = Some(seg);
        self
    }

    fn var(&self, v: Var) -> Option<f64> {
        match v {
            Var::T => self.t,
            Var::X => self.x,
            Var::Y => self.y,
            Var::Theta => self.theta,
            Var::R => self.r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("variable `{}` is not bound", .0.name())]
    Unbound(Var),
    #[error("`{}` needs a state segment but none is bound", .0.name())]
    NoSegment(Func),
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },
}

fn checked(op: &'static str, value: f64, args: &[f64]) -> Result<f64, EvalError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(EvalError::Domain {
            op,
            detail: format!("non-finite result {value} from arguments {args:?}"),
        })
    }
}

pub(super) fn eval(e: &Expr, env: &EvalEnv<'_>) -> Result<f64, EvalError> {
    match e {
        Expr::Num(v) => Ok(*v),
        Expr::Pi => Ok(PI),
        Expr::Var(v) => env.var(*v).ok_or(EvalError::Unbound(*v)),
        Expr::Neg(inner) => Ok(-eval(inner, env)?),
        Expr::Binary(op, a, b) => {
            let a = eval(a, env)?;
            let b = eval(b, env)?;
            match op {
                BinOp::Add => checked("+", a + b, &[a, b]),
                BinOp::Sub => checked("-", a - b, &[a, b]),
                BinOp::Mul => checked("*", a * b, &[a, b]),
                BinOp::Div => {
                    if b == 0.0 {
                        return Err(EvalError::Domain {
                            op: "/",
                            detail: format!("division of {a} by zero"),
                        });
                    }
                    checked("/", a / b, &[a, b])
                }
                BinOp::Pow => checked("^", a.powf(b), &[a, b]),
            }
        }
        Expr::Call(func, args) => {
            if func.is_segment() {
                let seg = env.segment.ok_or(EvalError::NoSegment(*func))?;
                return match func {
                    Func::XNorm => Ok(seg.xnorm()),
                    _ => Ok(seg.xat(eval(&args[0], env)?)),
                };
            }
            let a = eval(&args[0], env)?;
            match func {
                Func::Sin => checked("sin", a.sin(), &[a]),
                Func::Cos => checked("cos", a.cos(), &[a]),
                Func::Exp => checked("exp", a.exp(), &[a]),
                Func::Abs => Ok(a.abs()),
                Func::Sqrt => {
                    if a < 0.0 {
                        return Err(EvalError::Domain {
                            op: "sqrt",
                            detail: format!("negative argument {a}"),
                        });
                    }
                    Ok(a.sqrt())
                }
                Func::Min => Ok(a.min(eval(&args[1], env)?)),
                Func::Max => Ok(a.max(eval(&args[1], env)?)),
                Func::XNorm | Func::XAt => unreachable!("segment functionals handled above"),
            }
        }
    }
}
