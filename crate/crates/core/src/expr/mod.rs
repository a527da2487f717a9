//! Arithmetic expression language used by problem files.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term   (('+' | '-') term)*
//! term    := unary  (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          right-associative
//! primary := number | 'pi' | variable | name '(' args ')' | 'xnorm' | '(' expr ')'
//! args    := expr (',' expr)*
//! ```
//!
//! `-a^b` therefore reads as `-(a^b)`, and `2^-1` is accepted. Builtins are
//! `sin cos exp abs sqrt` (one argument), `min max` (two), and the segment
//! functionals `xnorm` (sup norm of the delayed state, no argument) and
//! `xat(θ)` (delayed state at offset θ). Which variables and functionals an
//! expression may use depends on its [`Role`].

mod eval;
mod lexer;
mod parser;
mod print;

use std::fmt;

use thiserror::Error;

pub use eval::{EvalEnv, EvalError, Segment};
pub use parser::parse_expr;

/// Which slot of a problem an expression fills; fixes its variable set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    /// f(t, x)
    F,
    /// g(t, x_t, y)
    G,
    /// k(t, x_t)
    K,
    /// φ(θ)
    Phi,
    /// γ(t)
    GammaFn,
    /// β(t)
    BetaFn,
    /// ψ(r)
    Psi,
}

impl Role {
    pub fn allows(self, var: Var) -> bool {
        use Var::*;
        match self {
            Role::F => matches!(var, T | X),
            Role::G => matches!(var, T | Y),
            Role::K => matches!(var, T),
            Role::Phi => matches!(var, Theta),
            Role::GammaFn | Role::BetaFn => matches!(var, T),
            Role::Psi => matches!(var, R),
        }
    }

    pub fn has_segment(self) -> bool {
        matches!(self, Role::G | Role::K)
    }

    pub fn name(self) -> &'static str {
        match self {
            Role::F => "f",
            Role::G => "g",
            Role::K => "k",
            Role::Phi => "phi",
            Role::GammaFn => "gamma_fn",
            Role::BetaFn => "beta_fn",
            Role::Psi => "psi",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    T,
    X,
    Y,
    Theta,
    R,
}

impl Var {
    pub fn from_name(name: &str) -> Option<Var> {
        Some(match name {
            "t" => Var::T,
            "x" => Var::X,
            "y" => Var::Y,
            "theta" => Var::Theta,
            "r" => Var::R,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::X => "x",
            Var::Y => "y",
            Var::Theta => "theta",
            Var::R => "r",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Abs,
    Sqrt,
    Min,
    Max,
    XNorm,
    XAt,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            "min" => Func::Min,
            "max" => Func::Max,
            "xnorm" => Func::XNorm,
            "xat" => Func::XAt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Min => "min",
            Func::Max => "max",
            Func::XNorm => "xnorm",
            Func::XAt => "xat",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::XNorm => 0,
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    pub fn is_segment(self) -> bool {
        matches!(self, Func::XNorm | Func::XAt)
    }
}

/// Expression tree node.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// Replace every occurrence of `var` by `with`.
    pub fn substitute(&self, var: Var, with: &Expr) -> Expr {
        match self {
            Expr::Var(v) if *v == var => with.clone(),
            Expr::Num(_) | Expr::Pi | Expr::Var(_) => self.clone(),
            Expr::Neg(e) => Expr::Neg(Box::new(e.substitute(var, with))),
            Expr::Binary(op, a, b) => Expr::binary(*op, a.substitute(var, with), b.substitute(var, with)),
            Expr::Call(func, args) => {
                Expr::Call(*func, args.iter().map(|a| a.substitute(var, with)).collect())
            }
        }
    }

    pub fn uses_segment(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Pi | Expr::Var(_) => false,
            Expr::Neg(e) => e.uses_segment(),
            Expr::Binary(_, a, b) => a.uses_segment() || b.uses_segment(),
            Expr::Call(func, args) => func.is_segment() || args.iter().any(Expr::uses_segment),
        }
    }
}

/// A parsed, role-checked expression.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprAst {
    root: Expr,
    role: Role,
}

impl ExprAst {
    /// Wraps a tree built programmatically; checks it against the role's variable set.
    pub fn from_expr(root: Expr, role: Role) -> Result<Self, ExprError> {
        check_role(&root, role)?;
        Ok(Self { root, role })
    }

    pub fn root(&self) -> &Expr {
        &self.root
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn eval(&self, env: &EvalEnv<'_>) -> Result<f64, EvalError> {
        eval::eval(&self.root, env)
    }

    /// Re-targets the tree to another role; fails if it uses names the new role forbids.
    pub fn with_role(&self, role: Role) -> Result<Self, ExprError> {
        Self::from_expr(self.root.clone(), role)
    }

    /// Every subexpression parenthesized; parses back to the same tree.
    pub fn to_full_paren_string(&self) -> String {
        print::full_paren(&self.root)
    }
}

impl fmt::Display for ExprAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)
    }
}

fn check_role(expr: &Expr, role: Role) -> Result<(), ExprError> {
    match expr {
        Expr::Num(_) | Expr::Pi => Ok(()),
        Expr::Var(v) if role.allows(*v) => Ok(()),
        Expr::Var(v) => Err(ExprError::UnknownIdentifier {
            pos: 0,
            name: v.name().to_string(),
            role,
        }),
        Expr::Neg(e) => check_role(e, role),
        Expr::Binary(_, a, b) => {
            check_role(a, role)?;
            check_role(b, role)
        }
        Expr::Call(func, args) => {
            if func.is_segment() && !role.has_segment() {
                return Err(ExprError::SegmentNotAllowed {
                    pos: 0,
                    name: func.name().to_string(),
                    role,
                });
            }
            if args.len() != func.arity() {
                return Err(ExprError::Arity {
                    pos: 0,
                    name: func.name().to_string(),
                    expected: func.arity(),
                    found: args.len(),
                });
            }
            args.iter().try_for_each(|a| check_role(a, role))
        }
    }
}

/// Parse-time failures. `pos` is a 0-based character offset into the source.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("unexpected character {ch:?} at position {pos}")]
    Lex { pos: usize, ch: char },
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at position {pos} for role {role}")]
    UnknownIdentifier { pos: usize, name: String, role: Role },
    #[error("`{name}` at position {pos} takes {expected} argument(s), got {found}")]
    Arity {
        pos: usize,
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("segment functional `{name}` at position {pos} is not available in role {role}")]
    SegmentNotAllowed { pos: usize, name: String, role: Role },
}

impl ExprError {
    pub fn pos(&self) -> usize {
        match self {
            ExprError::Lex { pos, .. }
            | ExprError::Parse { pos, .. }
            | ExprError::UnknownIdentifier { pos, .. }
            | ExprError::Arity { pos, .. }
            | ExprError::SegmentNotAllowed { pos, .. } => *pos,
        }
    }
}
