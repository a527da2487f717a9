use std::fmt::{self, Write as _};

use super::{BinOp, Expr};

// binding strength used by the minimal-parenthesis printer
const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => PREC_ADD,
        Expr::Binary(BinOp::Mul | BinOp::Div, ..) => PREC_MUL,
        Expr::Neg(_) => PREC_NEG,
        Expr::Binary(BinOp::Pow, ..) => PREC_POW,
        _ => PREC_ATOM,
    }
}

fn write_num(out: &mut impl fmt::Write, v: f64) -> fmt::Result {
    // Debug gives the shortest representation that round-trips
    write!(out, "{v:?}")
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, paren: bool) -> fmt::Result {
    if paren {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Minimal-parenthesis rendering.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write_num(f, *v),
            Expr::Pi => f.write_str("pi"),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Neg(e) => {
                f.write_char('-')?;
                write_child(f, e, precedence(e) < PREC_NEG)
            }
            Expr::Binary(op, a, b) => {
                let p = precedence(self);
                let (left_paren, right_paren) = if *op == BinOp::Pow {
                    // base must be an atom; the exponent is parsed as a unary
                    (precedence(a) <= PREC_POW, precedence(b) < PREC_NEG)
                } else {
                    (precedence(a) < p, precedence(b) <= p)
                };
                write_child(f, a, left_paren)?;
                let sep = if p == PREC_ADD { " " } else { "" };
                write!(f, "{sep}{}{sep}", op.symbol())?;
                write_child(f, b, right_paren)
            }
            Expr::Call(func, args) => {
                if args.is_empty() {
                    return f.write_str(func.name());
                }
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_char(')')
            }
        }
    }
}

pub(super) fn full_paren(e: &Expr) -> String {
    let mut s = String::new();
    write_full(&mut s, e).expect("writing to String cannot fail");
    s
}

fn write_full(out: &mut String, e: &Expr) -> fmt::Result {
    match e {
        Expr::Num(v) => write_num(out, *v),
        Expr::Pi => out.write_str("pi"),
        Expr::Var(v) => out.write_str(v.name()),
        Expr::Neg(inner) => {
            out.write_str("(-")?;
            write_full(out, inner)?;
            out.write_char(')')
        }
        Expr::Binary(op, a, b) => {
            out.write_char('(')?;
            write_full(out, a)?;
            out.write_char(op.symbol())?;
            write_full(out, b)?;
            out.write_char(')')
        }
        Expr::Call(func, args) => {
            if args.is_empty() {
                return out.write_str(func.name());
            }
            write!(out, "{}(", func.name())?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.write_char(',')?;
                }
                write_full(out, a)?;
            }
            out.write_char(')')
        }
    }
}
