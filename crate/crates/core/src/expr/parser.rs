use super::lexer::{tokenize, Tok, Token};
use super::{BinOp, Expr, ExprAst, ExprError, Func, Role, Var};

/// Parses `source` as an expression for `role`.
pub fn parse_expr(source: &str, role: Role) -> Result<ExprAst, ExprError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser { tokens, cursor: 0, role };
    let root = parser.expr()?;
    let next = parser.peek();
    if next.tok != Tok::Eof {
        return Err(ExprError::Parse {
            pos: next.pos,
            msg: "unexpected trailing input".into(),
        });
    }
    Ok(ExprAst { root, role })
}

struct Parser {
    tokens: Vec<Token>,
    cursor: usize,
    role: Role,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.cursor]
    }

    fn advance(&mut self) -> Token {
        let tok = self.tokens[self.cursor].clone();
        if tok.tok != Tok::Eof {
            self.cursor += 1;
        }
        tok
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Token, ExprError> {
        let tok = self.advance();
        if tok.tok == want {
            Ok(tok)
        } else {
            Err(ExprError::Parse {
                pos: tok.pos,
                msg: format!("expected {what}"),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.peek().tok == Tok::Minus {
            self.advance();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if self.peek().tok == Tok::Caret {
            self.advance();
            let exponent = self.unary()?;
            return Ok(Expr::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let Token { tok, pos } = self.advance();
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => self.identifier(name, pos),
            Tok::Eof => Err(ExprError::Parse {
                pos,
                msg: "unexpected end of input".into(),
            }),
            other => Err(ExprError::Parse {
                pos,
                msg: format!("unexpected token {other:?}"),
            }),
        }
    }

    fn identifier(&mut self, name: String, pos: usize) -> Result<Expr, ExprError> {
        let called = self.peek().tok == Tok::LParen;
        if name == "pi" && !called {
            return Ok(Expr::Pi);
        }
        if let Some(var) = Var::from_name(&name) {
            if !self.role.allows(var) {
                return Err(ExprError::UnknownIdentifier { pos, name, role: self.role });
            }
            if called {
                return Err(ExprError::Parse {
                    pos,
                    msg: format!("variable `{name}` is not callable"),
                });
            }
            return Ok(Expr::Var(var));
        }
        let Some(func) = Func::from_name(&name) else {
            return Err(ExprError::UnknownIdentifier { pos, name, role: self.role });
        };
        if func.is_segment() && !self.role.has_segment() {
            return Err(ExprError::SegmentNotAllowed { pos, name, role: self.role });
        }
        let args = if called { self.arguments()? } else { Vec::new() };
        // bare `xnorm` is allowed; any other bare builtin is an arity error
        if args.len() != func.arity() {
            return Err(ExprError::Arity {
                pos,
                name,
                expected: func.arity(),
                found: args.len(),
            });
        }
        Ok(Expr::Call(func, args))
    }

    fn arguments(&mut self) -> Result<Vec<Expr>, ExprError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if self.peek().tok == Tok::RParen {
            self.advance();
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            let tok = self.advance();
            match tok.tok {
                Tok::Comma => continue,
                Tok::RParen => return Ok(args),
                _ => {
                    return Err(ExprError::Parse {
                        pos: tok.pos,
                        msg: "expected `,` or `)` in argument list".into(),
                    })
                }
            }
        }
    }
}
