//! A small expression language for closed-form scalar fields.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | power
//! power  := atom ('^' ['-'] number)?
//! atom   := number | 'x' | 'y' | 'pi' | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` binds tighter than unary minus, so `-x^2` is `-(x^2)`. The exponent
//! must be a numeric literal. Functions: `sin cos exp sqrt log abs`.

use std::fmt;

use crate::error::{GeoError, Result};
use crate::fields::ScalarField;
use crate::grid::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Log,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "log" => Func::Log,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Log => "log",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    X,
    Y,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
    Call(Func, Box<Expr>),
}

/// Canonical, fully parenthesized form; parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::X => write!(f, "x"),
            Expr::Y => write!(f, "y"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Binary(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                };
                write!(f, "({a} {s} {b})")
            }
            Expr::Pow(a, p) => write!(f, "({a}^{p:?})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    tok: Tok,
    tok_start: usize,
}

fn err<T>(offset: usize, message: impl Into<String>) -> Result<T> {
    Err(GeoError::Parse { offset, message: message.into() })
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self> {
        let mut p = Parser { src, pos: 0, tok: Tok::End, tok_start: 0 };
        p.bump()?;
        Ok(p)
    }

    fn bump(&mut self) -> Result<()> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.tok_start = self.pos;
        if self.pos >= bytes.len() {
            self.tok = Tok::End;
            return Ok(());
        }
        let c = bytes[self.pos];
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = single {
            self.pos += 1;
            self.tok = t;
            return Ok(());
        }
        if c.is_ascii_digit() || c == b'.' {
            let start = self.pos;
            while self.pos < bytes.len() && (bytes[self.pos].is_ascii_digit() || bytes[self.pos] == b'.') {
                self.pos += 1;
            }
            if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
                let mut q = self.pos + 1;
                if q < bytes.len() && (bytes[q] == b'+' || bytes[q] == b'-') {
                    q += 1;
                }
                if q < bytes.len() && bytes[q].is_ascii_digit() {
                    while q < bytes.len() && bytes[q].is_ascii_digit() {
                        q += 1;
                    }
                    self.pos = q;
                }
            }
            let text = &self.src[start..self.pos];
            return match text.parse::<f64>() {
                Ok(v) if v.is_finite() => {
                    self.tok = Tok::Num(v);
                    Ok(())
                }
                Ok(_) => err(start, format!("number '{text}' out of range")),
                Err(_) => err(start, format!("malformed number '{text}'")),
            };
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = self.pos;
            while self.pos < bytes.len() && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_') {
                self.pos += 1;
            }
            self.tok = Tok::Ident(self.src[start..self.pos].to_string());
            return Ok(());
        }
        let ch = self.src[self.pos..].chars().next().unwrap_or('?');
        err(self.pos, format!("unexpected character '{ch}'"))
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<()> {
        if self.tok == t {
            self.bump()
        } else {
            err(self.tok_start, format!("expected {what}"))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.tok == Tok::Minus {
            self.bump()?;
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.tok != Tok::Caret {
            return Ok(base);
        }
        self.bump()?;
        let negative = if self.tok == Tok::Minus {
            self.bump()?;
            true
        } else {
            false
        };
        match self.tok {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Expr::Pow(Box::new(base), if negative { -v } else { v }))
            }
            _ => err(self.tok_start, "exponent must be a numeric literal"),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let start = self.tok_start;
        match self.tok.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Expr::Const(v))
            }
            Tok::LParen => {
                self.bump()?;
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump()?;
                match name.as_str() {
                    "x" => Ok(Expr::X),
                    "y" => Ok(Expr::Y),
                    "pi" => Ok(Expr::Const(std::f64::consts::PI)),
                    _ => match Func::from_name(&name) {
                        Some(func) => {
                            self.expect(Tok::LParen, &format!("'(' after '{name}'"))?;
                            let arg = self.expr()?;
                            self.expect(Tok::RParen, "')'")?;
                            Ok(Expr::Call(func, Box::new(arg)))
                        }
                        None => err(start, format!("unknown identifier \"{name}\"")),
                    },
                }
            }
            Tok::End => err(start, "unexpected end of input"),
            _ => err(start, "expected a number, variable, function call or '('"),
        }
    }
}

pub fn parse(src: &str) -> Result<Expr> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    if p.tok != Tok::End {
        return err(p.tok_start, "unexpected trailing input");
    }
    Ok(e)
}

impl Expr {
    /// Evaluates at a point; `Err` carries a domain-violation message.
    pub fn eval_at(&self, x: f64, y: f64) -> std::result::Result<f64, String> {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::X => x,
            Expr::Y => y,
            Expr::Neg(e) => -e.eval_at(x, y)?,
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.eval_at(x, y)?, b.eval_at(x, y)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err("division by zero".into());
                        }
                        a / b
                    }
                }
            }
            Expr::Pow(a, p) => {
                let a = a.eval_at(x, y)?;
                if a < 0.0 && p.fract() != 0.0 {
                    return Err(format!("negative base to non-integer power {p}"));
                }
                if a == 0.0 && *p < 0.0 {
                    return Err("zero to a negative power".into());
                }
                a.powf(*p)
            }
            Expr::Call(func, a) => {
                let a = a.eval_at(x, y)?;
                match func {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Abs => a.abs(),
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(format!("sqrt of negative value {a}"));
                        }
                        a.sqrt()
                    }
                    Func::Log => {
                        if a <= 0.0 {
                            return Err(format!("log of non-positive value {a}"));
                        }
                        a.ln()
                    }
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err("non-finite result".into())
        }
    }

    /// Samples the expression at every grid node, in index order.
    pub fn evaluate(&self, grid: &GridSpec) -> Result<ScalarField> {
        let mut values = Vec::with_capacity(grid.len());
        for idx in 0..grid.len() {
            let (x, y) = grid.position(idx);
            match self.eval_at(x, y) {
                Ok(v) => values.push(v),
                Err(message) => {
                    let (i, j) = grid.node(idx);
                    return Err(GeoError::Eval { i, j, x, y, message });
                }
            }
        }
        ScalarField::new(*grid, values)
    }
}

/// Parses and samples in one step.
pub fn eval_expression(src: &str, grid: &GridSpec) -> Result<ScalarField> {
    parse(src)?.evaluate(grid)
}
