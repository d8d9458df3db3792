//! The metric-definition expression language: lexer, recursive-descent
//! parser, printer, and jet-valued evaluation.
//!
//! Grammar (whitespace insensitive):
//!
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := factor (("*"|"/") factor)*
//! factor := "-" factor | power
//! power  := atom ("^" integer)?
//! atom   := number | ident | ident "(" expr ")" | "(" expr ")"
//! ```
//!
//! Unary minus binds looser than `^`, so `-u^2` is `Neg(Pow(u, 2))`.
//! Exponents are signed integer literals; the five function names
//! `sin cos exp log sqrt` are the only callables.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::jet::{Jet, JetError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FuncKind {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl FuncKind {
    fn from_name(name: &str) -> Option<FuncKind> {
        match name {
            "sin" => Some(FuncKind::Sin),
            "cos" => Some(FuncKind::Cos),
            "exp" => Some(FuncKind::Exp),
            "log" => Some(FuncKind::Log),
            "sqrt" => Some(FuncKind::Sqrt),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            FuncKind::Sin => "sin",
            FuncKind::Cos => "cos",
            FuncKind::Exp => "exp",
            FuncKind::Log => "log",
            FuncKind::Sqrt => "sqrt",
        }
    }
}

/// Parsed expression tree over coordinates and named parameters.
///
/// Identifiers are resolved against the chart's coordinate list and the
/// parameter map at bind/evaluation time, not at parse time.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarExpr {
    Number(f64),
    Ident(String),
    Neg(Box<ScalarExpr>),
    Add(Box<ScalarExpr>, Box<ScalarExpr>),
    Sub(Box<ScalarExpr>, Box<ScalarExpr>),
    Mul(Box<ScalarExpr>, Box<ScalarExpr>),
    Div(Box<ScalarExpr>, Box<ScalarExpr>),
    Pow(Box<ScalarExpr>, i32),
    Func(FuncKind, Box<ScalarExpr>),
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("parse error at byte {offset}: expected {expected}, found {found}")]
pub struct ParseError {
    pub offset: usize,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("unbound identifier `{0}`")]
    Unbound(String),
    #[error(transparent)]
    Jet(#[from] JetError),
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    /// Raw digits with no decimal point or exponent part.
    Integer(i64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eof,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Number(v) => format!("number `{v:?}`"),
            Token::Integer(v) => format!("number `{v}`"),
            Token::Ident(s) => format!("identifier `{s}`"),
            Token::Plus => "`+`".into(),
            Token::Minus => "`-`".into(),
            Token::Star => "`*`".into(),
            Token::Slash => "`/`".into(),
            Token::Caret => "`^`".into(),
            Token::LParen => "`(`".into(),
            Token::RParen => "`)`".into(),
            Token::Eof => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            bytes: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn next(&mut self) -> Result<(usize, Token), ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.pos >= self.bytes.len() {
            return Ok((start, Token::Eof));
        }
        let c = self.bytes[self.pos];
        let tok = match c {
            b'+' => Token::Plus,
            b'-' => Token::Minus,
            b'*' => Token::Star,
            b'/' => Token::Slash,
            b'^' => Token::Caret,
            b'(' => Token::LParen,
            b')' => Token::RParen,
            b'0'..=b'9' | b'.' => return self.number(start),
            c if c.is_ascii_alphabetic() => {
                while self.pos < self.bytes.len()
                    && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                return Ok((start, Token::Ident(self.src[start..self.pos].to_string())));
            }
            other => {
                return Err(ParseError {
                    offset: start,
                    expected: "a token".into(),
                    found: format!("byte `{}`", other as char),
                })
            }
        };
        self.pos += 1;
        Ok((start, tok))
    }

    fn number(&mut self, start: usize) -> Result<(usize, Token), ParseError> {
        let mut saw_dot = false;
        let mut saw_exp = false;
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'0'..=b'9' => self.pos += 1,
                b'.' if !saw_dot && !saw_exp => {
                    saw_dot = true;
                    self.pos += 1;
                }
                b'e' | b'E' if !saw_exp => {
                    saw_exp = true;
                    self.pos += 1;
                    if self.pos < self.bytes.len()
                        && (self.bytes[self.pos] == b'+' || self.bytes[self.pos] == b'-')
                    {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
        let text = &self.src[start..self.pos];
        if !saw_dot && !saw_exp {
            if let Ok(i) = text.parse::<i64>() {
                return Ok((start, Token::Integer(i)));
            }
        }
        match text.parse::<f64>() {
            Ok(v) => Ok((start, Token::Number(v))),
            Err(_) => Err(ParseError {
                offset: start,
                expected: "a number".into(),
                found: format!("`{text}`"),
            }),
        }
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    current: (usize, Token),
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, ParseError> {
        let mut lexer = Lexer::new(src);
        let current = lexer.next()?;
        Ok(Parser { lexer, current })
    }

    fn advance(&mut self) -> Result<Token, ParseError> {
        let next = self.lexer.next()?;
        Ok(std::mem::replace(&mut self.current, next).1)
    }

    fn error(&self, expected: &str) -> ParseError {
        ParseError {
            offset: self.current.0,
            expected: expected.into(),
            found: self.current.1.describe(),
        }
    }

    fn expr(&mut self) -> Result<ScalarExpr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.current.1 {
                Token::Plus => {
                    self.advance()?;
                    lhs = ScalarExpr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Token::Minus => {
                    self.advance()?;
                    lhs = ScalarExpr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<ScalarExpr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.current.1 {
                Token::Star => {
                    self.advance()?;
                    lhs = ScalarExpr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Token::Slash => {
                    self.advance()?;
                    lhs = ScalarExpr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<ScalarExpr, ParseError> {
        if self.current.1 == Token::Minus {
            self.advance()?;
            return Ok(ScalarExpr::Neg(Box::new(self.factor()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<ScalarExpr, ParseError> {
        let base = self.atom()?;
        if self.current.1 != Token::Caret {
            return Ok(base);
        }
        self.advance()?;
        let negative = if self.current.1 == Token::Minus {
            self.advance()?;
            true
        } else {
            false
        };
        match self.advance()? {
            Token::Integer(i) => {
                let exp = i32::try_from(i).map_err(|_| ParseError {
                    offset: self.current.0,
                    expected: "an exponent that fits in 32 bits".into(),
                    found: format!("`{i}`"),
                })?;
                Ok(ScalarExpr::Pow(
                    Box::new(base),
                    if negative { -exp } else { exp },
                ))
            }
            other => Err(ParseError {
                offset: self.current.0,
                expected: "an integer exponent".into(),
                found: other.describe(),
            }),
        }
    }

    fn atom(&mut self) -> Result<ScalarExpr, ParseError> {
        match self.current.1.clone() {
            Token::Number(v) => {
                self.advance()?;
                Ok(ScalarExpr::Number(v))
            }
            Token::Integer(i) => {
                self.advance()?;
                Ok(ScalarExpr::Number(i as f64))
            }
            Token::Ident(name) => {
                let name_offset = self.current.0;
                self.advance()?;
                if self.current.1 == Token::LParen {
                    let func = FuncKind::from_name(&name).ok_or_else(|| ParseError {
                        offset: name_offset,
                        expected: "one of sin, cos, exp, log, sqrt".into(),
                        found: format!("identifier `{name}`"),
                    })?;
                    self.advance()?;
                    let arg = self.expr()?;
                    if self.current.1 != Token::RParen {
                        return Err(self.error("`)`"));
                    }
                    self.advance()?;
                    Ok(ScalarExpr::Func(func, Box::new(arg)))
                } else {
                    Ok(ScalarExpr::Ident(name))
                }
            }
            Token::LParen => {
                self.advance()?;
                let inner = self.expr()?;
                if self.current.1 != Token::RParen {
                    return Err(self.error("`)`"));
                }
                self.advance()?;
                Ok(inner)
            }
            _ => Err(self.error("a number, identifier, or `(`")),
        }
    }
}

/// Parse an expression string into a [`ScalarExpr`].
pub fn parse(source: &str) -> Result<ScalarExpr, ParseError> {
    let mut parser = Parser::new(source)?;
    let expr = parser.expr()?;
    if parser.current.1 != Token::Eof {
        return Err(parser.error("end of input"));
    }
    Ok(expr)
}

impl ScalarExpr {
    fn precedence(&self) -> u8 {
        match self {
            ScalarExpr::Add(..) | ScalarExpr::Sub(..) => 1,
            ScalarExpr::Mul(..) | ScalarExpr::Div(..) => 2,
            ScalarExpr::Neg(..) => 3,
            ScalarExpr::Pow(..) => 4,
            _ => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let prec = self.precedence();
        if prec < min {
            write!(f, "(")?;
        }
        match self {
            ScalarExpr::Number(v) => write!(f, "{v:?}")?,
            ScalarExpr::Ident(s) => write!(f, "{s}")?,
            ScalarExpr::Neg(x) => {
                write!(f, "-")?;
                x.fmt_prec(f, 3)?;
            }
            ScalarExpr::Add(l, r) => {
                l.fmt_prec(f, 1)?;
                write!(f, " + ")?;
                r.fmt_prec(f, 2)?;
            }
            ScalarExpr::Sub(l, r) => {
                l.fmt_prec(f, 1)?;
                write!(f, " - ")?;
                r.fmt_prec(f, 2)?;
            }
            ScalarExpr::Mul(l, r) => {
                l.fmt_prec(f, 2)?;
                write!(f, "*")?;
                r.fmt_prec(f, 3)?;
            }
            ScalarExpr::Div(l, r) => {
                l.fmt_prec(f, 2)?;
                write!(f, "/")?;
                r.fmt_prec(f, 3)?;
            }
            ScalarExpr::Pow(base, exp) => {
                base.fmt_prec(f, 5)?;
                write!(f, "^{exp}")?;
            }
            ScalarExpr::Func(kind, arg) => {
                write!(f, "{}(", kind.name())?;
                arg.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
        }
        if prec < min {
            write!(f, ")")?;
        }
        Ok(())
    }

    /// Collect identifiers that are neither chart coordinates nor parameters.
    pub fn unbound_idents(&self, coords: &[String], params: &HashMap<String, f64>) -> Vec<String> {
        let mut out = Vec::new();
        self.walk_idents(&mut |name| {
            if !coords.iter().any(|c| c == name)
                && !params.contains_key(name)
                && !out.iter().any(|n| n == name)
            {
                out.push(name.to_string());
            }
        });
        out
    }

    fn walk_idents(&self, f: &mut impl FnMut(&str)) {
        match self {
            ScalarExpr::Number(_) => {}
            ScalarExpr::Ident(s) => f(s),
            ScalarExpr::Neg(x) | ScalarExpr::Func(_, x) | ScalarExpr::Pow(x, _) => {
                x.walk_idents(f)
            }
            ScalarExpr::Add(l, r)
            | ScalarExpr::Sub(l, r)
            | ScalarExpr::Mul(l, r)
            | ScalarExpr::Div(l, r) => {
                l.walk_idents(f);
                r.walk_idents(f);
            }
        }
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Evaluate the expression with coordinates bound to jets and parameters to
/// reals. The result is the jet of the composed expression, exact to the
/// common order of the input jets.
pub fn eval_jet(
    expr: &ScalarExpr,
    assignment: &HashMap<String, Jet>,
    params: &HashMap<String, f64>,
) -> Result<Jet, EvalError> {
    let sample = assignment
        .values()
        .next()
        .expect("assignment must bind at least one coordinate");
    let (n, m) = (sample.dim(), sample.order());
    eval_rec(expr, assignment, params, n, m)
}

fn eval_rec(
    expr: &ScalarExpr,
    assignment: &HashMap<String, Jet>,
    params: &HashMap<String, f64>,
    n: usize,
    m: usize,
) -> Result<Jet, EvalError> {
    match expr {
        ScalarExpr::Number(v) => Ok(Jet::constant(*v, n, m)),
        ScalarExpr::Ident(name) => {
            if let Some(jet) = assignment.get(name) {
                Ok(jet.clone())
            } else if let Some(&v) = params.get(name) {
                Ok(Jet::constant(v, n, m))
            } else {
                Err(EvalError::Unbound(name.clone()))
            }
        }
        ScalarExpr::Neg(x) => Ok(eval_rec(x, assignment, params, n, m)?.neg()),
        ScalarExpr::Add(l, r) => Ok(eval_rec(l, assignment, params, n, m)?
            .add(&eval_rec(r, assignment, params, n, m)?)),
        ScalarExpr::Sub(l, r) => Ok(eval_rec(l, assignment, params, n, m)?
            .sub(&eval_rec(r, assignment, params, n, m)?)),
        ScalarExpr::Mul(l, r) => Ok(eval_rec(l, assignment, params, n, m)?
            .mul(&eval_rec(r, assignment, params, n, m)?)),
        ScalarExpr::Div(l, r) => Ok(eval_rec(l, assignment, params, n, m)?
            .div(&eval_rec(r, assignment, params, n, m)?)?),
        ScalarExpr::Pow(base, exp) => {
            Ok(eval_rec(base, assignment, params, n, m)?.pow_int(*exp)?)
        }
        ScalarExpr::Func(kind, arg) => {
            let a = eval_rec(arg, assignment, params, n, m)?;
            Ok(match kind {
                FuncKind::Sin => a.sin(),
                FuncKind::Cos => a.cos(),
                FuncKind::Exp => a.exp(),
                FuncKind::Log => a.ln()?,
                FuncKind::Sqrt => a.sqrt()?,
            })
        }
    }
}

/// Plain floating-point evaluation (no derivatives).
pub fn eval_value(
    expr: &ScalarExpr,
    coords: &[String],
    point: &[f64],
    params: &HashMap<String, f64>,
) -> Result<f64, EvalError> {
    let assignment: HashMap<String, Jet> = coords
        .iter()
        .cloned()
        .zip(Jet::seed(point, 0))
        .collect();
    Ok(eval_jet(expr, &assignment, params)?.value())
}
