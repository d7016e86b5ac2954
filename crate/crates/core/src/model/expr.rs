//! Expression text → AST by precedence climbing.
//!
//! Grammar: `+ -` < `* /` < unary sign < `^` (right associative, exponent a
//! nonnegative integer). Literals are exact decimals or integers.

use num_traits::{Signed, ToPrimitive, Zero};

use super::poly::Poly;
use crate::exactmath::rational::parse_decimal;
use crate::{Error, Rational};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(Rational),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn tokenize(s: &str) -> Result<Vec<(Tok, usize)>, Error> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent suffix: 1e-3
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '-' || chars[j] == '+') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let lit: String = chars[start..i].iter().collect();
            let v = parse_decimal(&lit)
                .ok_or_else(|| Error::parse(1, col, format!("bad number `{lit}`")))?;
            out.push((Tok::Num(v), col));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
        } else if "+-*/^".contains(c) {
            out.push((Tok::Op(c), col));
            i += 1;
        } else if c == '(' {
            out.push((Tok::LParen, col));
            i += 1;
        } else if c == ')' {
            out.push((Tok::RParen, col));
            i += 1;
        } else {
            return Err(Error::parse(1, col, format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end_col: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|(_, c)| *c).unwrap_or(self.end_col)
    }

    fn binop(&self) -> Option<(char, u8, bool)> {
        match self.peek() {
            Some(Tok::Op(c @ ('+' | '-'))) => Some((*c, 1, false)),
            Some(Tok::Op(c @ ('*' | '/'))) => Some((*c, 2, false)),
            Some(Tok::Op('^')) => Some(('^', 4, true)),
            _ => None,
        }
    }

    fn expr(&mut self, min_prec: u8) -> Result<Expr, Error> {
        let mut lhs = self.prefix()?;
        while let Some((op, prec, right)) = self.binop() {
            if prec < min_prec {
                break;
            }
            let op_col = self.col();
            self.pos += 1;
            let rhs = self.expr(if right { prec } else { prec + 1 })?;
            lhs = match op {
                '+' => Expr::Add(Box::new(lhs), Box::new(rhs)),
                '-' => Expr::Sub(Box::new(lhs), Box::new(rhs)),
                '*' => Expr::Mul(Box::new(lhs), Box::new(rhs)),
                '/' => Expr::Div(Box::new(lhs), Box::new(rhs)),
                _ => {
                    let k = rhs
                        .constant_value()
                        .filter(|r| r.is_integer() && !r.is_negative())
                        .and_then(|r| r.to_integer().to_u32())
                        .ok_or_else(|| {
                            Error::parse(1, op_col, "exponent must be a nonnegative integer")
                        })?;
                    Expr::Pow(Box::new(lhs), k)
                }
            };
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr, Error> {
        let col = self.col();
        match self.peek().cloned() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.expr(3)?)))
            }
            Some(Tok::Op('+')) => {
                self.pos += 1;
                self.expr(3)
            }
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(Expr::Var(s))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr(0)?;
                match self.peek() {
                    Some(Tok::RParen) => {
                        self.pos += 1;
                        Ok(e)
                    }
                    _ => Err(Error::parse(1, self.col(), "expected `)`")),
                }
            }
            Some(t) => Err(Error::parse(1, col, format!("unexpected token {t:?}"))),
            None => Err(Error::parse(1, col, "unexpected end of expression")),
        }
    }
}

/// Parse one expression; errors carry line 1 and the 1-based column.
pub fn parse_expr(text: &str) -> Result<Expr, Error> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0, end_col: text.chars().count() + 1 };
    let e = p.expr(0)?;
    if p.pos != p.toks.len() {
        return Err(Error::parse(1, p.col(), "unexpected trailing input"));
    }
    Ok(e)
}

/// Parse `lhs <= rhs` or `lhs >= rhs` into an expression `e` meaning `e ≤ 0`.
pub fn parse_le_zero(text: &str) -> Result<Expr, Error> {
    if let Some((l, r)) = text.split_once("<=") {
        let off = l.chars().count() + 2;
        let lhs = parse_expr(l)?;
        let rhs = parse_expr(r).map_err(|e| shift(e, off))?;
        return Ok(Expr::Sub(Box::new(lhs), Box::new(rhs)));
    }
    if let Some((l, r)) = text.split_once(">=") {
        let off = l.chars().count() + 2;
        let lhs = parse_expr(l)?;
        let rhs = parse_expr(r).map_err(|e| shift(e, off))?;
        return Ok(Expr::Sub(Box::new(rhs), Box::new(lhs)));
    }
    Err(Error::parse(1, 1, "region constraint must contain `<=` or `>=`"))
}

fn shift(e: Error, off: usize) -> Error {
    match e {
        Error::Parse { line, col, msg } => Error::Parse { line, col: col + off, msg },
        e => e,
    }
}

impl Expr {
    /// Value when the expression contains no variables.
    pub fn constant_value(&self) -> Option<Rational> {
        Some(match self {
            Expr::Num(v) => v.clone(),
            Expr::Var(_) => return None,
            Expr::Neg(a) => -a.constant_value()?,
            Expr::Add(a, b) => a.constant_value()? + b.constant_value()?,
            Expr::Sub(a, b) => a.constant_value()? - b.constant_value()?,
            Expr::Mul(a, b) => a.constant_value()? * b.constant_value()?,
            Expr::Div(a, b) => {
                let d = b.constant_value()?;
                if d.is_zero() {
                    return None;
                }
                a.constant_value()? / d
            }
            Expr::Pow(a, k) => num_traits::pow(a.constant_value()?, *k as usize),
        })
    }

    pub fn variables(&self, out: &mut Vec<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(s) => {
                if !out.contains(s) {
                    out.push(s.clone());
                }
            }
            Expr::Neg(a) | Expr::Pow(a, _) => a.variables(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.variables(out);
                b.variables(out);
            }
        }
    }

    /// Exact polynomial; `lookup` maps a variable name to its index.
    /// Division is allowed only by nonzero constants.
    pub fn to_poly(&self, nvars: usize, lookup: &dyn Fn(&str) -> Option<usize>) -> Result<Poly, Error> {
        Ok(match self {
            Expr::Num(v) => Poly::constant(nvars, v.clone()),
            Expr::Var(s) => {
                let i = lookup(s).ok_or_else(|| Error::UnknownVariable(s.clone()))?;
                Poly::var(nvars, i)
            }
            Expr::Neg(a) => -a.to_poly(nvars, lookup)?,
            Expr::Add(a, b) => a.to_poly(nvars, lookup)? + b.to_poly(nvars, lookup)?,
            Expr::Sub(a, b) => a.to_poly(nvars, lookup)? - b.to_poly(nvars, lookup)?,
            Expr::Mul(a, b) => a.to_poly(nvars, lookup)? * b.to_poly(nvars, lookup)?,
            Expr::Div(a, b) => {
                let d = b.to_poly(nvars, lookup)?;
                match d.as_constant() {
                    Some(c) if !c.is_zero() => a.to_poly(nvars, lookup)?.scale(&(Rational::from_integer(1.into()) / c)),
                    Some(_) => return Err(Error::parse(1, 1, "division by zero")),
                    None => return Err(Error::parse(1, 1, "division by a non-constant is not polynomial")),
                }
            }
            Expr::Pow(a, k) => a.to_poly(nvars, lookup)?.pow(*k),
        })
    }

    /// Floating-point evaluation (rational functions allowed); `None` on an
    /// unknown variable.
    pub fn eval_f64(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Option<f64> {
        Some(match self {
            Expr::Num(v) => v.to_f64()?,
            Expr::Var(s) => lookup(s)?,
            Expr::Neg(a) => -a.eval_f64(lookup)?,
            Expr::Add(a, b) => a.eval_f64(lookup)? + b.eval_f64(lookup)?,
            Expr::Sub(a, b) => a.eval_f64(lookup)? - b.eval_f64(lookup)?,
            Expr::Mul(a, b) => a.eval_f64(lookup)? * b.eval_f64(lookup)?,
            Expr::Div(a, b) => a.eval_f64(lookup)? / b.eval_f64(lookup)?,
            Expr::Pow(a, k) => a.eval_f64(lookup)?.powi(*k as i32),
        })
    }
}
