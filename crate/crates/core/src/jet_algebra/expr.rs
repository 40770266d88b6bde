//! Expression trees over named real variables.
//!
//! The grammar is infix arithmetic with integer powers and `sqrt`:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' exponent)?
//! exponent:= ['-'] integer | '(' ['-'] integer ')'
//! primary := number | ident | 'sqrt' '(' expr ')' | '(' expr ')'
//! ```

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use super::jet::{jet_compose_chain, Jet3};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Var(usize),
    Const(f64),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Sqrt(Box<Expr>),
    Pow(Box<Expr>, i32),
}

impl Expr {
    pub fn var(i: usize) -> Self {
        Expr::Var(i)
    }

    pub fn constant(c: f64) -> Self {
        Expr::Const(c)
    }

    pub fn sqrt(self) -> Self {
        Expr::Sqrt(Box::new(self))
    }

    pub fn powi(self, k: i32) -> Self {
        Expr::Pow(Box::new(self), k)
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Var(i) => Some(*i),
            Expr::Const(_) => None,
            Expr::Neg(e) | Expr::Sqrt(e) | Expr::Pow(e, _) => e.max_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                match (a.max_var(), b.max_var()) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                }
            }
        }
    }

    /// Real-valued evaluation; the independent path used by the
    /// finite-difference oracle.
    fn eval(&self, point: &[f64], names: &[String]) -> Result<f64> {
        let domain = |e: &Expr| Error::Domain {
            node: Display { expr: e, names }.to_string(),
            point: point.to_vec(),
        };
        Ok(match self {
            Expr::Var(i) => point[*i],
            Expr::Const(c) => *c,
            Expr::Neg(e) => -e.eval(point, names)?,
            Expr::Add(a, b) => a.eval(point, names)? + b.eval(point, names)?,
            Expr::Sub(a, b) => a.eval(point, names)? - b.eval(point, names)?,
            Expr::Mul(a, b) => a.eval(point, names)? * b.eval(point, names)?,
            Expr::Div(a, b) => {
                let num = a.eval(point, names)?;
                let den = b.eval(point, names)?;
                if den == 0.0 {
                    return Err(domain(self));
                }
                num / den
            }
            Expr::Sqrt(e) => {
                let x = e.eval(point, names)?;
                if !(x > 0.0) {
                    return Err(domain(self));
                }
                x.sqrt()
            }
            Expr::Pow(e, k) => {
                let x = e.eval(point, names)?;
                if *k < 0 && x == 0.0 {
                    return Err(domain(self));
                }
                x.powi(*k)
            }
        })
    }

    fn jet(&self, n: usize, vars: &[Jet3], point: &[f64], names: &[String]) -> Result<Jet3> {
        let domain = |e: &Expr| Error::Domain {
            node: Display { expr: e, names }.to_string(),
            point: point.to_vec(),
        };
        let rec = |e: &Expr| e.jet(n, vars, point, names);
        Ok(match self {
            Expr::Var(i) => vars[*i].clone(),
            Expr::Const(c) => Jet3::constant(n, *c),
            Expr::Neg(e) => -rec(e)?,
            Expr::Add(a, b) => rec(a)? + rec(b)?,
            Expr::Sub(a, b) => rec(a)? - rec(b)?,
            Expr::Mul(a, b) => rec(a)? * rec(b)?,
            Expr::Div(a, b) => {
                let num = rec(a)?;
                let den = rec(b)?;
                if den.value() == 0.0 {
                    return Err(domain(self));
                }
                num / den
            }
            Expr::Sqrt(e) => rec(e)?.try_sqrt().ok_or_else(|| domain(self))?,
            Expr::Pow(e, k) => rec(e)?.try_powi(*k).ok_or_else(|| domain(self))?,
        })
    }
}

macro_rules! expr_binop {
    ($trait:ident, $method:ident, $variant:ident) => {
        impl $trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$variant(Box::new(self), Box::new(rhs))
            }
        }
        impl $trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::$variant(Box::new(self), Box::new(Expr::Const(rhs)))
            }
        }
    };
}

expr_binop!(Add, add, Add);
expr_binop!(Sub, sub, Sub);
expr_binop!(Mul, mul, Mul);
expr_binop!(Div, div, Div);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

struct Display<'a> {
    expr: &'a Expr,
    names: &'a [String],
}

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = self.names;
        let sub = |e| Display { expr: e, names };
        match self.expr {
            Expr::Var(i) => match self.names.get(*i) {
                Some(name) => write!(f, "{name}"),
                None => write!(f, "v{i}"),
            },
            Expr::Const(c) => {
                if *c < 0.0 {
                    write!(f, "({c})")
                } else {
                    write!(f, "{c}")
                }
            }
            Expr::Neg(e) => write!(f, "(-{})", sub(e)),
            Expr::Add(a, b) => write!(f, "({} + {})", sub(a), sub(b)),
            Expr::Sub(a, b) => write!(f, "({} - {})", sub(a), sub(b)),
            Expr::Mul(a, b) => write!(f, "({} * {})", sub(a), sub(b)),
            Expr::Div(a, b) => write!(f, "({} / {})", sub(a), sub(b)),
            Expr::Sqrt(e) => write!(f, "sqrt({})", sub(e)),
            Expr::Pow(e, k) => {
                if *k < 0 {
                    write!(f, "{}^({k})", sub(e))
                } else {
                    write!(f, "{}^{k}", sub(e))
                }
            }
        }
    }
}

/// An expression together with the names of the variables it ranges over.
#[derive(Clone, Debug, PartialEq)]
pub struct Expression {
    root: Expr,
    names: Vec<String>,
}

impl Expression {
    /// Wraps a tree, checking that every variable index is in range.
    pub fn new(root: Expr, names: &[&str]) -> Result<Self> {
        if let Some(max) = root.max_var() {
            if max >= names.len() {
                return Err(Error::DimensionMismatch {
                    expected: names.len(),
                    found: max + 1,
                });
            }
        }
        Ok(Self {
            root,
            names: names.iter().map(|s| s.to_string()).collect(),
        })
    }

    /// Parses `text` with the given variable names.
    pub fn parse(text: &str, names: &[&str]) -> Result<Self> {
        let root = Parser::new(text, names).parse()?;
        Self::new(root, names)
    }

    /// Parses an expression in the parameter variables `u1..un`.
    pub fn parse_chart(text: &str, n: usize) -> Result<Self> {
        let names = chart_variable_names(n);
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        Self::parse(text, &refs)
    }

    /// Parses an expression in the single ambient coordinate `x0`.
    pub fn parse_x0(text: &str) -> Result<Self> {
        Self::parse(text, &["x0"])
    }

    /// The expression `u^1 * ... ` style builder helpers use `u1..un` names.
    pub fn chart(root: Expr, n: usize) -> Result<Self> {
        let names = chart_variable_names(n);
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        Self::new(root, &refs)
    }

    pub fn x0(root: Expr) -> Result<Self> {
        Self::new(root, &["x0"])
    }

    pub fn arity(&self) -> usize {
        self.names.len()
    }

    pub fn root(&self) -> &Expr {
        &self.root
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    fn check_point(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.arity() {
            return Err(Error::DimensionMismatch {
                expected: self.arity(),
                found: point.len(),
            });
        }
        Ok(())
    }

    /// Plain floating-point evaluation.
    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        self.check_point(point)?;
        self.root.eval(point, &self.names)
    }

    /// Evaluates with each variable replaced by a jet (all over the same
    /// variable set), i.e. the jet of the composition.
    pub fn eval_jets(&self, vars: &[Jet3]) -> Result<Jet3> {
        if vars.len() != self.arity() {
            return Err(Error::DimensionMismatch {
                expected: self.arity(),
                found: vars.len(),
            });
        }
        let point: Vec<f64> = vars.iter().map(Jet3::value).collect();
        let n = vars.first().map_or(0, Jet3::nvars);
        self.root.jet(n, vars, &point, &self.names)
    }

    /// Value and first three derivatives of a univariate expression at `x`.
    pub fn univariate_derivatives(&self, x: f64) -> Result<[f64; 4]> {
        let j = evaluate_jet(self, &[x])?;
        Ok([j.value(), j.grad(0), j.hess(0, 0), j.third(0, 0, 0)])
    }

    /// Jet of `self(inner)` for a univariate expression, by the chain rule.
    pub fn compose_univariate(&self, inner: &Jet3) -> Result<Jet3> {
        if self.arity() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: self.arity(),
            });
        }
        let outer = self.univariate_derivatives(inner.value())?;
        Ok(jet_compose_chain(outer, inner))
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Display {
            expr: &self.root,
            names: &self.names,
        }
        .fmt(f)
    }
}

pub fn chart_variable_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("u{i}")).collect()
}

/// Exact order-3 jet of `expr` at `point`.
pub fn evaluate_jet(expr: &Expression, point: &[f64]) -> Result<Jet3> {
    expr.check_point(point)?;
    let n = point.len();
    let vars: Vec<Jet3> = point
        .iter()
        .enumerate()
        .map(|(i, &x)| Jet3::variable(n, i, x))
        .collect();
    expr.root.jet(n, &vars, point, &expr.names)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    names: &'a [&'a str],
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, names: &'a [&'a str]) -> Self {
        Self { src, pos: 0, names }
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            position: self.pos,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn parse(mut self) -> Result<Expr> {
        let e = self.expr()?;
        if self.peek().is_some() {
            return self.err("unexpected trailing input");
        }
        Ok(e)
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = lhs + self.term()?;
            } else if self.eat('-') {
                lhs = lhs - self.term()?;
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = lhs * self.unary()?;
            } else if self.eat('/') {
                lhs = lhs / self.unary()?;
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            Ok(-self.unary()?)
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.eat('^') {
            let k = self.exponent()?;
            Ok(base.powi(k))
        } else {
            Ok(base)
        }
    }

    fn exponent(&mut self) -> Result<i32> {
        let paren = self.eat('(');
        let negative = self.eat('-');
        self.skip_ws();
        let start = self.pos;
        while matches!(self.src[self.pos..].chars().next(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected an integer exponent");
        }
        let magnitude: i32 = match self.src[start..self.pos].parse() {
            Ok(v) => v,
            Err(_) => return self.err("exponent out of range"),
        };
        if paren {
            self.expect(')')?;
        }
        Ok(if negative { -magnitude } else { magnitude })
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut i = self.pos;
        while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
            i += 1;
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            if j < bytes.len() && bytes[j].is_ascii_digit() {
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        self.pos = i;
        match self.src[start..i].parse::<f64>() {
            Ok(v) => Ok(Expr::Const(v)),
            Err(_) => {
                self.pos = start;
                self.err("malformed number")
            }
        }
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                let start = self.pos;
                while matches!(self.src[self.pos..].chars().next(), Some(c) if c.is_ascii_alphanumeric() || c == '_')
                {
                    self.pos += 1;
                }
                let ident = &self.src[start..self.pos];
                if ident == "sqrt" {
                    self.expect('(')?;
                    let e = self.expr()?;
                    self.expect(')')?;
                    return Ok(e.sqrt());
                }
                match self.names.iter().position(|n| *n == ident) {
                    Some(i) => Ok(Expr::Var(i)),
                    None => {
                        self.pos = start;
                        self.err(format!("unknown identifier `{ident}`"))
                    }
                }
            }
            Some(c) => self.err(format!("unexpected character `{c}`")),
            None => self.err("unexpected end of input"),
        }
    }
}
