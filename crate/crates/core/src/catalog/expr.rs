//! Arithmetic expressions over the coordinates `x0..x3` and named
//! parameters, evaluated on plain reals or on Taylor series.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := primary ("^" exponent)?
//! exponent:= "-" exponent | power          (must fold to an integer constant)
//! primary := number | ident | func "(" expr ")" | "(" expr ")"
//! ```

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::taylor::JetScalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Ln,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "ln" => Func::Ln,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Ln => "ln",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Param(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

/// Prints fully parenthesized, so that re-parsing gives back the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(i) => write!(f, "x{i}"),
            Expr::Param(p) => write!(f, "{p}"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Pow(b, n) if *n < 0 => write!(f, "({b}^(-{}))", -(*n as i64)),
            Expr::Pow(b, n) => write!(f, "({b}^{n})"),
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}

/// Values an expression can be evaluated on.
pub trait EvalValue: Sized + Clone {
    fn constant_like(&self, c: f64) -> Self;
    fn add(&self, o: &Self) -> Result<Self>;
    fn sub(&self, o: &Self) -> Result<Self>;
    fn mul(&self, o: &Self) -> Result<Self>;
    fn div(&self, o: &Self) -> Result<Self>;
    fn neg(&self) -> Self;
    fn powi(&self, n: i32) -> Result<Self>;
    fn apply(&self, f: Func) -> Result<Self>;
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!("{what} is not finite")))
    }
}

impl EvalValue for f64 {
    fn constant_like(&self, c: f64) -> Self {
        c
    }
    fn add(&self, o: &Self) -> Result<Self> {
        Ok(self + o)
    }
    fn sub(&self, o: &Self) -> Result<Self> {
        Ok(self - o)
    }
    fn mul(&self, o: &Self) -> Result<Self> {
        Ok(self * o)
    }
    fn div(&self, o: &Self) -> Result<Self> {
        if *o == 0.0 {
            return Err(Error::SingularPoint("division by zero".into()));
        }
        finite(self / o, "quotient")
    }
    fn neg(&self) -> Self {
        -self
    }
    fn powi(&self, n: i32) -> Result<Self> {
        if n < 0 && *self == 0.0 {
            return Err(Error::SingularPoint("negative power of zero".into()));
        }
        finite(f64::powi(*self, n), "power")
    }
    fn apply(&self, f: Func) -> Result<Self> {
        let v = *self;
        match f {
            Func::Sin => Ok(v.sin()),
            Func::Cos => Ok(v.cos()),
            Func::Exp => finite(v.exp(), "exp"),
            Func::Sqrt if v < 0.0 => Err(Error::Domain(format!("sqrt of negative value {v}"))),
            Func::Sqrt => Ok(v.sqrt()),
            Func::Ln if v <= 0.0 => Err(Error::Domain(format!("ln of nonpositive value {v}"))),
            Func::Ln => Ok(v.ln()),
        }
    }
}

impl EvalValue for JetScalar {
    fn constant_like(&self, c: f64) -> Self {
        JetScalar::constant(c, self.order(), self.base_point()).expect("order already validated")
    }
    fn add(&self, o: &Self) -> Result<Self> {
        self.try_add(o)
    }
    fn sub(&self, o: &Self) -> Result<Self> {
        self.try_sub(o)
    }
    fn mul(&self, o: &Self) -> Result<Self> {
        self.try_mul(o)
    }
    fn div(&self, o: &Self) -> Result<Self> {
        self.try_div(o)
    }
    fn neg(&self) -> Self {
        -self.clone()
    }
    fn powi(&self, n: i32) -> Result<Self> {
        JetScalar::powi(self, n)
    }
    fn apply(&self, f: Func) -> Result<Self> {
        match f {
            Func::Sin => Ok(self.sin()),
            Func::Cos => Ok(self.cos()),
            Func::Exp => Ok(self.exp()),
            Func::Sqrt => self.try_sqrt(),
            Func::Ln => self.ln(),
        }
    }
}

impl Expr {
    /// Evaluate with coordinate values `x` and a parameter table.
    pub fn eval<V: EvalValue>(&self, x: &[V; 4], params: &BTreeMap<String, f64>) -> Result<V> {
        Ok(match self {
            Expr::Num(v) => x[0].constant_like(*v),
            Expr::Var(i) => x[*i].clone(),
            Expr::Param(p) => {
                let v = params.get(p).ok_or_else(|| Error::Config(format!("parameter `{p}` has no value")))?;
                x[0].constant_like(*v)
            }
            Expr::Neg(e) => e.eval(x, params)?.neg(),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(x, params)?, b.eval(x, params)?);
                match op {
                    BinOp::Add => a.add(&b)?,
                    BinOp::Sub => a.sub(&b)?,
                    BinOp::Mul => a.mul(&b)?,
                    BinOp::Div => a.div(&b)?,
                }
            }
            Expr::Pow(b, n) => b.eval(x, params)?.powi(*n)?,
            Expr::Call(f, e) => e.eval(x, params)?.apply(*f)?,
        })
    }

    /// Parameter names referenced by the expression.
    pub fn params(&self, out: &mut Vec<String>) {
        match self {
            Expr::Param(p) if !out.contains(p) => out.push(p.clone()),
            Expr::Neg(e) | Expr::Pow(e, _) | Expr::Call(_, e) => e.params(out),
            Expr::Bin(_, a, b) => {
                a.params(out);
                b.params(out);
            }
            _ => {}
        }
    }

    pub fn is_zero_literal(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 0.0)
    }
}

/// Parse `text`; identifiers other than `x0..x3`, `pi` and function names
/// must appear in `params`.
pub fn parse_expression(text: &str, params: &[&str]) -> Result<Expr> {
    let mut p = Parser { src: text, pos: 0, params };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < text.len() {
        return Err(p.syntax(format!("unexpected `{}`", p.rest_char())));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    params: &'a [&'a str],
}

impl Parser<'_> {
    fn syntax(&self, message: String) -> Error {
        Error::Syntax { offset: self.pos, message }
    }

    fn rest_char(&self) -> char {
        self.src[self.pos..].chars().next().unwrap_or(' ')
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
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

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some('+') => BinOp::Add,
                Some('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some('*') => BinOp::Mul,
                Some('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if !self.eat('^') {
            return Ok(base);
        }
        self.skip_ws();
        let start = self.pos;
        let exponent = self.exponent()?;
        let n = fold_constant(&exponent).ok_or(Error::NonIntegerExponent { offset: start })?;
        if n.fract() != 0.0 || n.abs() > i32::MAX as f64 {
            return Err(Error::NonIntegerExponent { offset: start });
        }
        Ok(Expr::Pow(Box::new(base), n as i32))
    }

    fn exponent(&mut self) -> Result<Expr> {
        if self.eat('-') {
            Ok(Expr::Neg(Box::new(self.exponent()?)))
        } else {
            self.power()
        }
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.syntax("expected `)`".into()));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_alphabetic() || c == '_' => self.ident(),
            Some(c) => Err(self.syntax(format!("unexpected `{c}`"))),
            None => Err(self.syntax("unexpected end of input".into())),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut end = start;
        while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
            end += 1;
        }
        if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
            let mut k = end + 1;
            if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                k += 1;
            }
            if k < bytes.len() && bytes[k].is_ascii_digit() {
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    k += 1;
                }
                end = k;
            }
        }
        let text = &self.src[start..end];
        let v: f64 =
            text.parse().map_err(|_| Error::Syntax { offset: start, message: format!("malformed number `{text}`") })?;
        self.pos = end;
        Ok(Expr::Num(v))
    }

    fn ident(&mut self) -> Result<Expr> {
        let start = self.pos;
        let len = self.src[start..]
            .char_indices()
            .find(|(_, c)| !(c.is_alphanumeric() || *c == '_'))
            .map_or(self.src.len() - start, |(i, _)| i);
        let name = &self.src[start..start + len];
        self.pos += len;
        if let Some(f) = Func::from_name(name) {
            if !self.eat('(') {
                return Err(self.syntax(format!("expected `(` after `{name}`")));
            }
            let arg = self.expr()?;
            if !self.eat(')') {
                return Err(self.syntax("expected `)`".into()));
            }
            return Ok(Expr::Call(f, Box::new(arg)));
        }
        match name {
            "x0" => Ok(Expr::Var(0)),
            "x1" => Ok(Expr::Var(1)),
            "x2" => Ok(Expr::Var(2)),
            "x3" => Ok(Expr::Var(3)),
            "pi" => Ok(Expr::Num(std::f64::consts::PI)),
            _ if self.params.contains(&name) => Ok(Expr::Param(name.to_string())),
            _ => Err(Error::UnknownIdentifier { name: name.to_string(), offset: start }),
        }
    }
}

fn fold_constant(e: &Expr) -> Option<f64> {
    match e {
        Expr::Num(v) => Some(*v),
        Expr::Neg(a) => fold_constant(a).map(|v| -v),
        Expr::Pow(b, n) => fold_constant(b).map(|v| v.powi(*n)),
        Expr::Bin(op, a, b) => {
            let (a, b) = (fold_constant(a)?, fold_constant(b)?);
            Some(match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a / b,
            })
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval_at(text: &str, x: [f64; 4], params: &[(&str, f64)]) -> f64 {
        let names: Vec<&str> = params.iter().map(|p| p.0).collect();
        let table = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        parse_expression(text, &names).unwrap().eval(&x, &table).unwrap()
    }

    #[test]
    fn schwarzschild_lapse() {
        let v = eval_at("-(1-2*m/x1)", [0.0, 3.0, 0.0, 0.0], &[("m", 1.0)]);
        assert!((v + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn exponent_binds_before_product_and_negation() {
        assert_eq!(eval_at("2*x1^2", [0.0, 3.0, 0.0, 0.0], &[]), 18.0);
        assert_eq!(eval_at("-x1^2", [0.0, 3.0, 0.0, 0.0], &[]), -9.0);
        assert_eq!(eval_at("2^3^2", [0.0; 4], &[]), 512.0);
        assert_eq!(eval_at("x1^-1", [0.0, 4.0, 0.0, 0.0], &[]), 0.25);
        assert_eq!(eval_at("10 - 4 - 3", [0.0; 4], &[]), 3.0);
        assert_eq!(eval_at("12 / 3 / 2", [0.0; 4], &[]), 2.0);
    }

    #[test]
    fn pythagorean_identity() {
        for x2 in [-2.0, 0.1, 0.7, 3.3] {
            let v = eval_at("sin(x2)^2 + cos(x2)^2", [0.0, 0.0, x2, 0.0], &[]);
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn errors_carry_offsets() {
        assert_eq!(parse_expression("1 + foo", &[]), Err(Error::UnknownIdentifier { name: "foo".into(), offset: 4 }));
        assert_eq!(parse_expression("x1^1.5", &[]), Err(Error::NonIntegerExponent { offset: 3 }));
        assert_eq!(parse_expression("x1^m", &["m"]), Err(Error::NonIntegerExponent { offset: 3 }));
        assert!(matches!(parse_expression("(1 + 2", &[]), Err(Error::Syntax { offset: 6, .. })));
        assert!(matches!(parse_expression("1 + * 2", &[]), Err(Error::Syntax { offset: 4, .. })));
        assert!(matches!(parse_expression("", &[]), Err(Error::Syntax { offset: 0, .. })));
        assert!(matches!(parse_expression("2 3", &[]), Err(Error::Syntax { offset: 2, .. })));
    }

    #[test]
    fn pretty_print_round_trips() {
        for text in
            ["-(1-2*m/x1)", "x1^2*sin(x2)^2", "exp(2*p*ln(x0))", "1/(1 - 2*m/x1) + x3^-2 - -x0", "1e-3*pi + 2.5e10"]
        {
            let e = parse_expression(text, &["m", "p"]).unwrap();
            let again = parse_expression(&e.to_string(), &["m", "p"]).unwrap();
            assert_eq!(e, again, "{text} -> {e}");
        }
    }

    #[test]
    fn numeric_domain_errors() {
        let none = BTreeMap::new();
        let e = parse_expression("ln(x0)", &[]).unwrap();
        assert!(matches!(e.eval(&[0.0; 4], &none), Err(Error::Domain(_))));
        let e = parse_expression("1/x0", &[]).unwrap();
        assert!(matches!(e.eval(&[0.0; 4], &none), Err(Error::SingularPoint(_))));
    }
}
