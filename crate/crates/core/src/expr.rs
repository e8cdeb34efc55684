//! A small expression language for operators on finite-dimensional spaces.
//!
//! An operator is either one scalar expression in `x`, applied to every
//! coordinate, or a bracketed list `[e1, ..., em]` in the coordinates
//! `x1..xn`. Both forms may use `norm` (the domain norm of the argument),
//! `i`, `pi`, numbers, `+ - * / ^`, and the functions
//! `sin cos tanh exp sqrt abs re im conj`.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::opspace::OperatorHandle;
use crate::spaces::{FiniteSpace, NormType};

pub const MAX_INPUT_LEN: usize = 4096;
pub const MAX_DEPTH: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("unexpected character `{ch}` at {pos}")]
    UnexpectedChar { ch: char, pos: usize },
    #[error("unexpected token at {pos}: expected {expected}")]
    Unexpected { pos: usize, expected: &'static str },
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("coordinate x{index} out of range for dimension {dim}")]
    CoordinateOutOfRange { index: usize, dim: usize },
    #[error("expression nests deeper than {MAX_DEPTH}")]
    TooDeep,
    #[error("expression longer than {MAX_INPUT_LEN} bytes")]
    TooLong,
    #[error("empty expression")]
    Empty,
    #[error("codomain must be given explicitly for a weighted norm of another dimension")]
    CodomainRequired,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(text: &str) -> Result<Vec<(Token, usize)>, ExprError> {
    if text.len() > MAX_INPUT_LEN {
        return Err(ExprError::TooLong);
    }
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v = s
                .parse::<f64>()
                .map_err(|_| ExprError::UnexpectedChar { ch: c, pos: start })?;
            out.push((Token::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Token::Ident(chars[start..i].iter().collect()), start));
        } else if "+-*/^(),[]".contains(c) {
            out.push((Token::Op(c), i));
            i += 1;
        } else {
            return Err(ExprError::UnexpectedChar { ch: c, pos: i });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Sin,
    Cos,
    Tanh,
    Exp,
    Sqrt,
    Abs,
    Re,
    Im,
    Conj,
}

#[derive(Debug, Clone, PartialEq)]
enum Expr {
    Const(C64),
    Current,
    Coord(usize),
    Norm,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    depth: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|t| &t.0)
    }

    fn here(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |t| t.1)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Token::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: char, expected: &'static str) -> Result<(), ExprError> {
        if self.eat(op) {
            Ok(())
        } else {
            Err(ExprError::Unexpected {
                pos: self.here(),
                expected,
            })
        }
    }

    fn enter(&mut self) -> Result<(), ExprError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(ExprError::TooDeep);
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                break;
            }
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                break;
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        self.enter()?;
        let e = if self.eat('-') {
            Expr::Neg(Box::new(self.unary()?))
        } else if self.eat('+') {
            self.unary()?
        } else {
            self.power()?
        };
        self.depth -= 1;
        Ok(e)
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.eat('^') {
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let pos = self.here();
        match self.peek().cloned() {
            Some(Token::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Const(C64::new(v, 0.0)))
            }
            Some(Token::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')', "`)`")?;
                Ok(e)
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                if self.peek() == Some(&Token::Op('(')) {
                    let f = match name.as_str() {
                        "sin" => Func::Sin,
                        "cos" => Func::Cos,
                        "tanh" => Func::Tanh,
                        "exp" => Func::Exp,
                        "sqrt" => Func::Sqrt,
                        "abs" => Func::Abs,
                        "re" => Func::Re,
                        "im" => Func::Im,
                        "conj" => Func::Conj,
                        _ => return Err(ExprError::UnknownFunction(name)),
                    };
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect(')', "`)`")?;
                    return Ok(Expr::Call(f, Box::new(arg)));
                }
                match name.as_str() {
                    "x" => Ok(Expr::Current),
                    "i" => Ok(Expr::Const(C64::new(0.0, 1.0))),
                    "pi" => Ok(Expr::Const(C64::new(std::f64::consts::PI, 0.0))),
                    "norm" => Ok(Expr::Norm),
                    _ => match name.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()) {
                        Some(k) if k >= 1 => Ok(Expr::Coord(k - 1)),
                        _ => Err(ExprError::UnknownVariable(name)),
                    },
                }
            }
            _ => Err(ExprError::Unexpected {
                pos,
                expected: "a number, variable, function or `(`",
            }),
        }
    }
}

impl Expr {
    fn eval(&self, x: &[C64], current: C64, norm: f64) -> C64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Current => current,
            Expr::Coord(k) => x[*k],
            Expr::Norm => C64::new(norm, 0.0),
            Expr::Neg(a) => -a.eval(x, current, norm),
            Expr::Add(a, b) => a.eval(x, current, norm) + b.eval(x, current, norm),
            Expr::Sub(a, b) => a.eval(x, current, norm) - b.eval(x, current, norm),
            Expr::Mul(a, b) => a.eval(x, current, norm) * b.eval(x, current, norm),
            Expr::Div(a, b) => a.eval(x, current, norm) / b.eval(x, current, norm),
            Expr::Pow(a, b) => {
                let base = a.eval(x, current, norm);
                let e = b.eval(x, current, norm);
                if e.im == 0.0 && e.re.fract() == 0.0 && e.re.abs() <= 64.0 {
                    base.powi(e.re as i32)
                } else {
                    base.powc(e)
                }
            }
            Expr::Call(f, a) => {
                let v = a.eval(x, current, norm);
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Tanh => v.tanh(),
                    Func::Exp => v.exp(),
                    Func::Sqrt => v.sqrt(),
                    Func::Abs => C64::new(v.norm(), 0.0),
                    Func::Re => C64::new(v.re, 0.0),
                    Func::Im => C64::new(v.im, 0.0),
                    Func::Conj => v.conj(),
                }
            }
        }
    }

    fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Neg(a) | Expr::Call(_, a) => a.visit(f),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            _ => {}
        }
    }
}

/// A parsed operator expression.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorExpr {
    source: String,
    components: Option<Vec<Expr>>,
    scalar: Option<Expr>,
}

impl OperatorExpr {
    pub fn parse(text: &str) -> Result<Self, ExprError> {
        let tokens = tokenize(text)?;
        if tokens.is_empty() {
            return Err(ExprError::Empty);
        }
        let mut p = Parser {
            tokens,
            pos: 0,
            depth: 0,
            end: text.len(),
        };
        let (components, scalar) = if p.eat('[') {
            let mut items = vec![p.expr()?];
            while p.eat(',') {
                items.push(p.expr()?);
            }
            p.expect(']', "`]` or `,`")?;
            (Some(items), None)
        } else {
            (None, Some(p.expr()?))
        };
        if p.pos != p.tokens.len() {
            return Err(ExprError::Unexpected {
                pos: p.here(),
                expected: "end of input",
            });
        }
        if let Some(items) = &components {
            for e in items {
                let mut bad = false;
                e.visit(&mut |n| bad |= matches!(n, Expr::Current));
                if bad {
                    return Err(ExprError::UnknownVariable("x (use x1..xn in vector form)".into()));
                }
            }
        }
        Ok(Self {
            source: text.trim().to_string(),
            components,
            scalar,
        })
    }

    /// Number of output coordinates, or `None` for the componentwise form.
    pub fn output_dimension(&self) -> Option<usize> {
        self.components.as_ref().map(|c| c.len())
    }

    fn max_coordinate(&self) -> Option<usize> {
        let mut m: Option<usize> = None;
        let mut see = |e: &Expr| {
            if let Expr::Coord(k) = e {
                m = Some(m.map_or(*k, |v: usize| v.max(*k)));
            }
        };
        for e in self.components.iter().flatten().chain(self.scalar.iter()) {
            e.visit(&mut see);
        }
        m
    }

    /// Builds the operator on `domain`; the codomain defaults to the domain's
    /// field and norm at the output dimension.
    pub fn to_operator(&self, domain: &FiniteSpace, codomain: Option<&FiniteSpace>) -> Result<OperatorHandle, ExprError> {
        let dim = domain.dimension();
        if let Some(k) = self.max_coordinate() {
            if k >= dim {
                return Err(ExprError::CoordinateOutOfRange { index: k + 1, dim });
            }
        }
        let out_dim = self.output_dimension().unwrap_or(dim);
        let codomain = match codomain {
            Some(c) => c.clone(),
            None if out_dim == dim => domain.clone(),
            None => match domain.norm_type() {
                NormType::Weighted(_) => return Err(ExprError::CodomainRequired),
                n => FiniteSpace::new(out_dim, domain.field(), n.clone()).map_err(|_| ExprError::CodomainRequired)?,
            },
        };
        if codomain.dimension() != out_dim {
            return Err(ExprError::CoordinateOutOfRange {
                index: out_dim,
                dim: codomain.dimension(),
            });
        }
        let space = domain.clone();
        let label = self.source.clone();
        Ok(match (&self.components, &self.scalar) {
            (Some(items), _) => {
                let items = Arc::new(items.clone());
                OperatorHandle::new(label, domain.clone(), codomain, move |x| {
                    let n = space.norm(x);
                    items.iter().map(|e| e.eval(x, C64::new(0.0, 0.0), n)).collect()
                })
            }
            (None, Some(e)) => {
                let e = Arc::new(e.clone());
                OperatorHandle::new(label, domain.clone(), codomain, move |x| {
                    let n = space.norm(x);
                    x.iter().map(|&z| e.eval(x, z, n)).collect()
                })
            }
            (None, None) => unreachable!("parse always sets one form"),
        })
    }
}

/// Resolves a builtin name or parses an expression.
pub fn parse_operator(text: &str, domain: &FiniteSpace, codomain: Option<&FiniteSpace>) -> Result<OperatorHandle, ExprError> {
    match text.trim() {
        "identity" => Ok(OperatorHandle::identity(domain)),
        "zero" => Ok(OperatorHandle::zero(domain, codomain.unwrap_or(domain))),
        "cubic" => OperatorExpr::parse("x^3")?.to_operator(domain, codomain),
        "sine" => OperatorExpr::parse("sin(x)")?.to_operator(domain, codomain),
        "normscale" => OperatorExpr::parse("norm*x")?.to_operator(domain, codomain),
        other => OperatorExpr::parse(other)?.to_operator(domain, codomain),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::real_vector;

    fn r2() -> FiniteSpace {
        FiniteSpace::real(2, NormType::L2)
    }

    #[test]
    fn componentwise_form() {
        let op = parse_operator("2*x + x^2", &r2(), None).unwrap();
        let y = op.eval(&real_vector(&[1.0, -3.0]));
        assert_eq!(y, real_vector(&[3.0, 3.0]));
    }

    #[test]
    fn vector_form_changes_dimension() {
        let op = parse_operator("[x1 - x2, x1*x2, norm]", &r2(), None).unwrap();
        assert_eq!(op.codomain().dimension(), 3);
        let y = op.eval(&real_vector(&[3.0, 4.0]));
        assert_eq!(y, real_vector(&[-1.0, 12.0, 5.0]));
    }

    #[test]
    fn precedence_and_associativity() {
        let e = OperatorExpr::parse("2^3^2 - -1 * 4 / 2").unwrap();
        let op = e.to_operator(&FiniteSpace::real(1, NormType::L1), None).unwrap();
        assert_eq!(op.eval(&real_vector(&[0.0]))[0].re, 512.0 + 2.0);
    }

    #[test]
    fn complex_constants_and_functions() {
        let sp = FiniteSpace::complex(1, NormType::L2);
        let op = parse_operator("conj(x) * i + abs(x)", &sp, None).unwrap();
        let y = op.eval(&[C64::new(3.0, 4.0)]);
        assert_eq!(y[0], C64::new(4.0, 3.0) + C64::new(5.0, 0.0));
    }

    #[test]
    fn builtins_resolve() {
        assert_eq!(parse_operator("identity", &r2(), None).unwrap().linear_claim(), Some(true));
        let cubic = parse_operator("cubic", &r2(), None).unwrap();
        assert_eq!(cubic.eval(&real_vector(&[2.0, -1.0])), real_vector(&[8.0, -1.0]));
    }

    #[test]
    fn errors_are_reported() {
        assert!(matches!(OperatorExpr::parse(""), Err(ExprError::Empty)));
        assert!(matches!(OperatorExpr::parse("x +"), Err(ExprError::Unexpected { .. })));
        assert!(matches!(OperatorExpr::parse("foo(x)"), Err(ExprError::UnknownFunction(_))));
        assert!(matches!(OperatorExpr::parse("y"), Err(ExprError::UnknownVariable(_))));
        assert!(matches!(OperatorExpr::parse("[x]"), Err(ExprError::UnknownVariable(_))));
        assert!(matches!(OperatorExpr::parse("x $ 2"), Err(ExprError::UnexpectedChar { .. })));
        assert!(matches!(
            parse_operator("x3", &r2(), None),
            Err(ExprError::CoordinateOutOfRange { .. })
        ));
        let deep = "(".repeat(200) + "x" + &")".repeat(200);
        assert_eq!(OperatorExpr::parse(&deep), Err(ExprError::TooDeep));
        let minus = "-".repeat(500) + "x";
        assert_eq!(OperatorExpr::parse(&minus), Err(ExprError::TooDeep));
        assert_eq!(OperatorExpr::parse(&"1+".repeat(3000)), Err(ExprError::TooLong));
    }

    #[test]
    fn scientific_literals() {
        let op = parse_operator("1.5e-1*x + 2E2", &FiniteSpace::real(1, NormType::L1), None).unwrap();
        assert!((op.eval(&real_vector(&[2.0]))[0].re - 200.3).abs() < 1e-12);
    }
}
