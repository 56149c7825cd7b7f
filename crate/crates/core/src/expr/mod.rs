//! Closed-form scalar expressions in chart coordinates `x1..xn`.
//!
//! Expressions are parsed once and then evaluated either to a plain value or
//! to a [`Jet`] carrying exact first and second derivatives. The grammar is
//! documented in `docs/expression-grammar.md`.

mod jet;
mod parse;

pub use jet::{Jet, HESS_LEN};

use crate::error::{Error, Result};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

/// Largest chart dimension handled by the dual-number evaluator.
pub const MAX_DIM: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Tanh,
    Coth,
    Sqrt,
    Abs,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "coth" => Func::Coth,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Coth => "coth",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    /// `(φ(a), φ'(a), φ''(a))`; `smooth` is false when the argument has
    /// nonzero derivatives, which matters at the kinks of `sqrt` and `abs`.
    fn derivatives(self, a: f64, smooth: bool) -> Result<(f64, f64, f64)> {
        Ok(match self {
            Func::Exp => {
                let e = a.exp();
                (e, e, e)
            }
            Func::Log => {
                if a <= 0.0 {
                    return Err(Error::Domain(format!("log of non-positive value {a}")));
                }
                (a.ln(), 1.0 / a, -1.0 / (a * a))
            }
            Func::Sin => (a.sin(), a.cos(), -a.sin()),
            Func::Cos => (a.cos(), -a.sin(), -a.cos()),
            Func::Sinh => (a.sinh(), a.cosh(), a.sinh()),
            Func::Cosh => (a.cosh(), a.sinh(), a.cosh()),
            Func::Tanh => {
                let t = a.tanh();
                let d = 1.0 - t * t;
                (t, d, -2.0 * t * d)
            }
            Func::Coth => {
                if a == 0.0 {
                    return Err(Error::Domain("coth has a pole at 0".into()));
                }
                let c = a.cosh() / a.sinh();
                let d = 1.0 - c * c;
                (c, d, -2.0 * c * d)
            }
            Func::Sqrt => {
                if a < 0.0 || (a == 0.0 && !smooth) {
                    return Err(Error::Domain(format!("sqrt is not differentiable at {a}")));
                }
                let s = a.sqrt();
                if a == 0.0 {
                    (0.0, 0.0, 0.0)
                } else {
                    (s, 0.5 / s, -0.25 / (s * a))
                }
            }
            Func::Abs => {
                if a == 0.0 && !smooth {
                    return Err(Error::Domain("abs is not differentiable at 0".into()));
                }
                (a.abs(), a.signum() * f64::from(a != 0.0), 0.0)
            }
        })
    }

    fn value(self, a: f64) -> Result<f64> {
        Ok(match self {
            Func::Exp => a.exp(),
            Func::Log => {
                if a <= 0.0 {
                    return Err(Error::Domain(format!("log of non-positive value {a}")));
                }
                a.ln()
            }
            Func::Sin => a.sin(),
            Func::Cos => a.cos(),
            Func::Sinh => a.sinh(),
            Func::Cosh => a.cosh(),
            Func::Tanh => a.tanh(),
            Func::Coth => {
                if a == 0.0 {
                    return Err(Error::Domain("coth has a pole at 0".into()));
                }
                a.cosh() / a.sinh()
            }
            Func::Sqrt => {
                if a < 0.0 {
                    return Err(Error::Domain(format!("sqrt of negative value {a}")));
                }
                a.sqrt()
            }
            Func::Abs => a.abs(),
        })
    }
}

/// Syntax tree. Variables are zero-based (`x1` is `Var(0)`).
#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn arity(&self) -> usize {
        match self {
            Node::Num(_) => 0,
            Node::Var(i) => i + 1,
            Node::Neg(a) | Node::Call(_, a) => a.arity(),
            Node::Add(a, b)
            | Node::Sub(a, b)
            | Node::Mul(a, b)
            | Node::Div(a, b)
            | Node::Pow(a, b) => a.arity().max(b.arity()),
        }
    }

    fn jet(&self, x: &[f64]) -> Result<Jet> {
        let n = x.len();
        Ok(match self {
            Node::Num(v) => Jet::constant(n, *v),
            Node::Var(i) => Jet::variable(n, *i, x[*i]),
            Node::Neg(a) => -a.jet(x)?,
            Node::Add(a, b) => a.jet(x)? + b.jet(x)?,
            Node::Sub(a, b) => a.jet(x)? - b.jet(x)?,
            Node::Mul(a, b) => a.jet(x)? * b.jet(x)?,
            Node::Div(a, b) => {
                let den = b.jet(x)?;
                let inv = den
                    .recip()
                    .ok_or_else(|| Error::Domain("division by zero".into()))?;
                a.jet(x)? * inv
            }
            Node::Pow(a, b) => pow_jet(a.jet(x)?, b.jet(x)?)?,
            Node::Call(func, a) => {
                let arg = a.jet(x)?;
                let (f0, f1, f2) = func.derivatives(arg.value(), arg.is_constant())?;
                arg.chain(f0, f1, f2)
            }
        })
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(match self {
            Node::Num(v) => *v,
            Node::Var(i) => x[*i],
            Node::Neg(a) => -a.value(x)?,
            Node::Add(a, b) => a.value(x)? + b.value(x)?,
            Node::Sub(a, b) => a.value(x)? - b.value(x)?,
            Node::Mul(a, b) => a.value(x)? * b.value(x)?,
            Node::Div(a, b) => {
                let den = b.value(x)?;
                if den == 0.0 {
                    return Err(Error::Domain("division by zero".into()));
                }
                a.value(x)? / den
            }
            Node::Pow(a, b) => pow_value(a.value(x)?, b.value(x)?)?,
            Node::Call(func, a) => func.value(a.value(x)?)?,
        })
    }
}

fn integer_exponent(e: f64) -> Option<i32> {
    (e.fract() == 0.0 && e.abs() <= 1024.0).then_some(e as i32)
}

fn pow_value(base: f64, exp: f64) -> Result<f64> {
    if let Some(k) = integer_exponent(exp) {
        if base == 0.0 && k < 0 {
            return Err(Error::Domain("zero raised to a negative power".into()));
        }
        return Ok(base.powi(k));
    }
    if base <= 0.0 {
        return Err(Error::Domain(format!(
            "non-integer power of non-positive base {base}"
        )));
    }
    Ok(base.powf(exp))
}

fn pow_jet(base: Jet, exp: Jet) -> Result<Jet> {
    let b = base.value();
    if exp.is_constant() {
        let e = exp.value();
        if let Some(k) = integer_exponent(e) {
            return match k {
                0 => Ok(Jet::constant(base.dim(), 1.0)),
                1 => Ok(base),
                _ => {
                    if b == 0.0 && k < 2 {
                        return Err(Error::Domain("zero raised to a negative power".into()));
                    }
                    let kf = f64::from(k);
                    let f2 = if k == 2 { 2.0 } else { kf * (kf - 1.0) * b.powi(k - 2) };
                    Ok(base.chain(b.powi(k), kf * b.powi(k - 1), f2))
                }
            };
        }
        if b <= 0.0 {
            return Err(Error::Domain(format!(
                "non-integer power of non-positive base {b}"
            )));
        }
        let v = b.powf(e);
        return Ok(base.chain(v, e * v / b, e * (e - 1.0) * v / (b * b)));
    }
    if b <= 0.0 {
        return Err(Error::Domain(format!(
            "variable power of non-positive base {b}"
        )));
    }
    let log_base = base.chain(b.ln(), 1.0 / b, -1.0 / (b * b));
    let prod = exp * log_base;
    let v = prod.value().exp();
    Ok(prod.chain(v, v, v))
}

/// Parsed expression; immutable and cheap to share across threads.
#[derive(Clone, Debug, PartialEq)]
pub struct Expression {
    root: Node,
    arity: usize,
}

impl Expression {
    pub fn parse(source: &str) -> Result<Self> {
        let root = parse::parse(source)?;
        Ok(Expression::from_node(root))
    }

    pub fn from_node(root: Node) -> Self {
        let arity = root.arity();
        Expression { root, arity }
    }

    pub fn constant(v: f64) -> Self {
        Expression::from_node(Node::Num(v))
    }

    pub fn node(&self) -> &Node {
        &self.root
    }

    /// Number of leading coordinates the expression reads (`x3` → 3).
    pub fn arity(&self) -> usize {
        self.arity
    }

    /// True when the tree is a single literal equal to `v`.
    pub fn is_literal(&self, v: f64) -> bool {
        matches!(self.root, Node::Num(c) if c == v)
    }

    fn check_point(&self, point: &[f64]) -> Result<()> {
        if point.len() < self.arity {
            return Err(Error::DimensionMismatch {
                expected: self.arity,
                got: point.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        self.check_point(point)?;
        let v = self.root.value(point)?;
        if !v.is_finite() {
            return Err(Error::Domain(format!("non-finite value at {point:?}")));
        }
        Ok(v)
    }

    /// Value, gradient and Hessian with respect to all coordinates of `point`.
    pub fn eval_jet(&self, point: &[f64]) -> Result<Jet> {
        self.check_point(point)?;
        if point.len() > MAX_DIM {
            return Err(Error::DimensionTooLarge(point.len()));
        }
        let j = self.root.jet(point)?;
        if !j.value().is_finite() || !j.gradient().iter().all(|g| g.is_finite()) {
            return Err(Error::Domain(format!("non-finite value at {point:?}")));
        }
        Ok(j)
    }
}

impl FromStr for Expression {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Expression::parse(s)
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(v) => {
                if v.is_sign_negative() {
                    write!(f, "(-{:?})", -v)
                } else {
                    write!(f, "{v:?}")
                }
            }
            Node::Var(i) => write!(f, "x{}", i + 1),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "({a} * {b})"),
            Node::Div(a, b) => write!(f, "({a} / {b})"),
            Node::Pow(a, b) => write!(f, "({a}^{b})"),
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

impl Serialize for Expression {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Expression {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Expression::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(i: usize) -> Box<Node> {
        Box::new(Node::Var(i))
    }
    fn num(v: f64) -> Box<Node> {
        Box::new(Node::Num(v))
    }

    #[test]
    fn parses_half_square() {
        let e = Expression::parse("x1^2/2").unwrap();
        assert_eq!(
            e.node(),
            &Node::Div(Box::new(Node::Pow(var(0), num(2.0))), num(2.0))
        );
    }

    #[test]
    fn parses_steady_potential() {
        let e = Expression::parse("(2/3)*log(cosh(x1))").unwrap();
        assert_eq!(e.arity(), 1);
        let j = e.eval_jet(&[0.0]).unwrap();
        assert_eq!(j.value(), 0.0);
        assert_eq!(j.gradient(), &[0.0]);
        assert!((j.hessian(0, 0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn unbalanced_paren_reports_end_offset() {
        match Expression::parse("cosh(") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn trailing_garbage_and_unknown_names() {
        assert!(matches!(
            Expression::parse("x1 x2"),
            Err(Error::Syntax { offset: 3, .. })
        ));
        assert!(matches!(
            Expression::parse("foo(x1)"),
            Err(Error::UnknownIdentifier { ref name, offset: 0 }) if name == "foo"
        ));
        assert!(matches!(
            Expression::parse("2*x0"),
            Err(Error::UnknownIdentifier { offset: 2, .. })
        ));
        assert!(matches!(
            Expression::parse("exp x1"),
            Err(Error::Syntax { .. })
        ));
    }

    #[test]
    fn precedence_and_associativity() {
        let e = Expression::parse("-x1^2").unwrap();
        assert_eq!(e.eval(&[3.0]).unwrap(), -9.0);
        let e = Expression::parse("2^3^2").unwrap();
        assert_eq!(e.eval(&[]).unwrap(), 512.0);
        let e = Expression::parse("x1^-2").unwrap();
        assert_eq!(e.eval(&[2.0]).unwrap(), 0.25);
        let e = Expression::parse("8-3-2").unwrap();
        assert_eq!(e.eval(&[]).unwrap(), 3.0);
        let e = Expression::parse("1.5e-1 * 2E1 + pi - pi").unwrap();
        assert!((e.eval(&[]).unwrap() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn polynomial_jet() {
        let e = Expression::parse("x1^2/2").unwrap();
        let j = e.eval_jet(&[3.0]).unwrap();
        assert_eq!(j.value(), 4.5);
        assert_eq!(j.gradient(), &[3.0]);
        assert_eq!(j.hessian(0, 0), 1.0);
    }

    #[test]
    fn domain_errors_surface() {
        let coth = Expression::parse("coth(x1)").unwrap();
        assert!(matches!(coth.eval_jet(&[0.0]), Err(Error::Domain(_))));
        assert!(matches!(coth.eval(&[0.0]), Err(Error::Domain(_))));
        let log = Expression::parse("log(x1)").unwrap();
        assert!(matches!(log.eval_jet(&[-1.0]), Err(Error::Domain(_))));
        let div = Expression::parse("1/(x1-x2)").unwrap();
        assert!(matches!(div.eval_jet(&[1.0, 1.0]), Err(Error::Domain(_))));
        let pow = Expression::parse("x1^0.5").unwrap();
        assert!(matches!(pow.eval_jet(&[-1.0]), Err(Error::Domain(_))));
        assert!(pow.eval_jet(&[4.0]).is_ok());
        let sq = Expression::parse("sqrt(x1)").unwrap();
        assert!(matches!(sq.eval_jet(&[0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn integer_powers_of_negative_bases() {
        let e = Expression::parse("x1^3").unwrap();
        let j = e.eval_jet(&[-2.0]).unwrap();
        assert_eq!(j.value(), -8.0);
        assert_eq!(j.gradient(), &[12.0]);
        assert_eq!(j.hessian(0, 0), -12.0);
        let z = Expression::parse("x1^2").unwrap().eval_jet(&[0.0]).unwrap();
        assert_eq!(z.hessian(0, 0), 2.0);
    }

    #[test]
    fn variable_exponent_matches_exp_log() {
        let a = Expression::parse("x1^x2").unwrap();
        let b = Expression::parse("exp(x2*log(x1))").unwrap();
        let p = [1.7, 0.3];
        let ja = a.eval_jet(&p).unwrap();
        let jb = b.eval_jet(&p).unwrap();
        assert!((ja.value() - jb.value()).abs() < 1e-14);
        for i in 0..2 {
            assert!((ja.gradient()[i] - jb.gradient()[i]).abs() < 1e-13);
            for k in 0..2 {
                assert!((ja.hessian(i, k) - jb.hessian(i, k)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn dimension_checks() {
        let e = Expression::parse("x3").unwrap();
        assert!(matches!(
            e.eval_jet(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
        assert!(matches!(
            e.eval_jet(&[0.0; 7]),
            Err(Error::DimensionTooLarge(7))
        ));
    }

    #[test]
    fn display_round_trip_is_structural() {
        for src in [
            "x1^2/2",
            "(2/3)*log(cosh(x1))",
            "-x1^-2 + coth(x2)*sqrt(abs(x1))",
            "4/(1+(x1^2+x2^2)/0.5)^2",
            "1e-5*x1 - -x2",
        ] {
            let e = Expression::parse(src).unwrap();
            let again = Expression::parse(&e.to_string()).unwrap();
            assert_eq!(e, again, "{src} -> {e}");
        }
    }
}
