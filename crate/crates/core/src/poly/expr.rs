//! Scalar expressions over rationals, variables, sums, products, integer
//! powers, `sin` and `cos`, with a small recursive-descent parser.

use std::fmt;

use num_rational::BigRational;
use num_traits::{Float, One, Signed, Zero};
use serde::Serialize;

use super::polynomial::Poly;
use crate::scalar::{factorial, parse_decimal, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(BigRational),
    Var(usize),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Box<Expr>, u32),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
}

/// Failure to parse an expression string.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, thiserror::Error)]
#[error("column {column}: {message}")]
pub struct ExprError {
    /// 1-based character column inside the expression string.
    pub column: usize,
    pub message: String,
}

impl Expr {
    pub fn constant(c: BigRational) -> Expr {
        Expr::Const(c)
    }

    pub fn int(v: i64) -> Expr {
        Expr::Const(BigRational::from_integer(v.into()))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_zero())
    }

    fn as_const(&self) -> Option<&BigRational> {
        match self {
            Expr::Const(c) => Some(c),
            _ => None,
        }
    }

    /// Sum with constant folding and flattening.
    pub fn sum(items: Vec<Expr>) -> Expr {
        let mut constant = BigRational::zero();
        let mut rest = Vec::new();
        for item in items {
            match item {
                Expr::Const(c) => constant += c,
                Expr::Add(inner) => {
                    for e in inner {
                        match e {
                            Expr::Const(c) => constant += c,
                            other => rest.push(other),
                        }
                    }
                }
                other => rest.push(other),
            }
        }
        if !constant.is_zero() {
            rest.push(Expr::Const(constant));
        }
        match rest.len() {
            0 => Expr::zero(),
            1 => rest.pop().unwrap(),
            _ => Expr::Add(rest),
        }
    }

    /// Product with constant folding and flattening.
    pub fn product(items: Vec<Expr>) -> Expr {
        let mut constant = BigRational::one();
        let mut rest = Vec::new();
        for item in items {
            match item {
                Expr::Const(c) => constant *= c,
                Expr::Mul(inner) => {
                    for e in inner {
                        match e {
                            Expr::Const(c) => constant *= c,
                            other => rest.push(other),
                        }
                    }
                }
                other => rest.push(other),
            }
        }
        if constant.is_zero() {
            return Expr::zero();
        }
        if rest.is_empty() {
            return Expr::Const(constant);
        }
        if !constant.is_one() {
            rest.insert(0, Expr::Const(constant));
        }
        if rest.len() == 1 {
            rest.pop().unwrap()
        } else {
            Expr::Mul(rest)
        }
    }

    pub fn pow(base: Expr, k: u32) -> Expr {
        match (k, &base) {
            (0, _) => Expr::int(1),
            (1, _) => base,
            (_, Expr::Const(c)) => Expr::Const(num_traits::pow(c.clone(), k as usize)),
            (_, Expr::Pow(inner, j)) => Expr::Pow(inner.clone(), j * k),
            _ => Expr::Pow(Box::new(base), k),
        }
    }

    pub fn neg(e: Expr) -> Expr {
        Expr::product(vec![Expr::int(-1), e])
    }

    pub fn sin(e: Expr) -> Expr {
        if e.is_zero() {
            Expr::zero()
        } else {
            Expr::Sin(Box::new(e))
        }
    }

    pub fn cos(e: Expr) -> Expr {
        if e.is_zero() {
            Expr::int(1)
        } else {
            Expr::Cos(Box::new(e))
        }
    }

    /// Symbolic partial derivative with respect to variable `i`.
    pub fn diff(&self, i: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Var(j) => Expr::int(if *j == i { 1 } else { 0 }),
            Expr::Add(items) => Expr::sum(items.iter().map(|e| e.diff(i)).collect()),
            Expr::Mul(items) => {
                let mut terms = Vec::new();
                for (k, item) in items.iter().enumerate() {
                    let d = item.diff(i);
                    if d.is_zero() {
                        continue;
                    }
                    let mut factors: Vec<Expr> = items.clone();
                    factors[k] = d;
                    terms.push(Expr::product(factors));
                }
                Expr::sum(terms)
            }
            Expr::Pow(base, k) => {
                let d = base.diff(i);
                if d.is_zero() {
                    return Expr::zero();
                }
                Expr::product(vec![
                    Expr::int(*k as i64),
                    Expr::pow((**base).clone(), k - 1),
                    d,
                ])
            }
            Expr::Sin(arg) => {
                let d = arg.diff(i);
                if d.is_zero() {
                    return Expr::zero();
                }
                Expr::product(vec![Expr::cos((**arg).clone()), d])
            }
            Expr::Cos(arg) => {
                let d = arg.diff(i);
                if d.is_zero() {
                    return Expr::zero();
                }
                Expr::product(vec![Expr::int(-1), Expr::sin((**arg).clone()), d])
            }
        }
    }

    /// Evaluates in any floating type.
    pub fn eval<F: Float>(&self, x: &[F]) -> F {
        match self {
            Expr::Const(c) => {
                F::from(num_traits::ToPrimitive::to_f64(c).unwrap_or(f64::NAN)).unwrap()
            }
            Expr::Var(j) => x[*j],
            Expr::Add(items) => items.iter().fold(F::zero(), |acc, e| acc + e.eval(x)),
            Expr::Mul(items) => items.iter().fold(F::one(), |acc, e| acc * e.eval(x)),
            Expr::Pow(base, k) => base.eval(x).powi(*k as i32),
            Expr::Sin(arg) => arg.eval(x).sin(),
            Expr::Cos(arg) => arg.eval(x).cos(),
        }
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }

    /// Exact evaluation for trig-free expressions.
    pub fn eval_exact(&self, x: &[BigRational]) -> Option<BigRational> {
        Some(match self {
            Expr::Const(c) => c.clone(),
            Expr::Var(j) => x[*j].clone(),
            Expr::Add(items) => {
                let mut acc = BigRational::zero();
                for e in items {
                    acc += e.eval_exact(x)?;
                }
                acc
            }
            Expr::Mul(items) => {
                let mut acc = BigRational::one();
                for e in items {
                    acc *= e.eval_exact(x)?;
                }
                acc
            }
            Expr::Pow(base, k) => num_traits::pow(base.eval_exact(x)?, *k as usize),
            Expr::Sin(_) | Expr::Cos(_) => return None,
        })
    }

    pub fn is_polynomial(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Var(_) => true,
            Expr::Add(items) | Expr::Mul(items) => items.iter().all(Expr::is_polynomial),
            Expr::Pow(base, _) => base.is_polynomial(),
            Expr::Sin(_) | Expr::Cos(_) => false,
        }
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(j) => Some(*j),
            Expr::Add(items) | Expr::Mul(items) => items.iter().filter_map(Expr::max_var).max(),
            Expr::Pow(b, _) | Expr::Sin(b) | Expr::Cos(b) => b.max_var(),
        }
    }

    /// Exact polynomial form, available when the expression is trig free.
    pub fn to_poly<S: Scalar>(&self, nvars: usize) -> Option<Poly<S>> {
        Some(match self {
            Expr::Const(c) => Poly::constant(nvars, S::from_rational(c)),
            Expr::Var(j) => Poly::var(nvars, *j),
            Expr::Add(items) => {
                let mut acc = Poly::zero(nvars);
                for e in items {
                    acc = acc.add(&e.to_poly(nvars)?);
                }
                acc
            }
            Expr::Mul(items) => {
                let mut acc = Poly::one(nvars);
                for e in items {
                    acc = acc.mul(&e.to_poly(nvars)?);
                }
                acc
            }
            Expr::Pow(base, k) => base.to_poly(nvars)?.pow_trunc(*k, None),
            Expr::Sin(_) | Expr::Cos(_) => return None,
        })
    }

    /// Taylor polynomial at `a` in the shifted variables `h = x - a`,
    /// truncated at total degree `deg`.
    pub fn taylor<S: Scalar>(&self, a: &[S], deg: u32) -> Poly<S> {
        let n = a.len();
        let cap = Some(deg);
        match self {
            Expr::Const(c) => Poly::constant(n, S::from_rational(c)),
            Expr::Var(j) => {
                let mut p = Poly::var(n, *j);
                p.add_term(vec![0; n], a[*j].clone());
                p.truncate(deg)
            }
            Expr::Add(items) => items
                .iter()
                .fold(Poly::zero(n), |acc, e| acc.add(&e.taylor(a, deg))),
            Expr::Mul(items) => items
                .iter()
                .fold(Poly::one(n), |acc, e| acc.mul_trunc(&e.taylor(a, deg), cap)),
            Expr::Pow(base, k) => base.taylor(a, deg).pow_trunc(*k, cap),
            Expr::Sin(arg) | Expr::Cos(arg) => {
                let inner = arg.taylor(a, deg);
                let c0 = inner.constant_term();
                let q = inner.sub(&Poly::constant(n, c0.clone()));
                let (cos_c, sin_c) = c0.cos_sin();
                // cos q and sin q as truncated power series.
                let mut cos_q = Poly::zero(n);
                let mut sin_q = Poly::zero(n);
                let mut power = Poly::one(n);
                for k in 0..=deg {
                    let coeff = S::one() / factorial::<S>(k);
                    let signed = if (k / 2) % 2 == 0 { coeff } else { -coeff };
                    let term = power.scale(&signed);
                    if k % 2 == 0 {
                        cos_q = cos_q.add(&term);
                    } else {
                        sin_q = sin_q.add(&term);
                    }
                    power = power.mul_trunc(&q, cap);
                    if power.is_zero() {
                        break;
                    }
                }
                match self {
                    Expr::Sin(_) => cos_q.scale(&sin_c).add(&sin_q.scale(&cos_c)),
                    _ => cos_q.scale(&cos_c).sub(&sin_q.scale(&sin_c)),
                }
            }
        }
    }

    /// Builds an expression from a polynomial (coefficients converted exactly).
    pub fn from_poly<S: Scalar>(p: &Poly<S>) -> Expr {
        let mut terms = Vec::new();
        for (m, c) in p.terms() {
            let mut factors = vec![Expr::Const(c.to_rational())];
            for (i, &e) in m.iter().enumerate() {
                if e > 0 {
                    factors.push(Expr::pow(Expr::Var(i), e));
                }
            }
            terms.push(Expr::product(factors));
        }
        Expr::sum(terms)
    }

    /// Renders with the given variable names in a form accepted by [`parse_expr`].
    pub fn display_with(&self, names: &[String]) -> String {
        self.render(names, 0)
    }

    fn render(&self, names: &[String], parent: u8) -> String {
        // Precedence levels: 1 sum, 2 product, 3 power, 4 atom.
        let (text, level) = match self {
            Expr::Const(c) => {
                let s = if c.denom().is_one() {
                    c.numer().to_string()
                } else {
                    format!("{}/{}", c.numer(), c.denom())
                };
                let level = if c.is_negative() || !c.denom().is_one() {
                    2
                } else {
                    4
                };
                (s, level)
            }
            Expr::Var(j) => (names[*j].clone(), 4),
            Expr::Add(items) => {
                let mut s = String::new();
                for (k, e) in items.iter().enumerate() {
                    let part = e.render(names, 1);
                    if k == 0 {
                        s.push_str(&part);
                    } else if let Some(stripped) = part.strip_prefix('-') {
                        s.push_str(" - ");
                        s.push_str(stripped);
                    } else {
                        s.push_str(" + ");
                        s.push_str(&part);
                    }
                }
                (s, 1)
            }
            Expr::Mul(items) => {
                let mut parts = Vec::new();
                let mut negate = false;
                for (k, e) in items.iter().enumerate() {
                    if k == 0 {
                        if let Expr::Const(c) = e {
                            if (-c.clone()).is_one() {
                                negate = true;
                                continue;
                            }
                        }
                    }
                    parts.push(e.render(names, 2));
                }
                let body = parts.join("*");
                (if negate { format!("-{body}") } else { body }, 2)
            }
            Expr::Pow(base, k) => (format!("{}^{}", base.render(names, 4), k), 3),
            Expr::Sin(arg) => (format!("sin({})", arg.render(names, 0)), 4),
            Expr::Cos(arg) => (format!("cos({})", arg.render(names, 0)), 4),
        };
        if level < parent || (parent == 4 && level < 4) {
            format!("({text})")
        } else {
            text
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.max_var().map(|v| v + 1).unwrap_or(0);
        let names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        f.write_str(&self.display_with(&names))
    }
}

/// Parses an expression; identifiers must be in `names` (or `sin`/`cos`).
///
/// Grammar: `sum := term (('+'|'-') term)*`, `term := unary (('*'|'/') unary)*`,
/// `unary := '-' unary | power`, `power := atom ('^' integer)?`,
/// `atom := number | name | fn '(' sum ')' | '(' sum ')'`.
/// Division is only allowed by nonzero constants.
pub fn parse_expr(text: &str, names: &[String]) -> Result<Expr, ExprError> {
    let mut p = Parser {
        chars: text.chars().collect(),
        pos: 0,
        names,
    };
    let e = p.sum()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.error(format!("unexpected character '{}'", p.chars[p.pos])));
    }
    Ok(e)
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    names: &'a [String],
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> ExprError {
        ExprError {
            column: self.pos + 1,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut items = vec![self.term()?];
        while let Some(c) = self.peek() {
            match c {
                '+' => {
                    self.pos += 1;
                    items.push(self.term()?);
                }
                '-' => {
                    self.pos += 1;
                    items.push(Expr::neg(self.term()?));
                }
                _ => break,
            }
        }
        Ok(Expr::sum(items))
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut items = vec![self.unary()?];
        while let Some(c) = self.peek() {
            match c {
                '*' => {
                    self.pos += 1;
                    items.push(self.unary()?);
                }
                '/' => {
                    self.pos += 1;
                    let at = self.pos;
                    let divisor = self.unary()?;
                    match divisor.as_const() {
                        Some(c) if !c.is_zero() => items.push(Expr::Const(c.recip())),
                        Some(_) => {
                            return Err(ExprError {
                                column: at + 1,
                                message: "division by zero".into(),
                            })
                        }
                        None => {
                            return Err(ExprError {
                                column: at + 1,
                                message: "unsupported node: division by a non-constant expression"
                                    .into(),
                            })
                        }
                    }
                }
                _ => break,
            }
        }
        Ok(Expr::product(items))
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some('-') => {
                self.pos += 1;
                Ok(Expr::neg(self.unary()?))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            if self.peek() == Some('-') {
                return Err(self.error("unsupported node: negative exponent"));
            }
            while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.error("expected a nonnegative integer exponent"));
            }
            let digits: String = self.chars[start..self.pos].iter().collect();
            let k: u32 = digits.parse().map_err(|_| ExprError {
                column: start + 1,
                message: "exponent too large".into(),
            })?;
            return Ok(Expr::pow(base, k));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let c = self
            .peek()
            .ok_or_else(|| self.error("unexpected end of expression"))?;
        if c == '(' {
            self.pos += 1;
            let e = self.sum()?;
            if self.peek() != Some(')') {
                return Err(self.error("expected ')'"));
            }
            self.pos += 1;
            return Ok(e);
        }
        if c.is_ascii_digit() || c == '.' {
            let start = self.pos;
            while self.pos < self.chars.len() {
                let ch = self.chars[self.pos];
                let exp_sign = (ch == '-' || ch == '+')
                    && self.pos > start
                    && matches!(self.chars[self.pos - 1], 'e' | 'E');
                if ch.is_ascii_digit() || ch == '.' || ch == 'e' || ch == 'E' || exp_sign {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            let literal: String = self.chars[start..self.pos].iter().collect();
            return parse_decimal(&literal).map(Expr::Const).ok_or(ExprError {
                column: start + 1,
                message: format!("invalid number '{literal}'"),
            });
        }
        if c.is_alphabetic() || c == '_' {
            let start = self.pos;
            while self.pos < self.chars.len()
                && (self.chars[self.pos].is_alphanumeric() || self.chars[self.pos] == '_')
            {
                self.pos += 1;
            }
            let ident: String = self.chars[start..self.pos].iter().collect();
            if let Some(j) = self.names.iter().position(|n| *n == ident) {
                return Ok(Expr::Var(j));
            }
            if ident == "sin" || ident == "cos" {
                if self.peek() != Some('(') {
                    return Err(self.error(format!("expected '(' after {ident}")));
                }
                self.pos += 1;
                let arg = self.sum()?;
                if self.peek() != Some(')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                return Ok(if ident == "sin" {
                    Expr::sin(arg)
                } else {
                    Expr::cos(arg)
                });
            }
            return Err(ExprError {
                column: start + 1,
                message: format!("unsupported node: unknown identifier or function '{ident}'"),
            });
        }
        Err(self.error(format!("unexpected character '{c}'")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parses_and_evaluates() {
        let n = names(&["x", "y", "theta"]);
        let e = parse_expr("2*x^2 - y/4 + cos(theta)", &n).unwrap();
        let v = e.eval_f64(&[1.0, 2.0, 0.0]);
        assert!((v - 2.5).abs() < 1e-15);
        assert!(!e.is_polynomial());
    }

    #[test]
    fn reports_columns() {
        let n = names(&["x"]);
        let err = parse_expr("x + exp(x)", &n).unwrap_err();
        assert_eq!(err.column, 5);
        assert!(err.message.contains("unsupported"));
        let err = parse_expr("x / x", &n).unwrap_err();
        assert!(err.message.contains("non-constant"));
        assert!(parse_expr("(x + 1", &n).is_err());
    }

    #[test]
    fn derivative_of_trig() {
        let n = names(&["t"]);
        let e = parse_expr("sin(t^2)", &n).unwrap();
        let d = e.diff(0);
        let t = 0.7_f64;
        assert!((d.eval_f64(&[t]) - 2.0 * t * (t * t).cos()).abs() < 1e-14);
    }

    #[test]
    fn taylor_of_cosine() {
        let n = names(&["x", "theta"]);
        let e = parse_expr("cos(theta)", &n).unwrap();
        let p = e.taylor::<BigRational>(&[BigRational::zero(), BigRational::zero()], 2);
        assert_eq!(p.coeff(&[0, 0]), BigRational::one());
        assert_eq!(p.coeff(&[0, 2]), BigRational::new((-1).into(), 2.into()));
        assert_eq!(p.num_terms(), 2);
    }

    #[test]
    fn display_round_trips() {
        let n = names(&["x1", "x2"]);
        for text in [
            "x1^2",
            "-x1*x2 + 3/2",
            "cos(x1 - 1)*sin(2*x2)",
            "(x1 + x2)^3",
        ] {
            let e = parse_expr(text, &n).unwrap();
            let again = parse_expr(&e.display_with(&n), &n).unwrap();
            assert_eq!(e, again, "{text}");
        }
    }
}
