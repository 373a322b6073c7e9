//! Sparse multivariate polynomials over a [`Scalar`].

use std::collections::BTreeMap;
use std::fmt;

#[allow(unused_imports)]
use num_traits::{One, Zero};

use crate::scalar::Scalar;

/// Exponent vector of a monomial.
pub type Monomial = Vec<u32>;

/// Polynomial in a fixed number of variables with sparse storage.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<S> {
    nvars: usize,
    terms: BTreeMap<Monomial, S>,
}

/// Ordinary total degree of a monomial.
pub fn mono_degree(m: &[u32]) -> u32 {
    m.iter().sum()
}

/// Weighted degree `Σ w_i α_i` of a monomial.
pub fn mono_weighted_degree(m: &[u32], weights: &[usize]) -> i64 {
    m.iter()
        .zip(weights)
        .map(|(&e, &w)| e as i64 * w as i64)
        .sum()
}

impl<S: Scalar> Poly<S> {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: S) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, S::one())
    }

    /// The coordinate function `x_i` (0-based).
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut mono = vec![0; nvars];
        mono[i] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(mono, S::one());
        p
    }

    pub fn monomial(mono: Monomial, c: S) -> Self {
        let mut p = Self::zero(mono.len());
        p.add_term(mono, c);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &S)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, mono: &[u32]) -> S {
        self.terms.get(mono).cloned().unwrap_or_else(S::zero)
    }

    /// Constant term.
    pub fn constant_term(&self) -> S {
        self.coeff(&vec![0; self.nvars])
    }

    /// Adds `c·x^mono`, dropping the entry if it cancels.
    pub fn add_term(&mut self, mono: Monomial, c: S) {
        debug_assert_eq!(mono.len(), self.nvars);
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&mono) {
            Some(existing) => {
                let sum = existing.clone() + c;
                if sum.is_zero() {
                    self.terms.remove(&mono);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(mono, c);
            }
        }
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| mono_degree(m)).max()
    }

    /// Keeps monomials of total degree at most `deg`.
    pub fn truncate(&self, deg: u32) -> Self {
        Poly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| mono_degree(m) <= deg)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Keeps monomials satisfying `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&[u32]) -> bool) -> Self {
        Poly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| keep(m))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Removes coefficients negligible relative to the largest one (float types only).
    pub fn prune(&mut self) {
        if S::EXACT {
            return;
        }
        let scale = self
            .terms
            .values()
            .map(|c| c.to_f64().abs())
            .fold(0.0, f64::max);
        let tol = S::tolerance() * 1e-2 * scale.max(1.0);
        self.terms.retain(|_, c| c.to_f64().abs() > tol);
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(&-S::one())
    }

    pub fn scale(&self, k: &S) -> Self {
        if k.is_zero() {
            return Self::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c.clone() * k.clone()))
                .collect(),
        }
    }

    /// Product, optionally truncated at total degree `cap`.
    pub fn mul_trunc(&self, other: &Self, cap: Option<u32>) -> Self {
        let mut out = Self::zero(self.nvars);
        for (ma, ca) in &self.terms {
            let da = mono_degree(ma);
            if cap.is_some_and(|c| da > c) {
                continue;
            }
            for (mb, cb) in &other.terms {
                if cap.is_some_and(|c| da + mono_degree(mb) > c) {
                    continue;
                }
                let mono: Monomial = ma.iter().zip(mb).map(|(x, y)| x + y).collect();
                out.add_term(mono, ca.clone() * cb.clone());
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.mul_trunc(other, None)
    }

    pub fn pow_trunc(&self, k: u32, cap: Option<u32>) -> Self {
        let mut acc = Self::one(self.nvars);
        for _ in 0..k {
            acc = acc.mul_trunc(self, cap);
        }
        acc
    }

    /// Partial derivative with respect to variable `i`.
    pub fn diff(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            if m[i] == 0 {
                continue;
            }
            let mut mm = m.clone();
            mm[i] -= 1;
            out.add_term(mm, c.clone() * S::from_i64(m[i] as i64));
        }
        out
    }

    pub fn eval(&self, x: &[S]) -> S {
        let mut acc = S::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, &e) in m.iter().enumerate() {
                for _ in 0..e {
                    t = t * x[i].clone();
                }
            }
            acc = acc + t;
        }
        acc
    }

    /// Evaluation in double precision.
    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            let mut t = c.to_f64();
            for (i, &e) in m.iter().enumerate() {
                if e > 0 {
                    t *= x[i].powi(e as i32);
                }
            }
            acc += t;
        }
        acc
    }

    /// Evaluation in any floating type.
    pub fn eval_float<F: num_traits::Float>(&self, x: &[F]) -> F {
        let mut acc = F::zero();
        for (m, c) in &self.terms {
            let mut t = F::from(c.to_f64()).unwrap();
            for (i, &e) in m.iter().enumerate() {
                if e > 0 {
                    t = t * x[i].powi(e as i32);
                }
            }
            acc = acc + t;
        }
        acc
    }

    /// Substitutes `subs[i]` for variable `i`; the result lives in the
    /// variables of the substituted polynomials. Optional truncation at `cap`.
    pub fn compose(&self, subs: &[Poly<S>], cap: Option<u32>) -> Poly<S> {
        assert_eq!(subs.len(), self.nvars, "substitution arity");
        let target = subs.first().map(|p| p.nvars).unwrap_or(0);
        let mut max_exp = vec![0u32; self.nvars];
        for m in self.terms.keys() {
            for (i, &e) in m.iter().enumerate() {
                max_exp[i] = max_exp[i].max(e);
            }
        }
        let powers: Vec<Vec<Poly<S>>> = (0..self.nvars)
            .map(|i| {
                let mut list = vec![Poly::one(target)];
                for k in 1..=max_exp[i] as usize {
                    let next = list[k - 1].mul_trunc(&subs[i], cap);
                    list.push(next);
                }
                list
            })
            .collect();
        let mut out = Poly::zero(target);
        for (m, c) in &self.terms {
            let mut t = Poly::constant(target, c.clone());
            for (i, &e) in m.iter().enumerate() {
                if e > 0 {
                    t = t.mul_trunc(&powers[i][e as usize], cap);
                    if t.is_zero() {
                        break;
                    }
                }
            }
            out = out.add(&t);
        }
        out
    }

    /// Re-expands around `a`: returns `q(h) = p(a + h)`.
    pub fn shift(&self, a: &[S]) -> Poly<S> {
        let subs: Vec<Poly<S>> = (0..self.nvars)
            .map(|i| Poly::var(self.nvars, i).add(&Poly::constant(self.nvars, a[i].clone())))
            .collect();
        self.compose(&subs, None)
    }

    /// Embeds into a larger variable space; variable `i` maps to `map[i]`.
    pub fn embed(&self, nvars: usize, map: &[usize]) -> Poly<S> {
        let mut out = Poly::zero(nvars);
        for (m, c) in &self.terms {
            let mut mm = vec![0; nvars];
            for (i, &e) in m.iter().enumerate() {
                mm[map[i]] += e;
            }
            out.add_term(mm, c.clone());
        }
        out
    }

    /// Extends the variable list with `extra` unused trailing variables.
    pub fn extend_vars(&self, extra: usize) -> Poly<S> {
        let map: Vec<usize> = (0..self.nvars).collect();
        self.embed(self.nvars + extra, &map)
    }

    /// Converts coefficients to another scalar type.
    pub fn map_coeffs<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Poly<T> {
        let mut out = Poly::zero(self.nvars);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), f(c));
        }
        out
    }

    pub fn to_f64_poly(&self) -> Poly<f64> {
        self.map_coeffs(|c| c.to_f64())
    }

    /// Homogeneous part of weighted degree `deg`.
    pub fn weighted_part(&self, weights: &[usize], deg: i64) -> Poly<S> {
        self.filter(|m| mono_weighted_degree(m, weights) == deg)
    }

    /// Smallest and largest weighted degree present.
    pub fn weighted_degree_range(&self, weights: &[usize]) -> Option<(i64, i64)> {
        let mut it = self.terms.keys().map(|m| mono_weighted_degree(m, weights));
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), d| (lo.min(d), hi.max(d))))
    }

    /// Largest absolute coefficient as a double.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.to_f64().abs())
            .fold(0.0, f64::max)
    }

    /// Formats using the supplied variable names.
    pub fn display_with(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut parts = Vec::new();
        for (m, c) in &self.terms {
            let mut factors = Vec::new();
            for (i, &e) in m.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(names[i].clone()),
                    _ => factors.push(format!("{}^{}", names[i], e)),
                }
            }
            let coeff = format!("{c}");
            let term = if factors.is_empty() {
                coeff
            } else if c.is_one() {
                factors.join("*")
            } else if (-c.clone()).is_one() {
                format!("-{}", factors.join("*"))
            } else {
                format!("({})*{}", coeff, factors.join("*"))
            };
            parts.push(term);
        }
        parts.join(" + ")
    }
}

impl<S: Scalar> fmt::Display for Poly<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (1..=self.nvars).map(|i| format!("x{i}")).collect();
        f.write_str(&self.display_with(&names))
    }
}
