//! Nonholonomic order of a function at a point.

use serde::Serialize;

use super::expr::Expr;
use super::field::{apply, PolyField};
use super::polynomial::Poly;
use crate::scalar::Scalar;

/// How derivative values were compared with zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EvalMode {
    /// Exact rational evaluation.
    Exact,
    /// Floating evaluation with a `1e-12` zero threshold.
    FloatFallback,
}

/// Order of a function: `Some(s)` for `s < cap`, `None` meaning "at least cap".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct OrderResult {
    pub order: Option<usize>,
    pub mode: EvalMode,
}

const FLOAT_ZERO: f64 = 1e-12;

/// Smallest `s < cap` such that some `X_{i1}…X_{is} f` is nonzero at the
/// origin, for polynomial data already centered at the point of interest.
pub fn order_at_origin<S: Scalar>(
    f: &Poly<S>,
    fields: &[PolyField<S>],
    cap: usize,
) -> Option<usize> {
    let mut level = vec![f.truncate(cap as u32)];
    for s in 0..cap {
        let nonzero = level.iter().any(|g| {
            let c = g.constant_term();
            if S::EXACT {
                !c.is_zero()
            } else {
                c.to_f64().abs() > FLOAT_ZERO
            }
        });
        if nonzero {
            return Some(s);
        }
        if s + 1 == cap {
            break;
        }
        let remaining = (cap - s - 1) as u32;
        let mut next = Vec::new();
        for g in &level {
            for x in fields {
                let d = apply(x, g, Some(remaining));
                if !d.is_zero() && !next.contains(&d) {
                    next.push(d);
                }
            }
        }
        if next.is_empty() {
            return None;
        }
        level = next;
    }
    None
}

/// Nonholonomic order of `f` at `a` with respect to the fields `x`.
///
/// Derivatives are computed on Taylor expansions at `a`, which carry every
/// jet the words of length below `cap` can see.
pub fn nonholonomic_order<S: Scalar>(
    f: &Expr,
    x: &[Vec<Expr>],
    a: &[S],
    cap: usize,
) -> OrderResult {
    let deg = cap as u32;
    let fp = f.taylor(a, deg);
    let fields: Vec<PolyField<S>> = x
        .iter()
        .map(|v| v.iter().map(|e| e.taylor(a, deg)).collect())
        .collect();
    let polynomial = f.is_polynomial() && x.iter().flatten().all(Expr::is_polynomial);
    let mode = if S::EXACT && polynomial {
        EvalMode::Exact
    } else {
        EvalMode::FloatFallback
    };
    OrderResult {
        order: order_at_origin(&fp, &fields, cap),
        mode,
    }
}
