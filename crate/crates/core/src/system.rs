//! Driftless control-affine systems `ẋ = Σ u_i X_i(x)`.
//!
//! [`DriftlessSystem`] is the floating-point view used by integration and
//! steering; [`JetSystem`] supplies polynomial jets of the fields at any
//! point for the chart constructions.

use num_traits::Float;

use crate::canonical::CanonicalSystem;
use crate::poly::{lie_bracket_expr, taylor_field, Expr, ExprField, Poly, PolyField};
use crate::scalar::Scalar;

/// Floating-point evaluation of the fields.
pub trait DriftlessSystem {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    /// Value of `X_i(x)`, `i` 0-based.
    fn field_value<F: Float>(&self, i: usize, x: &[F]) -> Vec<F>;

    /// `Σ u_i X_i(x)`.
    fn velocity<F: Float>(&self, x: &[F], u: &[F]) -> Vec<F> {
        let mut out = vec![F::zero(); self.state_dim()];
        for (i, &ui) in u.iter().enumerate() {
            if ui == F::zero() {
                continue;
            }
            for (o, v) in out.iter_mut().zip(self.field_value(i, x)) {
                *o = *o + ui * v;
            }
        }
        out
    }
}

/// Polynomial jets of the fields.
pub trait JetSystem<S: Scalar> {
    /// Taylor expansions of the `m` fields at `p`, in the variables `x − p`,
    /// truncated at total degree `deg`.
    fn jets(&self, p: &[S], deg: u32) -> Vec<PolyField<S>>;
}

/// System whose fields are symbolic expressions in the state variables.
#[derive(Clone, Debug, PartialEq)]
pub struct ExprSystem {
    pub names: Vec<String>,
    /// `fields[i][k]` is component `k` of `X_{i+1}`.
    pub fields: Vec<ExprField>,
}

impl ExprSystem {
    pub fn new(names: Vec<String>, fields: Vec<ExprField>) -> Self {
        for f in &fields {
            assert_eq!(
                f.len(),
                names.len(),
                "field dimension differs from state dimension"
            );
        }
        ExprSystem { names, fields }
    }

    /// Symbolic Lie bracket fields for every Hall index up to the basis length.
    pub fn bracket_exprs(&self, basis: &crate::hall::HallBasis) -> Vec<ExprField> {
        crate::hall::evaluate_all_with(basis, &self.fields, &mut |a, b| lie_bracket_expr(a, b))
    }
}

impl DriftlessSystem for ExprSystem {
    fn state_dim(&self) -> usize {
        self.names.len()
    }

    fn input_dim(&self) -> usize {
        self.fields.len()
    }

    fn field_value<F: Float>(&self, i: usize, x: &[F]) -> Vec<F> {
        self.fields[i].iter().map(|e| e.eval(x)).collect()
    }
}

impl<S: Scalar> JetSystem<S> for ExprSystem {
    fn jets(&self, p: &[S], deg: u32) -> Vec<PolyField<S>> {
        self.fields
            .iter()
            .map(|f| taylor_field(f, p, deg))
            .collect()
    }
}

impl<S: Scalar> DriftlessSystem for CanonicalSystem<S> {
    fn state_dim(&self) -> usize {
        self.dim()
    }

    fn input_dim(&self) -> usize {
        self.m
    }

    fn field_value<F: Float>(&self, i: usize, x: &[F]) -> Vec<F> {
        self.fields[i].iter().map(|p| p.eval_float(x)).collect()
    }
}

impl<S: Scalar> JetSystem<S> for CanonicalSystem<S> {
    fn jets(&self, p: &[S], deg: u32) -> Vec<PolyField<S>> {
        self.fields
            .iter()
            .map(|f| f.iter().map(|c| c.shift(p).truncate(deg)).collect())
            .collect()
    }
}

/// System with polynomial fields in absolute coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct PolySystem<S> {
    pub fields: Vec<PolyField<S>>,
}

impl<S: Scalar> DriftlessSystem for PolySystem<S> {
    fn state_dim(&self) -> usize {
        self.fields.first().map(Vec::len).unwrap_or(0)
    }

    fn input_dim(&self) -> usize {
        self.fields.len()
    }

    fn field_value<F: Float>(&self, i: usize, x: &[F]) -> Vec<F> {
        self.fields[i].iter().map(|p| p.eval_float(x)).collect()
    }
}

impl<S: Scalar> JetSystem<S> for PolySystem<S> {
    fn jets(&self, p: &[S], deg: u32) -> Vec<PolyField<S>> {
        self.fields
            .iter()
            .map(|f| f.iter().map(|c| c.shift(p).truncate(deg)).collect())
            .collect()
    }
}

/// The unicycle `X1 = (cos θ, sin θ, 0)`, `X2 = (0, 0, 1)` on `(x, y, θ)`.
pub fn unicycle() -> ExprSystem {
    let theta = Expr::Var(2);
    ExprSystem::new(
        vec!["x".into(), "y".into(), "theta".into()],
        vec![
            vec![Expr::cos(theta.clone()), Expr::sin(theta), Expr::zero()],
            vec![Expr::zero(), Expr::zero(), Expr::int(1)],
        ],
    )
}

/// The Martinet system `X1 = ∂1`, `X2 = ∂2 + x1² ∂3`.
pub fn martinet() -> ExprSystem {
    let x1 = Expr::Var(0);
    ExprSystem::new(
        vec!["x1".into(), "x2".into(), "x3".into()],
        vec![
            vec![Expr::int(1), Expr::zero(), Expr::zero()],
            vec![Expr::zero(), Expr::int(1), Expr::pow(x1, 2)],
        ],
    )
}

/// Converts polynomial fields to expressions.
pub fn poly_fields_to_expr<S: Scalar>(fields: &[PolyField<S>]) -> Vec<ExprField> {
    fields
        .iter()
        .map(|f| f.iter().map(Expr::from_poly).collect())
        .collect()
}

/// Zero polynomial field.
pub fn zero_field<S: Scalar>(n: usize) -> PolyField<S> {
    vec![Poly::zero(n); n]
}
