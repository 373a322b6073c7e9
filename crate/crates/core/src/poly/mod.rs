//! Symbolic algebra: expressions, sparse polynomials, vector fields.

pub mod expr;
pub mod field;
pub mod order;
pub mod polynomial;

pub use expr::{parse_expr, Expr, ExprError};
pub use field::{
    apply, apply_expr, eval_field, field_is_zero, lie_bracket, lie_bracket_expr, pushforward,
    taylor_field, taylor_truncate, ExprField, PolyField, TriangularMap, WeightedPolynomialField,
};
pub use order::{nonholonomic_order, order_at_origin, EvalMode, OrderResult};
pub use polynomial::{mono_degree, mono_weighted_degree, Monomial, Poly};
