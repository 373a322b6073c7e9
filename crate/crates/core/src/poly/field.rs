//! Vector fields with polynomial or expression coefficients, Lie brackets,
//! weighted-degree decomposition and pushforwards by polynomial maps.

use std::collections::BTreeMap;

use super::expr::Expr;
use super::polynomial::{mono_weighted_degree, Poly};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Vector field with polynomial components.
pub type PolyField<S> = Vec<Poly<S>>;

/// Vector field with expression components.
pub type ExprField = Vec<Expr>;

/// Derivative of `f` along `v`: `Σ v_i ∂_i f`, truncated at degree `cap`.
pub fn apply<S: Scalar>(v: &[Poly<S>], f: &Poly<S>, cap: Option<u32>) -> Poly<S> {
    let mut out = Poly::zero(f.nvars());
    for (i, vi) in v.iter().enumerate() {
        if vi.is_zero() {
            continue;
        }
        let d = f.diff(i);
        if d.is_zero() {
            continue;
        }
        out = out.add(&vi.mul_trunc(&d, cap));
    }
    out
}

/// `[V, W] = DW·V − DV·W`, truncated at degree `cap`.
pub fn lie_bracket<S: Scalar>(v: &[Poly<S>], w: &[Poly<S>], cap: Option<u32>) -> PolyField<S> {
    assert_eq!(v.len(), w.len(), "bracket of fields of different dimension");
    (0..v.len())
        .map(|k| apply(v, &w[k], cap).sub(&apply(w, &v[k], cap)))
        .collect()
}

pub fn field_is_zero<S: Scalar>(v: &[Poly<S>]) -> bool {
    v.iter().all(Poly::is_zero)
}

/// Value of a polynomial field at a point.
pub fn eval_field<S: Scalar>(v: &[Poly<S>], x: &[S]) -> Vec<S> {
    v.iter().map(|p| p.eval(x)).collect()
}

/// Derivative of `f` along an expression field.
pub fn apply_expr(v: &[Expr], f: &Expr) -> Expr {
    Expr::sum(
        v.iter()
            .enumerate()
            .filter(|(_, vi)| !vi.is_zero())
            .map(|(i, vi)| Expr::product(vec![vi.clone(), f.diff(i)]))
            .collect(),
    )
}

/// Lie bracket of expression fields.
pub fn lie_bracket_expr(v: &[Expr], w: &[Expr]) -> ExprField {
    assert_eq!(v.len(), w.len(), "bracket of fields of different dimension");
    (0..v.len())
        .map(|k| Expr::sum(vec![apply_expr(v, &w[k]), Expr::neg(apply_expr(w, &v[k]))]))
        .collect()
}

/// Taylor expansion of an expression field at `a`, truncated at degree `deg`.
pub fn taylor_field<S: Scalar>(v: &[Expr], a: &[S], deg: u32) -> PolyField<S> {
    v.iter().map(|e| e.taylor(a, deg)).collect()
}

/// Polynomial field with coordinate weights attached.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedPolynomialField<S> {
    pub components: PolyField<S>,
    pub weights: Vec<usize>,
}

impl<S: Scalar> WeightedPolynomialField<S> {
    pub fn new(components: PolyField<S>, weights: Vec<usize>) -> Self {
        assert_eq!(components.len(), weights.len());
        WeightedPolynomialField {
            components,
            weights,
        }
    }

    /// Homogeneous components keyed by weighted degree `w(α) − w_j`.
    pub fn weighted_components(&self) -> BTreeMap<i64, PolyField<S>> {
        let n = self.components.len();
        let mut out: BTreeMap<i64, PolyField<S>> = BTreeMap::new();
        for (j, comp) in self.components.iter().enumerate() {
            for (m, c) in comp.terms() {
                let d = mono_weighted_degree(m, &self.weights) - self.weights[j] as i64;
                let entry = out
                    .entry(d)
                    .or_insert_with(|| vec![Poly::zero(comp.nvars()); n]);
                entry[j].add_term(m.clone(), c.clone());
            }
        }
        out
    }

    /// Least weighted degree present (the order of the field), `None` for zero.
    pub fn order(&self) -> Option<i64> {
        self.weighted_components().keys().next().copied()
    }
}

/// Taylor expansion keeping monomials whose weighted degree `w(α) − w_j`
/// does not exceed `cap`.
pub fn taylor_truncate<S: Scalar>(
    v: &[Expr],
    a: &[S],
    weights: &[usize],
    cap: i64,
) -> WeightedPolynomialField<S> {
    let wmin = *weights.iter().min().unwrap_or(&1) as i64;
    let wmax = *weights.iter().max().unwrap_or(&1) as i64;
    let deg = ((cap + wmax).max(0) / wmin.max(1)) as u32;
    let comps = v
        .iter()
        .enumerate()
        .map(|(j, e)| {
            let wj = weights[j] as i64;
            e.taylor(a, deg)
                .filter(|m| mono_weighted_degree(m, weights) - wj <= cap)
        })
        .collect();
    WeightedPolynomialField::new(comps, weights.to_vec())
}

/// Polynomial diffeomorphism stored together with its inverse.
///
/// Both directions are polynomial maps; charts built by this crate are
/// linear maps or triangular maps `z_j = y_j + pol_j(y_1,…,y_{j-1})`, and
/// compositions of those.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangularMap<S> {
    pub forward: Vec<Poly<S>>,
    pub inverse: Vec<Poly<S>>,
}

impl<S: Scalar> TriangularMap<S> {
    pub fn identity(n: usize) -> Self {
        let id: Vec<Poly<S>> = (0..n).map(|i| Poly::var(n, i)).collect();
        TriangularMap {
            forward: id.clone(),
            inverse: id,
        }
    }

    pub fn dim(&self) -> usize {
        self.forward.len()
    }

    /// Linear map `y = M x` with `M^{-1}` supplied.
    pub fn linear(m: &Matrix<S>, m_inv: &Matrix<S>) -> Self {
        TriangularMap {
            forward: linear_polys(m),
            inverse: linear_polys(m_inv),
        }
    }

    /// Triangular map with identity linear part, inverse by back-substitution.
    ///
    /// Panics if component `j` depends on a variable of index `>= j`
    /// other than through the leading `y_j`.
    pub fn unipotent(forward: Vec<Poly<S>>) -> Self {
        let n = forward.len();
        let mut inverse: Vec<Poly<S>> = Vec::with_capacity(n);
        for (j, fj) in forward.iter().enumerate() {
            let tail = fj.sub(&Poly::var(n, j));
            for (m, _) in tail.terms() {
                assert!(
                    m[j..].iter().all(|&e| e == 0),
                    "map is not triangular at component {j}"
                );
            }
            // y_j = z_j − tail(y_1(z), …, y_{j−1}(z)).
            let mut subs: Vec<Poly<S>> = inverse.clone();
            subs.extend((j..n).map(|_| Poly::zero(n)));
            let yj = Poly::var(n, j).sub(&tail.compose(&subs, None));
            inverse.push(yj);
        }
        TriangularMap { forward, inverse }
    }

    /// `other ∘ self`: apply `self` first.
    pub fn then(&self, other: &TriangularMap<S>) -> TriangularMap<S> {
        TriangularMap {
            forward: other
                .forward
                .iter()
                .map(|p| p.compose(&self.forward, None))
                .collect(),
            inverse: self
                .inverse
                .iter()
                .map(|p| p.compose(&other.inverse, None))
                .collect(),
        }
    }

    /// Appends `extra` coordinates carried through unchanged.
    pub fn extend(&self, extra: usize) -> TriangularMap<S> {
        let n = self.dim() + extra;
        let grow = |polys: &[Poly<S>]| -> Vec<Poly<S>> {
            polys
                .iter()
                .map(|p| p.extend_vars(extra))
                .chain((self.dim()..n).map(|i| Poly::var(n, i)))
                .collect()
        };
        TriangularMap {
            forward: grow(&self.forward),
            inverse: grow(&self.inverse),
        }
    }

    pub fn apply(&self, x: &[S]) -> Vec<S> {
        self.forward.iter().map(|p| p.eval(x)).collect()
    }

    pub fn apply_inverse(&self, z: &[S]) -> Vec<S> {
        self.inverse.iter().map(|p| p.eval(z)).collect()
    }

    pub fn apply_f64(&self, x: &[f64]) -> Vec<f64> {
        self.forward.iter().map(|p| p.eval_f64(x)).collect()
    }

    pub fn apply_inverse_f64(&self, z: &[f64]) -> Vec<f64> {
        self.inverse.iter().map(|p| p.eval_f64(z)).collect()
    }

    pub fn inverted(&self) -> TriangularMap<S> {
        TriangularMap {
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
        }
    }
}

fn linear_polys<S: Scalar>(m: &Matrix<S>) -> Vec<Poly<S>> {
    (0..m.rows())
        .map(|i| {
            let mut p = Poly::zero(m.cols());
            for j in 0..m.cols() {
                p = p.add(&Poly::var(m.cols(), j).scale(m.get(i, j)));
            }
            p
        })
        .collect()
}

/// `dΦ·V∘Φ^{-1}`: the field `v` expressed in the coordinates `z = Φ(x)`.
/// Truncation at degree `cap` is valid when `Φ(0) = 0`.
pub fn pushforward<S: Scalar>(
    v: &[Poly<S>],
    map: &TriangularMap<S>,
    cap: Option<u32>,
) -> PolyField<S> {
    map.forward
        .iter()
        .map(|phi_k| {
            let in_old = apply(v, phi_k, cap);
            in_old.compose(&map.inverse, cap)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use num_traits::One;

    type Q = BigRational;

    fn q(n: i64) -> Q {
        Q::from_i64(n)
    }

    fn unit(n: usize, i: usize) -> PolyField<Q> {
        (0..n)
            .map(|k| if k == i { Poly::one(n) } else { Poly::zero(n) })
            .collect()
    }

    #[test]
    fn basic_brackets() {
        assert!(field_is_zero(&lie_bracket(&unit(2, 0), &unit(2, 1), None)));
        let w: PolyField<Q> = vec![Poly::zero(2), Poly::var(2, 0)];
        assert_eq!(lie_bracket(&unit(2, 0), &w, None), unit(2, 1));
    }

    #[test]
    fn martinet_brackets() {
        let x1 = Poly::<Q>::var(3, 0);
        let x2f: PolyField<Q> = vec![Poly::zero(3), Poly::one(3), x1.mul(&x1)];
        let x1f = unit(3, 0);
        let b3 = lie_bracket(&x1f, &x2f, None);
        assert_eq!(b3, vec![Poly::zero(3), Poly::zero(3), x1.scale(&q(2))]);
        let b4 = lie_bracket(&x1f, &b3, None);
        assert_eq!(
            b4,
            vec![Poly::zero(3), Poly::zero(3), Poly::constant(3, q(2))]
        );
    }

    #[test]
    fn shear_pushforward() {
        let y = |i| Poly::<Q>::var(3, i);
        let map = TriangularMap::unipotent(vec![y(0), y(1), y(2).add(&y(0).mul(&y(1)))]);
        let v = unit(3, 2);
        assert_eq!(pushforward(&v, &map, None), unit(3, 2));
        let back = pushforward(&pushforward(&unit(3, 0), &map, None), &map.inverted(), None);
        assert_eq!(back, unit(3, 0));
    }

    #[test]
    fn weighted_decomposition() {
        let theta2 = Poly::<Q>::monomial(vec![0, 0, 2], q(-1) / q(2));
        let field = WeightedPolynomialField::new(
            vec![Poly::one(3).add(&theta2), Poly::zero(3), Poly::zero(3)],
            vec![1, 1, 2],
        );
        let comps = field.weighted_components();
        assert_eq!(comps.keys().copied().collect::<Vec<_>>(), vec![-1, 3]);
        let theta_weight_one = WeightedPolynomialField::new(
            vec![
                Poly::one(2).add(&Poly::monomial(vec![0, 2], q(-1) / q(2))),
                Poly::zero(2),
            ],
            vec![1, 1],
        );
        assert_eq!(
            theta_weight_one
                .weighted_components()
                .keys()
                .copied()
                .collect::<Vec<_>>(),
            vec![-1, 1]
        );
        assert!(Q::one().is_one());
    }
}
