//! Canonical free nilpotent system of step `r` on `m` inputs.
//!
//! Coordinates `v_1, …, v_ñ` are indexed by the Hall basis. The monomials
//! `P_j = v^{α_j}/α_j!` drive `v̇_j = P_j u_{φ(j)}`, and the fields are
//! `D_i = ∂_i + Σ_{φ(j)=i, |I_j|≥2} P_j ∂_j`.

use crate::hall::{build_hall_basis, evaluate_all_with, HallBasis};
use crate::poly::{lie_bracket, Poly, PolyField, WeightedPolynomialField};
use crate::scalar::{factorial, Scalar};

#[derive(Clone, Debug)]
pub struct CanonicalSystem<S> {
    pub m: usize,
    pub r: usize,
    pub basis: HallBasis,
    /// `P_j`, one per index.
    pub monomials: Vec<Poly<S>>,
    /// `D_1, …, D_m`.
    pub fields: Vec<PolyField<S>>,
}

/// Right-hand side of one coordinate: `v̇_j = P_j · u_channel`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dynamics<S> {
    pub monomial: Poly<S>,
    /// 1-based input channel `φ(j)`.
    pub channel: usize,
}

/// `v^α / α!` in `n` variables.
pub fn hall_monomial<S: Scalar>(alpha: &[u32], n: usize) -> Poly<S> {
    let mut mono = vec![0u32; n];
    let mut denom = S::one();
    for (l, &e) in alpha.iter().enumerate() {
        mono[l] = e;
        denom = denom * factorial::<S>(e);
    }
    Poly::monomial(mono, S::one() / denom)
}

impl<S: Scalar> CanonicalSystem<S> {
    pub fn new(m: usize, r: usize) -> Self {
        Self::from_basis(build_hall_basis(m, r))
    }

    pub fn from_basis(basis: HallBasis) -> Self {
        let n = basis.len();
        let monomials: Vec<Poly<S>> = basis
            .elements
            .iter()
            .map(|e| hall_monomial(&e.alpha, n))
            .collect();
        let mut fields: Vec<PolyField<S>> = vec![vec![Poly::zero(n); n]; basis.m];
        for e in &basis.elements {
            fields[e.phi - 1][e.index - 1] = if e.length == 1 {
                Poly::one(n)
            } else {
                monomials[e.index - 1].clone()
            };
        }
        CanonicalSystem {
            m: basis.m,
            r: basis.r,
            basis,
            monomials,
            fields,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn weights(&self) -> &[usize] {
        &self.basis.free_weights
    }

    pub fn weighted_field(&self, i: usize) -> WeightedPolynomialField<S> {
        WeightedPolynomialField::new(self.fields[i - 1].clone(), self.basis.free_weights.clone())
    }

    /// `D_{I_k}`.
    pub fn bracket(&self, k: usize) -> WeightedPolynomialField<S> {
        let all = self.all_brackets();
        WeightedPolynomialField::new(all[k - 1].clone(), self.basis.free_weights.clone())
    }

    /// `D_{I_1}, …, D_{I_ñ}` in index order.
    pub fn all_brackets(&self) -> Vec<PolyField<S>> {
        evaluate_all_with(&self.basis, &self.fields, &mut |a, b| {
            lie_bracket(a, b, None)
        })
    }

    pub fn dynamics(&self, j: usize) -> Dynamics<S> {
        Dynamics {
            monomial: self.monomials[j - 1].clone(),
            channel: self.basis.element(j).phi,
        }
    }
}

/// Convenience constructor.
pub fn canonical_fields<S: Scalar>(m: usize, r: usize) -> CanonicalSystem<S> {
    CanonicalSystem::new(m, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    type Q = BigRational;

    #[test]
    fn step_three_second_field() {
        let sys = CanonicalSystem::<Q>::new(2, 3);
        let d2 = &sys.fields[1];
        let v = |i| Poly::<Q>::var(5, i);
        assert_eq!(d2[0], Poly::zero(5));
        assert_eq!(d2[1], Poly::one(5));
        assert_eq!(d2[2], v(0));
        assert_eq!(d2[3], v(0).mul(&v(0)).scale(&Q::from_ratio(1, 2)));
        assert_eq!(d2[4], v(0).mul(&v(1)));
        assert_eq!(sys.dynamics(5).channel, 2);
    }

    #[test]
    fn first_field_is_a_coordinate_vector() {
        let sys = CanonicalSystem::<Q>::new(3, 3);
        for (k, c) in sys.fields[0].iter().enumerate() {
            assert_eq!(c.is_zero(), k != 0);
        }
    }

    #[test]
    fn brackets_are_unit_vectors_at_zero() {
        let sys = CanonicalSystem::<Q>::new(2, 3);
        let zero = vec![Q::from_i64(0); 5];
        for (k, b) in sys.all_brackets().iter().enumerate() {
            for (j, c) in b.iter().enumerate() {
                assert_eq!(c.eval(&zero), Q::from_i64((j == k) as i64));
            }
        }
    }
}
