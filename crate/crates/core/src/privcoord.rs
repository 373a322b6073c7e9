//! Privileged coordinates for systems free up to step `r`, the canonical
//! first-order approximation, pseudo-norms and dilations.

use num_traits::Float;

use crate::canonical::CanonicalSystem;
use crate::chart::build_chart;
use crate::error::Error;
use crate::hall::HallBasis;
use crate::poly::{PolyField, TriangularMap};
use crate::scalar::Scalar;
use crate::system::JetSystem;

/// Privileged coordinates `z = Φ(a, x)` at an anchor.
#[derive(Clone, Debug)]
pub struct PrivilegedChart<S> {
    pub anchor: Vec<S>,
    pub weights: Vec<usize>,
    /// Affine coordinates `y` of the centered point `x − a`.
    pub linear: TriangularMap<S>,
    /// Triangular corrections `y → z̃`.
    pub correction: TriangularMap<S>,
    /// Canonical-form change `z̃ → z`.
    pub psi: TriangularMap<S>,
    /// Composition of the three, from `x − a` to `z`.
    pub map: TriangularMap<S>,
    anchor_f64: Vec<f64>,
}

impl<S: Scalar> PrivilegedChart<S> {
    pub fn to_chart(&self, x: &[S]) -> Vec<S> {
        let centered: Vec<S> = x
            .iter()
            .zip(&self.anchor)
            .map(|(v, a)| v.clone() - a.clone())
            .collect();
        self.map.apply(&centered)
    }

    pub fn from_chart(&self, z: &[S]) -> Vec<S> {
        self.map
            .apply_inverse(z)
            .into_iter()
            .zip(&self.anchor)
            .map(|(v, a)| v + a.clone())
            .collect()
    }

    pub fn to_chart_f64(&self, x: &[f64]) -> Vec<f64> {
        let centered: Vec<f64> = x.iter().zip(&self.anchor_f64).map(|(v, a)| v - a).collect();
        self.map.apply_f64(&centered)
    }

    pub fn from_chart_f64(&self, z: &[f64]) -> Vec<f64> {
        self.map
            .apply_inverse_f64(z)
            .into_iter()
            .zip(&self.anchor_f64)
            .map(|(v, a)| v + a)
            .collect()
    }

    /// `‖Φ(a, x)‖`.
    pub fn distance_f64(&self, x: &[f64]) -> f64 {
        pseudo_norm(&self.to_chart_f64(x), &self.weights)
    }
}

/// Chart together with the canonical approximation at its anchor.
#[derive(Clone, Debug)]
pub struct ApproxSystem<S> {
    pub chart: PrivilegedChart<S>,
    /// The canonical fields `X̂`, identical for every anchor.
    pub fields: Vec<PolyField<S>>,
    /// The original fields in the chart, truncated at degree `r + 1`.
    pub chart_fields: Vec<PolyField<S>>,
}

impl<S: Scalar> ApproxSystem<S> {
    /// `X_i − X̂_i` in the chart.
    pub fn residuals(&self) -> Vec<PolyField<S>> {
        self.chart_fields
            .iter()
            .zip(&self.fields)
            .map(|(x, h)| x.iter().zip(h).map(|(a, b)| a.sub(b)).collect())
            .collect()
    }
}

/// Builds the privileged chart and canonical approximation of a system that
/// is free up to step `basis.r` at `a`.
pub fn first_order_approx<S: Scalar, Sys: JetSystem<S>>(
    system: &Sys,
    a: &[S],
    basis: &HallBasis,
) -> Result<ApproxSystem<S>, Error> {
    let n = basis.len();
    if a.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "anchor of dimension {} for a free system of dimension {n}",
            a.len()
        )));
    }
    let deg = basis.r as u32 + 1;
    let jets = system.jets(a, deg);
    if jets.len() != basis.m {
        return Err(Error::DimensionMismatch(format!(
            "{} fields for a basis on {} generators",
            jets.len(),
            basis.m
        )));
    }
    let labels: Vec<usize> = (1..=n).collect();
    let step = build_chart(basis, &jets, &labels, basis.r, deg)?;
    let chart = PrivilegedChart {
        anchor: a.to_vec(),
        weights: step.weights.clone(),
        linear: step.linear,
        correction: step.correction,
        psi: step.psi,
        map: step.map,
        anchor_f64: a.iter().map(Scalar::to_f64).collect(),
    };
    let fields = CanonicalSystem::<S>::from_basis(basis.clone()).fields;
    Ok(ApproxSystem {
        chart,
        fields,
        chart_fields: step.fields,
    })
}

/// `Σ_j |z_j|^{1/w_j}`.
pub fn pseudo_norm<F: Float>(z: &[F], weights: &[usize]) -> F {
    z.iter()
        .zip(weights)
        .fold(F::zero(), |acc, (&v, &w)| acc + root(v.abs(), w))
}

fn root<F: Float>(v: F, w: usize) -> F {
    match w {
        1 => v,
        2 => v.sqrt(),
        3 => v.cbrt(),
        _ => v.powf(F::one() / F::from(w).unwrap()),
    }
}

/// `δ_t(z) = (t^{w_1} z_1, …, t^{w_n} z_n)`.
pub fn dilate<F: Float>(z: &[F], t: F, weights: &[usize]) -> Vec<F> {
    z.iter()
        .zip(weights)
        .map(|(&v, &w)| t.powi(w as i32) * v)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hall::build_hall_basis;
    use num_rational::BigRational;

    type Q = BigRational;

    #[test]
    fn pseudo_norm_and_dilation() {
        assert_eq!(pseudo_norm(&[3.0, 4.0, 9.0], &[1, 1, 2]), 10.0);
        assert_eq!(pseudo_norm(&[0.0, 0.0, 0.0], &[1, 1, 2]), 0.0);
        assert_eq!(
            dilate(&[1.0, 1.0, 1.0], 2.0, &[1, 1, 2]),
            vec![2.0, 2.0, 4.0]
        );
        assert_eq!(
            dilate(&[1.0, -3.0, 5.0], 0.0, &[1, 1, 2]),
            vec![0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn canonical_system_is_its_own_approximation() {
        let basis = build_hall_basis(2, 3);
        let sys = CanonicalSystem::<Q>::from_basis(basis.clone());
        let approx = first_order_approx(&sys, &vec![Q::from_i64(0); 5], &basis).unwrap();
        assert_eq!(approx.chart.map, TriangularMap::identity(5));
        assert_eq!(approx.chart_fields, approx.fields);
    }
}
