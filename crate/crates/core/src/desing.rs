//! Desingularization by lifting.
//!
//! A frame of `n` Hall brackets that is independent at the anchor `a` fixes
//! which brackets the original coordinates account for. Every other Hall
//! element of length `s` gets a fiber variable driven by `P_k(z^{s-1})` on
//! channel `φ(k)`, where `z^{s-1}` are the privileged coordinates built at
//! the previous step. After step `r` the lifted system is free up to step `r`
//! and its chart puts it in canonical form at `(a, 0)`.

use num_traits::Float;
use serde::Serialize;

use crate::canonical::{hall_monomial, CanonicalSystem};
use crate::chart::{bracket_fields, build_chart};
use crate::error::Error;
use crate::hall::HallBasis;
use crate::linalg::Matrix;
use crate::poly::{Expr, Poly, PolyField, TriangularMap};
use crate::scalar::Scalar;
use crate::system::{DriftlessSystem, ExprSystem, JetSystem};

/// Frame chosen at an anchor.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameSelection<S> {
    /// Hall indices of the frame, ascending.
    pub labels: Vec<usize>,
    pub anchor: Vec<S>,
    /// `det(X_{I_1}(a), …, X_{I_n}(a))`.
    pub det_value: S,
}

/// Relative threshold used to decide that a floating determinant is nonzero.
pub const FRAME_DET_THRESHOLD: f64 = 1e-9;

/// Whether `det` counts as nonzero for columns with the given norms.
pub fn det_is_admissible<S: Scalar>(det: &S, column_norms: &[f64]) -> bool {
    if S::EXACT {
        !det.is_zero()
    } else {
        let scale: f64 = column_norms.iter().product();
        det.to_f64().abs() > FRAME_DET_THRESHOLD * scale.max(f64::MIN_POSITIVE)
    }
}

/// Values at `p` of every Hall bracket of the system, in index order.
pub fn bracket_values<S: Scalar, Sys: JetSystem<S>>(
    system: &Sys,
    basis: &HallBasis,
    p: &[S],
) -> Vec<Vec<S>> {
    let jets = system.jets(p, basis.r as u32);
    let labels: Vec<usize> = (1..=basis.len()).collect();
    let origin = vec![S::zero(); p.len()];
    bracket_fields(basis, &jets, &labels, basis.r as u32)
        .iter()
        .map(|b| b.iter().map(|c| c.eval(&origin)).collect())
        .collect()
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in start..n {
            if n - i < k - current.len() {
                break;
            }
            current.push(i);
            rec(i + 1, n, k, current, out);
            current.pop();
        }
    }
    rec(0, n, k, &mut current, &mut out);
    out
}

/// Chooses the frame at `a`: least total bracket length first, then the
/// largest absolute determinant.
pub fn select_frame<S: Scalar, Sys: JetSystem<S>>(
    system: &Sys,
    basis: &HallBasis,
    a: &[S],
) -> Result<FrameSelection<S>, Error> {
    let n = a.len();
    let values = bracket_values(system, basis, a);
    let norms: Vec<f64> = values
        .iter()
        .map(|v| v.iter().map(|c| c.to_f64().powi(2)).sum::<f64>().sqrt())
        .collect();
    let mut best: Option<(usize, f64, Vec<usize>, S)> = None;
    for combo in combinations(basis.len(), n) {
        let weight: usize = combo.iter().map(|&j| basis.elements[j].length).sum();
        if let Some((w, _, _, _)) = &best {
            if weight > *w {
                continue;
            }
        }
        let cols: Vec<Vec<S>> = combo.iter().map(|&j| values[j].clone()).collect();
        let det = Matrix::from_columns(&cols).det();
        let col_norms: Vec<f64> = combo.iter().map(|&j| norms[j]).collect();
        if !det_is_admissible(&det, &col_norms) {
            continue;
        }
        let magnitude = det.to_f64().abs();
        let better = match &best {
            None => true,
            Some((w, d, _, _)) => weight < *w || magnitude > *d,
        };
        if better {
            best = Some((weight, magnitude, combo, det));
        }
    }
    let (_, _, combo, det) = best.ok_or(Error::NoFrame)?;
    Ok(FrameSelection {
        labels: combo.iter().map(|j| j + 1).collect(),
        anchor: a.to_vec(),
        det_value: det,
    })
}

/// Record of one lifting step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    /// Labels of the coordinates after this step (`𝓚^s`).
    pub labels: Vec<usize>,
    /// Labels that received a fiber variable at this step.
    pub fibers: Vec<usize>,
    /// Frame determinant of the step's linear coordinates.
    pub frame_det: f64,
}

/// Lifted system that is free up to step `r`, with its canonical chart.
///
/// Lifted points are `(x, v)` with `x` the original state and `v` the fiber
/// variables in the order of `fiber_labels`.
#[derive(Clone, Debug)]
pub struct LiftedSystem<S> {
    pub basis: HallBasis,
    pub base: ExprSystem,
    pub frame: FrameSelection<S>,
    pub anchor: Vec<S>,
    pub fiber_labels: Vec<usize>,
    /// Input channel (1-based) of each fiber variable.
    pub fiber_channels: Vec<usize>,
    /// Fiber components in the centered lifted coordinates `(x − a, v)`.
    pub fiber_polys: Vec<Poly<S>>,
    fiber_f64: Vec<Poly<f64>>,
    anchor_f64: Vec<f64>,
    /// Map from centered lifted coordinates to the canonical coordinates `z`.
    pub chart: TriangularMap<S>,
    /// The lifted fields in `z`, truncated at degree `r + 1`.
    pub chart_fields: Vec<PolyField<S>>,
    /// Canonical first-order approximation `ξ̂` in `z`.
    pub approx: Vec<PolyField<S>>,
    pub steps: Vec<StepRecord>,
}

/// Runs the lifting algorithm for the frame `frame` with step `basis.r`.
pub fn desingularize<S: Scalar>(
    system: &ExprSystem,
    frame: &FrameSelection<S>,
    basis: &HallBasis,
) -> Result<LiftedSystem<S>, Error> {
    let n = system.state_dim();
    let m = system.input_dim();
    if frame.labels.len() != n || frame.anchor.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "frame of size {} for a state of dimension {n}",
            frame.labels.len()
        )));
    }
    if basis.m != m {
        return Err(Error::DimensionMismatch(format!(
            "basis on {} generators for {m} inputs",
            basis.m
        )));
    }
    let r = basis.r;
    let deg = r as u32 + 1;
    let a = &frame.anchor;

    let mut fields: Vec<PolyField<S>> = JetSystem::<S>::jets(system, a, deg);
    let mut prev_map = TriangularMap::<S>::identity(n);
    let mut prev_labels: Vec<usize> = frame.labels.clone();
    let mut fiber_labels = Vec::new();
    let mut fiber_channels = Vec::new();
    let mut fiber_polys: Vec<Poly<S>> = Vec::new();
    let mut steps = Vec::new();

    for s in 1..=r {
        let new: Vec<usize> = basis
            .elements
            .iter()
            .filter(|e| e.length == s && !frame.labels.contains(&e.index))
            .map(|e| e.index)
            .collect();
        let d = prev_map.dim();
        let k = new.len();
        let d_new = d + k;
        let mut w_fields: Vec<PolyField<S>> = fields
            .iter()
            .map(|f| {
                f.iter()
                    .map(|c| c.extend_vars(k))
                    .chain((0..k).map(|_| Poly::zero(d_new)))
                    .collect()
            })
            .collect();
        for (q, &label) in new.iter().enumerate() {
            let element = basis.element(label);
            let (in_w, in_lifted) = if s == 1 {
                (Poly::one(d_new), Poly::one(d))
            } else {
                let pm = hall_monomial::<S>(&element.alpha, basis.len());
                let position = |l: usize| prev_labels.iter().position(|&x| x == l);
                let subs_w: Vec<Poly<S>> = (1..=basis.len())
                    .map(|l| {
                        position(l)
                            .map(|p| Poly::var(d_new, p))
                            .unwrap_or_else(|| Poly::zero(d_new))
                    })
                    .collect();
                let subs_lifted: Vec<Poly<S>> = (1..=basis.len())
                    .map(|l| {
                        position(l)
                            .map(|p| prev_map.forward[p].clone())
                            .unwrap_or_else(|| Poly::zero(d))
                    })
                    .collect();
                (
                    pm.compose(&subs_w, Some(deg)),
                    pm.compose(&subs_lifted, None),
                )
            };
            w_fields[element.phi - 1][d + q] = in_w;
            fiber_labels.push(label);
            fiber_channels.push(element.phi);
            fiber_polys.push(in_lifted);
        }
        let mut labels_w = prev_labels.clone();
        labels_w.extend(&new);
        let step = build_chart(basis, &w_fields, &labels_w, s, deg)?;
        prev_map = prev_map.extend(k).then(&step.map);
        steps.push(StepRecord {
            step: s,
            labels: step.labels.clone(),
            fibers: new,
            frame_det: step.frame_det.to_f64(),
        });
        prev_labels = step.labels;
        fields = step.fields;
    }

    let dim = prev_map.dim();
    let fiber_polys: Vec<Poly<S>> = fiber_polys
        .iter()
        .map(|p| p.extend_vars(dim - p.nvars()))
        .collect();
    let approx = CanonicalSystem::<S>::from_basis(basis.clone()).fields;
    let mut anchor = a.clone();
    anchor.resize(dim, S::zero());
    Ok(LiftedSystem {
        basis: basis.clone(),
        base: system.clone(),
        frame: frame.clone(),
        fiber_f64: fiber_polys.iter().map(Poly::to_f64_poly).collect(),
        anchor_f64: anchor.iter().map(Scalar::to_f64).collect(),
        anchor,
        fiber_labels,
        fiber_channels,
        fiber_polys,
        chart: prev_map,
        chart_fields: fields,
        approx,
        steps,
    })
}

impl<S: Scalar> LiftedSystem<S> {
    pub fn base_dim(&self) -> usize {
        self.base.state_dim()
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    /// `(x, 0)`.
    pub fn lift_point<T: Clone + num_traits::Zero>(&self, x: &[T]) -> Vec<T> {
        lift_point(x, self.dim())
    }

    /// The `x` part of a lifted point.
    pub fn project<T: Clone>(&self, p: &[T]) -> Vec<T> {
        project(p, self.base_dim())
    }

    /// Canonical coordinates `z` of a lifted point.
    pub fn to_chart(&self, p: &[S]) -> Vec<S> {
        let centered: Vec<S> = p
            .iter()
            .zip(&self.anchor)
            .map(|(x, a)| x.clone() - a.clone())
            .collect();
        self.chart.apply(&centered)
    }

    pub fn from_chart(&self, z: &[S]) -> Vec<S> {
        self.chart
            .apply_inverse(z)
            .into_iter()
            .zip(&self.anchor)
            .map(|(x, a)| x + a.clone())
            .collect()
    }

    pub fn to_chart_f64(&self, p: &[f64]) -> Vec<f64> {
        let centered: Vec<f64> = p.iter().zip(&self.anchor_f64).map(|(x, a)| x - a).collect();
        self.chart.apply_f64(&centered)
    }

    pub fn from_chart_f64(&self, z: &[f64]) -> Vec<f64> {
        self.chart
            .apply_inverse_f64(z)
            .into_iter()
            .zip(&self.anchor_f64)
            .map(|(x, a)| x + a)
            .collect()
    }

    /// Variable names: the base names followed by `v<label>` per fiber.
    pub fn names(&self) -> Vec<String> {
        self.base
            .names
            .iter()
            .cloned()
            .chain(self.fiber_labels.iter().map(|l| format!("v{l}")))
            .collect()
    }

    /// The lifted fields as expressions in absolute lifted coordinates.
    pub fn to_expr_system(&self) -> ExprSystem {
        let dim = self.dim();
        let n = self.base_dim();
        let neg_anchor: Vec<S> = self.anchor.iter().map(|a| -a.clone()).collect();
        let fields = (0..self.basis.m)
            .map(|i| {
                let mut f: Vec<Expr> = self.base.fields[i].clone();
                f.resize(dim, Expr::zero());
                for (q, poly) in self.fiber_polys.iter().enumerate() {
                    if self.fiber_channels[q] == i + 1 {
                        f[n + q] = Expr::from_poly(&poly.shift(&neg_anchor));
                    }
                }
                f
            })
            .collect();
        ExprSystem::new(self.names(), fields)
    }
}

/// `(x, 0)` padded to `dim`.
pub fn lift_point<T: Clone + num_traits::Zero>(x: &[T], dim: usize) -> Vec<T> {
    let mut p = x.to_vec();
    p.resize(dim, T::zero());
    p
}

/// First `n` coordinates.
pub fn project<T: Clone>(p: &[T], n: usize) -> Vec<T> {
    p[..n].to_vec()
}

impl<S: Scalar> DriftlessSystem for LiftedSystem<S> {
    fn state_dim(&self) -> usize {
        self.dim()
    }

    fn input_dim(&self) -> usize {
        self.basis.m
    }

    fn field_value<F: Float>(&self, i: usize, x: &[F]) -> Vec<F> {
        let n = self.base_dim();
        let mut out = self.base.field_value(i, &x[..n]);
        out.resize(self.dim(), F::zero());
        let mut centered: Option<Vec<F>> = None;
        for (q, poly) in self.fiber_f64.iter().enumerate() {
            if self.fiber_channels[q] != i + 1 {
                continue;
            }
            let c = centered.get_or_insert_with(|| {
                x.iter()
                    .zip(&self.anchor_f64)
                    .map(|(&v, &a)| v - F::from(a).unwrap())
                    .collect()
            });
            out[n + q] = poly.eval_float(c);
        }
        out
    }
}

impl<S: Scalar> JetSystem<S> for LiftedSystem<S> {
    fn jets(&self, p: &[S], deg: u32) -> Vec<PolyField<S>> {
        let n = self.base_dim();
        let dim = self.dim();
        let base_jets: Vec<PolyField<S>> = JetSystem::<S>::jets(&self.base, &p[..n], deg);
        let offset: Vec<S> = p
            .iter()
            .zip(&self.anchor)
            .map(|(x, a)| x.clone() - a.clone())
            .collect();
        base_jets
            .into_iter()
            .enumerate()
            .map(|(i, f)| {
                let mut out: PolyField<S> = f.iter().map(|c| c.extend_vars(dim - n)).collect();
                out.resize(dim, Poly::zero(dim));
                for (q, poly) in self.fiber_polys.iter().enumerate() {
                    if self.fiber_channels[q] == i + 1 {
                        out[n + q] = poly.shift(&offset).truncate(deg);
                    }
                }
                out
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hall::build_hall_basis;
    use crate::system::{martinet, unicycle};
    use num_rational::BigRational;

    type Q = BigRational;

    fn zeros(n: usize) -> Vec<Q> {
        vec![Q::from_i64(0); n]
    }

    #[test]
    fn martinet_frame_at_origin() {
        let basis = build_hall_basis(2, 3);
        let frame = select_frame(&martinet(), &basis, &zeros(3)).unwrap();
        assert_eq!(frame.labels, vec![1, 2, 4]);
        let away = select_frame(
            &martinet(),
            &basis,
            &[Q::from_i64(1), Q::from_i64(0), Q::from_i64(0)],
        )
        .unwrap();
        assert_eq!(away.labels, vec![1, 2, 3]);
    }

    #[test]
    fn unicycle_frame() {
        let basis = build_hall_basis(2, 2);
        let frame = select_frame(&unicycle(), &basis, &zeros(3)).unwrap();
        assert_eq!(frame.labels, vec![1, 2, 3]);
        assert_eq!(frame.det_value.abs_val(), Q::from_i64(1));
    }

    #[test]
    fn martinet_lift_has_canonical_approximation() {
        let basis = build_hall_basis(2, 3);
        let frame = select_frame(&martinet(), &basis, &zeros(3)).unwrap();
        let lifted = desingularize(&martinet(), &frame, &basis).unwrap();
        assert_eq!(lifted.dim(), 5);
        assert_eq!(lifted.fiber_labels, vec![3, 5]);
        let weights = basis.free_weights.clone();
        for (xi, hat) in lifted.chart_fields.iter().zip(&lifted.approx) {
            for (j, (c, h)) in xi.iter().zip(hat).enumerate() {
                let minus_one = c.filter(|m| {
                    crate::poly::mono_weighted_degree(m, &weights) - (weights[j] as i64) < 0
                });
                assert_eq!(&minus_one, h, "component {j}");
            }
        }
    }

    #[test]
    fn combination_count() {
        assert_eq!(combinations(5, 3).len(), 10);
    }
}
