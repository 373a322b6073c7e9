//! Construction of privileged coordinates in canonical form from polynomial
//! jets of the fields at the origin.
//!
//! Given `m` fields expanded in centered coordinates `w`, and a Hall label
//! for each coordinate, the engine
//! 1. builds linear coordinates `y = F^{-1} w` from the bracket frame at 0,
//! 2. applies the recursive polynomial corrections that make `y` privileged,
//! 3. identifies the weighted-homogeneous change `Ψ` that puts the
//!    weight −1 part of the fields into canonical form.
//!
//! The same engine serves every lifting step and the free-system charts.

use std::collections::BTreeMap;

use crate::canonical::hall_monomial;
use crate::error::Error;
use crate::hall::{evaluate_all_with, HallBasis, HallKind};
use crate::linalg::Matrix;
use crate::poly::{apply, lie_bracket, pushforward, Monomial, Poly, PolyField, TriangularMap};
use crate::scalar::{factorial, Scalar};

/// Result of one chart construction.
#[derive(Clone, Debug)]
pub struct ChartStep<S> {
    /// Map from the input coordinates `w` to the new coordinates `z`.
    pub map: TriangularMap<S>,
    /// Affine part `y = F^{-1} w`.
    pub linear: TriangularMap<S>,
    /// Triangular corrections `y → z̃`.
    pub correction: TriangularMap<S>,
    /// Canonical-form change `z̃ → z`.
    pub psi: TriangularMap<S>,
    /// Hall labels of the new coordinates, ascending.
    pub labels: Vec<usize>,
    /// Weights of the new coordinates.
    pub weights: Vec<usize>,
    /// The fields in `z` coordinates, truncated at the working degree.
    pub fields: Vec<PolyField<S>>,
    /// Frame determinant at the origin.
    pub frame_det: S,
}

/// Evaluates every label's bracket field from the generators, truncated at `cap`.
pub(crate) fn bracket_fields<S: Scalar>(
    basis: &HallBasis,
    fields: &[PolyField<S>],
    labels: &[usize],
    cap: u32,
) -> Vec<PolyField<S>> {
    let needed = labels.iter().copied().max().unwrap_or(0);
    let sub = truncated_basis(basis, needed);
    let all = evaluate_all_with(&sub, fields, &mut |a, b| lie_bracket(a, b, Some(cap)));
    labels.iter().map(|&l| all[l - 1].clone()).collect()
}

fn truncated_basis(basis: &HallBasis, upto: usize) -> HallBasis {
    let mut b = basis.clone();
    b.elements.truncate(upto.max(basis.m));
    b
}

/// All exponent vectors over `positions` with total degree `k`, kept when
/// `accept(weighted degree)` holds.
fn multi_indices(
    positions: &[usize],
    weights: &[usize],
    k: u32,
    accept: &dyn Fn(i64) -> bool,
) -> Vec<Vec<(usize, u32)>> {
    fn rec(
        positions: &[usize],
        weights: &[usize],
        k: u32,
        idx: usize,
        current: &mut Vec<(usize, u32)>,
        wsum: i64,
        out: &mut Vec<Vec<(usize, u32)>>,
        accept: &dyn Fn(i64) -> bool,
    ) {
        if k == 0 {
            if accept(wsum) {
                out.push(current.clone());
            }
            return;
        }
        if idx == positions.len() {
            return;
        }
        let p = positions[idx];
        for e in (0..=k).rev() {
            if e > 0 {
                current.push((p, e));
            }
            rec(
                positions,
                weights,
                k - e,
                idx + 1,
                current,
                wsum + e as i64 * weights[p] as i64,
                out,
                accept,
            );
            if e > 0 {
                current.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(
        positions,
        weights,
        k,
        0,
        &mut Vec::new(),
        0,
        &mut out,
        accept,
    );
    out
}

/// `[X_{p1}^{e1} ⋯ X_{pq}^{eq} g](0)`, applying the rightmost factor first.
fn word_value<S: Scalar>(brackets: &[PolyField<S>], beta: &[(usize, u32)], g: &Poly<S>) -> S {
    let total: u32 = beta.iter().map(|(_, e)| e).sum();
    let mut h = g.truncate(total);
    let mut remaining = total;
    for &(p, e) in beta.iter().rev() {
        for _ in 0..e {
            remaining -= 1;
            h = apply(&brackets[p], &h, Some(remaining));
            if h.is_zero() {
                return S::zero();
            }
        }
    }
    h.constant_term()
}

fn monomial_over(n: usize, beta: &[(usize, u32)]) -> Monomial {
    let mut mono = vec![0u32; n];
    for &(p, e) in beta {
        mono[p] = e;
    }
    mono
}

fn beta_factorial<S: Scalar>(beta: &[(usize, u32)]) -> S {
    beta.iter()
        .fold(S::one(), |acc, &(_, e)| acc * factorial::<S>(e))
}

/// Builds canonical privileged coordinates.
///
/// * `fields`: the `m` fields in centered coordinates `w`, truncated at `deg`.
/// * `labels`: Hall label of each `w` coordinate (any order, distinct).
/// * `step`: labels of length at most `step` are the flag coordinates; the
///   remaining ones get weight `step + 1` and only the lighter correction.
pub fn build_chart<S: Scalar>(
    basis: &HallBasis,
    fields: &[PolyField<S>],
    labels: &[usize],
    step: usize,
    deg: u32,
) -> Result<ChartStep<S>, Error> {
    let n = labels.len();
    let mut sorted = labels.to_vec();
    sorted.sort_unstable();
    let lengths: Vec<usize> = sorted.iter().map(|&l| basis.element(l).length).collect();
    let in_flag: Vec<bool> = lengths.iter().map(|&len| len <= step).collect();
    let weights: Vec<usize> = lengths
        .iter()
        .map(|&len| if len <= step { len } else { step + 1 })
        .collect();

    // Linear coordinates from the frame at the origin.
    let origin = vec![S::zero(); n];
    let brackets_w = bracket_fields(basis, fields, &sorted, deg);
    let columns: Vec<Vec<S>> = brackets_w
        .iter()
        .map(|b| b.iter().map(|c| c.eval(&origin)).collect())
        .collect();
    let frame = Matrix::from_columns(&columns);
    let frame_det = frame.det();
    let frame_inv = frame.inverse().ok_or(Error::SingularFrame {
        labels: sorted.clone(),
    })?;
    let linear = TriangularMap::linear(&frame_inv, &frame);
    let fields_y: Vec<PolyField<S>> = fields
        .iter()
        .map(|v| pushforward(v, &linear, Some(deg)))
        .collect();
    let brackets_y = bracket_fields(basis, &fields_y, &sorted, deg);

    // Recursive corrections.
    let flag_positions: Vec<usize> = (0..n).filter(|&p| in_flag[p]).collect();
    let mut forward = Vec::with_capacity(n);
    for p in 0..n {
        let yp = Poly::var(n, p);
        let (candidates, kmax, accept): (Vec<usize>, u32, Box<dyn Fn(i64) -> bool>) = if in_flag[p]
        {
            let w = weights[p] as i64;
            let cands = (0..p).filter(|&q| weights[q] < weights[p]).collect();
            (
                cands,
                weights[p].saturating_sub(1) as u32,
                Box::new(move |d| d < w),
            )
        } else {
            let s = step as i64;
            (
                flag_positions.clone(),
                step as u32,
                Box::new(move |d| d <= s),
            )
        };
        let mut acc = yp.clone();
        for k in 2..=kmax {
            let mut r_k = Poly::zero(n);
            for beta in multi_indices(&candidates, &weights, k, &*accept) {
                let value = word_value(&brackets_y, &beta, &acc);
                if value.is_negligible(1.0) {
                    continue;
                }
                r_k.add_term(monomial_over(n, &beta), -value / beta_factorial::<S>(&beta));
            }
            acc = acc.add(&r_k);
        }
        forward.push(acc);
    }
    let correction = TriangularMap::unipotent(forward);
    let fields_t: Vec<PolyField<S>> = fields_y
        .iter()
        .map(|v| pushforward(v, &correction, Some(deg)))
        .collect();

    // Identification of Ψ.
    let psi = identify_psi(basis, &fields_t, &sorted, &weights, &in_flag)?;
    let psi_map = TriangularMap::unipotent(psi);
    let fields_z: Vec<PolyField<S>> = fields_t
        .iter()
        .map(|v| pushforward(v, &psi_map, Some(deg)))
        .collect();

    let map = linear.then(&correction).then(&psi_map);
    Ok(ChartStep {
        map,
        linear,
        correction,
        psi: psi_map,
        labels: sorted,
        weights,
        fields: fields_z,
        frame_det,
    })
}

/// Solves for `Ψ_j = z̃_j + Σ β_α z̃^α` (weighted degree `w_j`) so that the
/// weight-`(w_j − 1)` part of `ξ_i·Ψ_j` equals `δ_{i,φ(j)} P_j(Ψ)`.
fn identify_psi<S: Scalar>(
    basis: &HallBasis,
    fields: &[PolyField<S>],
    labels: &[usize],
    weights: &[usize],
    in_flag: &[bool],
) -> Result<Vec<Poly<S>>, Error> {
    let n = labels.len();
    let position: BTreeMap<usize, usize> =
        labels.iter().enumerate().map(|(p, &l)| (l, p)).collect();
    let mut psi: Vec<Poly<S>> = Vec::with_capacity(n);
    for p in 0..n {
        let zp = Poly::var(n, p);
        if !in_flag[p] {
            psi.push(zp);
            continue;
        }
        let label = labels[p];
        let element = basis.element(label);
        let w = weights[p] as i64;
        let lighter: Vec<usize> = (0..n)
            .filter(|&q| in_flag[q] && weights[q] < weights[p])
            .collect();
        let mut unknowns: Vec<Monomial> = Vec::new();
        for k in 2..=weights[p] as u32 {
            for beta in multi_indices(&lighter, weights, k, &|d| d == w) {
                unknowns.push(monomial_over(n, &beta));
            }
        }
        // Target: P_label evaluated on the already identified Ψ.
        let target = {
            let pm = hall_monomial::<S>(&element.alpha, basis.len());
            let subs: Vec<Poly<S>> = (0..basis.len())
                .map(|l| match position.get(&(l + 1)) {
                    Some(&q) if q < psi.len() => psi[q].clone(),
                    _ => Poly::zero(n),
                })
                .collect();
            pm.compose(&subs, None).weighted_part(weights, w - 1)
        };
        let mut rows: BTreeMap<(usize, Monomial), (Vec<S>, S)> = BTreeMap::new();
        let nu = unknowns.len();
        for (i, xi) in fields.iter().enumerate() {
            let channel = i + 1;
            let base = apply(xi, &zp, None).weighted_part(weights, w - 1);
            let rhs_poly =
                if channel == element.phi && matches!(element.kind, HallKind::Bracket { .. }) {
                    target.sub(&base)
                } else if channel == element.phi {
                    Poly::constant(n, S::one()).sub(&base)
                } else {
                    base.neg()
                };
            for (mono, c) in rhs_poly.terms() {
                rows.entry((i, mono.clone()))
                    .or_insert_with(|| (vec![S::zero(); nu], S::zero()))
                    .1 = c.clone();
            }
            for (u, mono_u) in unknowns.iter().enumerate() {
                let contribution = apply(xi, &Poly::monomial(mono_u.clone(), S::one()), None)
                    .weighted_part(weights, w - 1);
                for (mono, c) in contribution.terms() {
                    let entry = rows
                        .entry((i, mono.clone()))
                        .or_insert_with(|| (vec![S::zero(); nu], S::zero()));
                    entry.0[u] = entry.0[u].clone() + c.clone();
                }
            }
        }
        let mut poly = zp.clone();
        if !rows.is_empty() {
            let (coeffs, rhs): (Vec<Vec<S>>, Vec<S>) = rows.into_values().unzip();
            let solution = if nu == 0 {
                if rhs.iter().all(|v| v.is_negligible(1.0)) {
                    Some(Vec::new())
                } else {
                    None
                }
            } else {
                Matrix::from_rows(&coeffs).solve_min_norm(&rhs)
            };
            let beta = solution.ok_or(Error::IdentificationFailure { label })?;
            for (u, mono_u) in unknowns.iter().enumerate() {
                poly.add_term(mono_u.clone(), beta[u].clone());
            }
        }
        poly.prune();
        psi.push(poly);
    }
    Ok(psi)
}
