//! Exact sinusoidal steering of the canonical free nilpotent system.
//!
//! Components are steered one equivalence class per `2π` period. For a
//! class with generator counts `d_c`, every element receives `d_c` basic
//! cosines on each channel except the resonance channel `ρ` (the last
//! channel with `d_ρ > 0`), which gets `d_ρ − 1` basic cosines and one
//! resonance term `a · cos(ω* t − ε π/2)` with `ω*` the sum of the element's
//! basic frequencies and `ε = (|Δ| − 1) mod 2`. Over one period the class
//! components then move by `A a` while every smaller class returns to its
//! initial value. Generator classes use a constant input.
//!
//! Frequencies follow an increasing chain `ω_next = s · Σ_c d_c ℓ_c + 1`
//! (`ℓ_c` the last frequency placed on channel `c`), which realizes the
//! spacing inequalities for two inputs. Each candidate plan is verified by
//! exact trigonometric propagation; on failure the spacing `s` doubles.
//!
//! Basic cosines have unit amplitude unless a unit displacement of the
//! element would need a resonance amplitude above
//! [`SteerConfig::balance_above`]; the basic amplitude `β` of that element is
//! then raised so that basic and resonance amplitudes become comparable.
//! Classes with several elements draw each spacing multiplier from
//! `[s, 2s]` and keep the candidate whose control matrix is best conditioned.

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Error;
use crate::hall::HallBasis;
use crate::law::{ControlLaw, Period, Term};
use crate::linalg::Matrix;
use crate::privcoord::{dilate, pseudo_norm};
use crate::scalar::factorial;
use crate::trig::TrigSeries;

/// Search and verification settings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SteerConfig {
    /// Maximum number of spacing doublings per class.
    pub max_attempts: usize,
    /// Lower bound on `|det A| / Π_k ‖A e_k‖`.
    pub det_threshold: f64,
    /// Relative tolerance of the resonance and non-resonance checks.
    pub check_tol: f64,
    /// Number of random amplitude vectors used by the linearity check.
    pub samples: usize,
    /// Resonance amplitude per unit displacement above which the basic
    /// amplitudes of an element are raised.
    pub balance_above: f64,
    /// Frequency candidates tried per spacing for classes with several elements.
    pub candidates: usize,
    pub seed: u64,
}

impl Default for SteerConfig {
    fn default() -> Self {
        SteerConfig {
            max_attempts: 12,
            det_threshold: 1e-6,
            check_tol: 1e-9,
            samples: 3,
            balance_above: 1e4,
            candidates: 16,
            seed: 0,
        }
    }
}

/// Frequencies and control matrix of one equivalence class.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassPlan {
    pub class_id: usize,
    /// Hall indices of the class, ascending.
    pub elements: Vec<usize>,
    /// Occurrence count of each generator.
    pub delta: Vec<u32>,
    /// 1-based resonance channel.
    pub resonance_channel: usize,
    pub epsilon: u8,
    /// `basic[k][c]`: basic frequencies of element `k` on channel `c`.
    pub basic: Vec<Vec<Vec<u32>>>,
    /// Resonance frequency of each element.
    pub resonance: Vec<u32>,
    /// Amplitude of every basic cosine of each element.
    pub basic_amplitude: Vec<f64>,
    pub spacing: u64,
    /// Control matrix `A` (row = class element, column = amplitude).
    pub a: Vec<Vec<f64>>,
    /// `B = A^{-1}`.
    pub b: Vec<Vec<f64>>,
}

impl ClassPlan {
    pub fn is_generator(&self) -> bool {
        self.delta.iter().sum::<u32>() == 1
    }

    pub fn cardinality(&self) -> usize {
        self.elements.len()
    }

    /// The one-period input for resonance amplitudes `amplitudes`.
    pub fn period<F: Float>(&self, amplitudes: &[F]) -> Period<F> {
        let m = self.delta.len();
        let mut p = Period::zero(m);
        if self.is_generator() {
            let c = self.resonance_channel - 1;
            if amplitudes[0] != F::zero() {
                p.channels[c].push(Term {
                    amplitude: amplitudes[0],
                    frequency: 0,
                    phase: 0,
                });
            }
            return p;
        }
        for (k, per_channel) in self.basic.iter().enumerate() {
            let beta = F::from(self.basic_amplitude[k]).unwrap();
            for (c, freqs) in per_channel.iter().enumerate() {
                for &f in freqs {
                    p.channels[c].push(Term {
                        amplitude: beta,
                        frequency: f,
                        phase: 0,
                    });
                }
            }
            if amplitudes[k] != F::zero() {
                p.channels[self.resonance_channel - 1].push(Term {
                    amplitude: amplitudes[k],
                    frequency: self.resonance[k],
                    phase: self.epsilon,
                });
            }
        }
        p
    }

    /// Resonance amplitudes producing class displacements `target`.
    pub fn amplitudes<F: Float>(&self, target: &[F]) -> Vec<F> {
        self.b
            .iter()
            .map(|row| {
                row.iter()
                    .zip(target)
                    .fold(F::zero(), |acc, (&b, &t)| acc + F::from(b).unwrap() * t)
            })
            .collect()
    }

    /// Whether the two-input spacing inequalities hold for every element
    /// chain (vacuous for generator classes and for `m ≠ 2`).
    pub fn spacing_inequalities_hold(&self) -> bool {
        if self.is_generator() || self.delta.len() != 2 {
            return true;
        }
        let (m1, m2) = (self.delta[0] as u64, self.delta[1] as u64);
        let mut previous_bound: Option<u64> = None;
        for per_channel in &self.basic {
            let c1: Vec<u64> = per_channel[0].iter().map(|&f| f as u64).collect();
            let c2: Vec<u64> = per_channel[1].iter().map(|&f| f as u64).collect();
            let last1 = *c1.last().unwrap_or(&0);
            if let (Some(bound), Some(&first)) = (previous_bound, c1.first()) {
                if first <= bound {
                    return false;
                }
            }
            if c1.windows(2).any(|w| w[1] <= m1 * w[0]) {
                return false;
            }
            if let Some(&first2) = c2.first() {
                if first2 <= m1 * last1 {
                    return false;
                }
            }
            if c2.windows(2).any(|w| w[1] <= m2 * w[0] + m1 * last1) {
                return false;
            }
            previous_bound = Some(m2 * c2.last().copied().unwrap_or(0) + m1 * last1);
        }
        true
    }
}

/// Plans for every class in order.
#[derive(Clone, Debug, Serialize)]
pub struct SteeringPlan {
    pub m: usize,
    pub r: usize,
    #[serde(skip)]
    pub basis: HallBasis,
    pub classes: Vec<ClassPlan>,
}

/// Propagates the canonical dynamics over one period, returning the
/// components `1..=upto` as series in `τ`.
pub fn propagate_series<F: Float>(
    basis: &HallBasis,
    state: &[F],
    period: &Period<F>,
    upto: usize,
) -> Vec<TrigSeries<F>> {
    let inputs: Vec<TrigSeries<F>> = (0..basis.m).map(|c| period.channel_series(c)).collect();
    let mut v: Vec<TrigSeries<F>> = Vec::with_capacity(upto);
    for e in basis.elements.iter().take(upto) {
        let input = &inputs[e.phi - 1];
        let mut rhs = if input.is_zero() {
            TrigSeries::zero()
        } else {
            input.clone()
        };
        if e.length > 1 && !rhs.is_zero() {
            let mut denom = 1.0;
            for (l, &k) in e.alpha.iter().enumerate() {
                for _ in 0..k {
                    rhs = rhs.mul(&v[l]);
                    if rhs.is_zero() {
                        break;
                    }
                }
                denom *= factorial::<f64>(k);
            }
            rhs = rhs.scale(F::from(1.0 / denom).unwrap());
        }
        v.push(TrigSeries::constant(state[e.index - 1]).add(&rhs.integrate()));
    }
    v
}

/// State after one period of the canonical system from `state`.
pub fn propagate<F: Float>(basis: &HallBasis, state: &[F], period: &Period<F>) -> Vec<F> {
    propagate_series(basis, state, period, basis.len())
        .iter()
        .map(TrigSeries::at_period)
        .collect()
}

/// Assigns the frequency chain, drawing each spacing multiplier from
/// `multiplier`; `None` when a frequency would not fit in 32 bits.
fn assign_frequencies(
    delta: &[u32],
    rho: usize,
    cardinality: usize,
    mut multiplier: impl FnMut() -> u64,
) -> Option<(Vec<Vec<Vec<u32>>>, Vec<u32>)> {
    let m = delta.len();
    let mut last = vec![0u64; m];
    let mut basic = Vec::with_capacity(cardinality);
    let mut resonance = Vec::with_capacity(cardinality);
    for _ in 0..cardinality {
        let mut per_channel = vec![Vec::new(); m];
        for c in 0..m {
            let slots = delta[c] as usize - usize::from(c + 1 == rho);
            for _ in 0..slots {
                let bound: u64 = (0..m).map(|q| delta[q] as u64 * last[q]).sum();
                let f = multiplier().checked_mul(bound)?.checked_add(1)?;
                per_channel[c].push(u32::try_from(f).ok()?);
                last[c] = f;
            }
        }
        resonance.push(
            u32::try_from(per_channel.iter().flatten().map(|&f| f as u64).sum::<u64>()).ok()?,
        );
        basic.push(per_channel);
    }
    Some((basic, resonance))
}

/// Net displacement over one period from the origin, components `1..=upto`.
fn displacement(basis: &HallBasis, period: &Period<f64>, upto: usize) -> Vec<f64> {
    let zero = vec![0.0; basis.len()];
    propagate_series(basis, &zero, period, upto)
        .iter()
        .map(TrigSeries::at_period)
        .collect()
}

/// Class components of the displacement at zero resonance amplitude and the
/// columns of `A`.
fn control_columns(basis: &HallBasis, plan: &ClassPlan, upto: usize) -> (Vec<f64>, Matrix<f64>) {
    let n = plan.cardinality();
    let class_rows = |d: &[f64]| -> Vec<f64> { plan.elements.iter().map(|&e| d[e - 1]).collect() };
    let zero_amp = vec![0.0; n];
    let base = class_rows(&displacement(basis, &plan.period(&zero_amp), upto));
    let mut columns = Vec::with_capacity(n);
    for k in 0..n {
        let mut unit = zero_amp.clone();
        unit[k] = 1.0;
        let d = displacement(basis, &plan.period(&unit), upto);
        columns.push(
            class_rows(&d)
                .iter()
                .zip(&base)
                .map(|(a, b)| a - b)
                .collect::<Vec<_>>(),
        );
    }
    (base, Matrix::from_columns(&columns))
}

/// Builds `A` for a candidate frequency plan and checks resonance and
/// non-resonance on random amplitudes. Returns the normalized determinant,
/// or `None` when a check fails.
fn verify_candidate(basis: &HallBasis, plan: &mut ClassPlan, config: &SteerConfig) -> Option<f64> {
    let n = plan.cardinality();
    let first = plan.elements[0];
    let upto = basis.dim_upto(basis.element(first).length);
    let class_rows = |d: &[f64]| -> Vec<f64> { plan.elements.iter().map(|&e| d[e - 1]).collect() };
    plan.basic_amplitude = vec![1.0; n];
    let (base0, unit_a) = control_columns(basis, plan, upto);
    let length = plan.delta.iter().sum::<u32>() as i32;
    let mut rebalanced = false;
    for k in 0..n {
        let norm = (0..n).map(|i| unit_a.get(i, k).powi(2)).sum::<f64>().sqrt();
        let needed = 1.0 / norm;
        if norm > 0.0 && needed > config.balance_above {
            plan.basic_amplitude[k] = needed.powf(1.0 / length as f64);
            rebalanced = true;
        }
    }
    let (base, a) = if rebalanced {
        control_columns(basis, plan, upto)
    } else {
        (base0, unit_a)
    };
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    let tol = config.check_tol * scale;
    if base.iter().any(|v| v.abs() > tol) {
        return None;
    }
    let ndet = normalized_det(&a);
    if ndet < config.det_threshold {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(
        config.seed ^ (plan.class_id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
    );
    for _ in 0..config.samples {
        let amps: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let d = displacement(basis, &plan.period(&amps), upto);
        let predicted = a.mul_vec(&amps);
        let amp_scale = amps
            .iter()
            .chain(&plan.basic_amplitude)
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
            .max(1.0);
        if class_rows(&d)
            .iter()
            .zip(&predicted)
            .any(|(x, y)| (x - y).abs() > tol * amp_scale * amp_scale)
        {
            return None;
        }
        if d[..first - 1]
            .iter()
            .any(|v| v.abs() > config.check_tol * amp_scale * amp_scale)
        {
            return None;
        }
    }
    // B = C (R A C)^{-1} R with column scaling C and row scaling R.
    let col: Vec<f64> = (0..n)
        .map(|k| (0..n).map(|i| a.get(i, k).powi(2)).sum::<f64>().sqrt())
        .collect();
    let scaled: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|k| a.get(i, k) / col[k]).collect())
        .collect();
    let row: Vec<f64> = scaled
        .iter()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let equilibrated = Matrix::from_rows(
        &scaled
            .iter()
            .zip(&row)
            .map(|(r, &rn)| r.iter().map(|v| v / rn).collect())
            .collect::<Vec<_>>(),
    );
    let inv = equilibrated.inverse()?;
    plan.a = (0..n).map(|i| a.row(i)).collect();
    plan.b = (0..n)
        .map(|k| (0..n).map(|i| inv.get(k, i) / (col[k] * row[i])).collect())
        .collect();
    Some(ndet)
}

/// `|det A|` divided by the product of the column norms, in `[0, 1]`.
/// Invariant under rescaling of the columns.
pub fn normalized_det(a: &Matrix<f64>) -> f64 {
    let norms: f64 = (0..a.cols())
        .map(|k| {
            (0..a.rows())
                .map(|i| a.get(i, k).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .product();
    if norms == 0.0 {
        0.0
    } else {
        a.det().abs() / norms
    }
}

/// Plans frequencies and the control matrix of class `class_id` (position in `basis.classes`).
pub fn plan_frequencies(
    basis: &HallBasis,
    class_id: usize,
    config: &SteerConfig,
) -> Result<ClassPlan, Error> {
    let elements = basis.class(class_id).to_vec();
    let delta: Vec<u32> = basis
        .element(elements[0])
        .delta
        .iter()
        .map(|&d| d as u32)
        .collect();
    let rho = delta
        .iter()
        .rposition(|&d| d > 0)
        .map(|c| c + 1)
        .unwrap_or(1);
    let length: u32 = delta.iter().sum();
    let mut plan = ClassPlan {
        class_id,
        elements: elements.clone(),
        delta: delta.clone(),
        resonance_channel: rho,
        epsilon: ((length + 1) % 2) as u8,
        basic: Vec::new(),
        resonance: Vec::new(),
        basic_amplitude: vec![1.0],
        spacing: 0,
        a: Vec::new(),
        b: Vec::new(),
    };
    if length == 1 {
        plan.basic = vec![vec![Vec::new(); delta.len()]];
        plan.resonance = vec![0];
        plan.epsilon = 0;
        plan.a = vec![vec![std::f64::consts::TAU]];
        plan.b = vec![vec![1.0 / std::f64::consts::TAU]];
        return Ok(plan);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(
        config.seed ^ (class_id as u64).wrapping_mul(0xD1B5_4A32_D192_ED03),
    );
    let tries = if elements.len() == 1 {
        1
    } else {
        config.candidates.max(1)
    };
    let mut s = 1u64;
    for _ in 0..config.max_attempts {
        let mut best: Option<(f64, ClassPlan)> = None;
        for t in 0..tries {
            let assigned = if t == 0 {
                assign_frequencies(&delta, rho, elements.len(), || s)
            } else {
                assign_frequencies(&delta, rho, elements.len(), || rng.gen_range(s..=2 * s))
            };
            let Some((basic, resonance)) = assigned else {
                continue;
            };
            let mut candidate = plan.clone();
            candidate.basic = basic;
            candidate.resonance = resonance;
            candidate.spacing = s;
            if let Some(ndet) = verify_candidate(basis, &mut candidate, config) {
                if best.as_ref().map_or(true, |(b, _)| ndet > *b) {
                    best = Some((ndet, candidate));
                }
            }
        }
        if let Some((_, chosen)) = best {
            return Ok(chosen);
        }
        s *= 2;
    }
    Err(Error::SearchBudgetExhausted {
        class_id,
        attempts: config.max_attempts,
    })
}

/// Plans every class of the basis.
pub fn plan_all(basis: &HallBasis, config: &SteerConfig) -> Result<SteeringPlan, Error> {
    let classes = (0..basis.classes.len())
        .map(|id| plan_frequencies(basis, id, config))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SteeringPlan {
        m: basis.m,
        r: basis.r,
        basis: basis.clone(),
        classes,
    })
}

/// Control matrix `A` of a planned class.
pub fn control_matrix(plan: &ClassPlan) -> Matrix<f64> {
    Matrix::from_rows(&plan.a)
}

/// One-period input moving the class components by `delta` (all smaller
/// classes must start at 0 for the displacement to be exact).
pub fn steer_class<F: Float>(plan: &ClassPlan, delta: &[F]) -> Period<F> {
    plan.period(&plan.amplitudes(delta))
}

/// Steers the canonical system from `x` to the origin, one period per class.
pub fn exact_steer<F: Float>(x: &[F], plan: &SteeringPlan) -> ControlLaw<F> {
    let weights = &plan.basis.free_weights;
    let lambda = pseudo_norm(x, weights);
    if lambda == F::zero() {
        return ControlLaw::empty(plan.m);
    }
    let mut state = dilate(x, F::one() / lambda, weights);
    let mut periods = Vec::with_capacity(plan.classes.len());
    for class in &plan.classes {
        let target: Vec<F> = class.elements.iter().map(|&e| -state[e - 1]).collect();
        let period = steer_class(class, &target);
        state = propagate(&plan.basis, &state, &period);
        for &e in &class.elements {
            state[e - 1] = F::zero();
        }
        periods.push(period);
    }
    ControlLaw {
        m: plan.m,
        periods,
        scale: lambda,
        time_scale: F::one(),
        smoothing: 0,
    }
}

/// Concatenates laws; `k ≥ 1` reparameterizes every period so the input
/// and its first `2k − 1` derivatives vanish at period boundaries.
pub fn smooth_concatenate<F: Float>(laws: &[ControlLaw<F>], k: u32) -> ControlLaw<F> {
    let m = laws.first().map(|l| l.m).unwrap_or(0);
    let joined = laws.iter().fold(ControlLaw::empty(m), |acc, l| acc.then(l));
    joined.with_smoothing(k)
}
