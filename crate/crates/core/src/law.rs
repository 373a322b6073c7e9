//! Piecewise trigonometric open-loop inputs.
//!
//! A law is a sequence of periods of nominal length `2π`. Each period lists,
//! per input channel, terms `A · cos(ω τ − phase · π/2)` with integer `ω`.
//! The physical input at time `t` is
//! `u(t) = (scale / time_scale) · σ'(τ) · Σ terms(σ(τ))`, `τ = t / time_scale`
//! measured inside the current period, where `σ` is the identity for an
//! unsmoothed law and a monotone reparameterization of `[0, 2π]` with
//! `σ'(0) = σ'(2π) = 0` when smoothing is enabled.

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::trig::TrigSeries;

/// One sinusoid `amplitude · cos(frequency · τ − phase · π/2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term<F> {
    pub amplitude: F,
    pub frequency: u32,
    /// Quarter-turn phase offset in `0..4`.
    pub phase: u8,
}

impl<F: Float> Term<F> {
    pub fn eval(&self, tau: F) -> F {
        let arg = F::from(self.frequency).unwrap() * tau;
        let v = match self.phase % 4 {
            0 => arg.cos(),
            1 => arg.sin(),
            2 => -arg.cos(),
            _ => -arg.sin(),
        };
        self.amplitude * v
    }
}

/// Per-channel terms of one `2π` period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Period<F> {
    pub channels: Vec<Vec<Term<F>>>,
}

impl<F: Float> Period<F> {
    pub fn zero(m: usize) -> Self {
        Period {
            channels: vec![Vec::new(); m],
        }
    }

    /// Unscaled, unwarped value of channel `c` at local time `tau`.
    pub fn eval_channel(&self, c: usize, tau: F) -> F {
        self.channels[c]
            .iter()
            .fold(F::zero(), |acc, term| acc + term.eval(tau))
    }

    /// Channel `c` as a trigonometric series in `τ`.
    pub fn channel_series(&self, c: usize) -> TrigSeries<F> {
        self.channels[c].iter().fold(TrigSeries::zero(), |acc, t| {
            acc.add(&TrigSeries::sinusoid(
                t.amplitude,
                t.frequency as u64,
                t.phase,
            ))
        })
    }

    pub fn scaled(&self, k: F) -> Self {
        Period {
            channels: self
                .channels
                .iter()
                .map(|ch| {
                    ch.iter()
                        .map(|t| Term {
                            amplitude: t.amplitude * k,
                            ..t.clone()
                        })
                        .collect()
                })
                .collect(),
        }
    }
}

/// Sequence of periods with global amplitude and time scaling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlLaw<F> {
    pub m: usize,
    pub periods: Vec<Period<F>>,
    /// Amplitude factor `λ`.
    pub scale: F,
    /// Each period lasts `2π · time_scale`.
    pub time_scale: F,
    /// Order of the boundary reparameterization; 0 leaves periods unwarped.
    pub smoothing: u32,
}

impl<F: Float> ControlLaw<F> {
    pub fn empty(m: usize) -> Self {
        ControlLaw {
            m,
            periods: Vec::new(),
            scale: F::one(),
            time_scale: F::one(),
            smoothing: 0,
        }
    }

    pub fn period_duration(&self) -> F {
        F::from(std::f64::consts::TAU).unwrap() * self.time_scale
    }

    pub fn duration(&self) -> F {
        self.period_duration() * F::from(self.periods.len()).unwrap()
    }

    /// Start times of the periods followed by the end time.
    pub fn boundaries(&self) -> Vec<F> {
        (0..=self.periods.len())
            .map(|k| self.period_duration() * F::from(k).unwrap())
            .collect()
    }

    /// Input value inside period `k` at local (unscaled) time `tau ∈ [0, 2π]`.
    pub fn eval_in_period(&self, k: usize, tau: F) -> Vec<F> {
        let (s, ds) = warp(self.smoothing, tau);
        let factor = self.scale / self.time_scale * ds;
        (0..self.m)
            .map(|c| factor * self.periods[k].eval_channel(c, s))
            .collect()
    }

    /// Input at absolute time `t`; zero outside `[0, duration]`.
    pub fn eval(&self, t: F) -> Vec<F> {
        if self.periods.is_empty() || t < F::zero() || t > self.duration() {
            return vec![F::zero(); self.m];
        }
        let pd = self.period_duration();
        let k = ((t / pd).floor().to_usize().unwrap_or(0)).min(self.periods.len() - 1);
        let tau = (t - pd * F::from(k).unwrap()) / self.time_scale;
        self.eval_in_period(k, tau)
    }

    /// Concatenation, keeping this law's scalings and smoothing.
    pub fn then(&self, other: &ControlLaw<F>) -> ControlLaw<F> {
        assert_eq!(
            self.m, other.m,
            "concatenating laws with different input counts"
        );
        let factor = other.scale / self.scale;
        let mut periods = self.periods.clone();
        if self.periods.is_empty() {
            return other.clone();
        }
        assert!(
            other.time_scale == self.time_scale || other.periods.is_empty(),
            "concatenating laws with different time scales"
        );
        periods.extend(other.periods.iter().map(|p| p.scaled(factor)));
        ControlLaw {
            periods,
            ..self.clone()
        }
    }

    /// Periods with the amplitude scale folded in.
    pub fn normalized_periods(&self) -> Vec<Period<F>> {
        self.periods.iter().map(|p| p.scaled(self.scale)).collect()
    }

    pub fn with_smoothing(&self, k: u32) -> ControlLaw<F> {
        ControlLaw {
            smoothing: k,
            ..self.clone()
        }
    }
}

/// Monotone reparameterization of `[0, 2π]` of order `k`:
/// `σ'(τ) = c_k (1 − cos τ)^k` normalized so that `σ(2π) = 2π`.
/// Returns `(σ(τ), σ'(τ))`; the identity for `k = 0`.
pub fn warp<F: Float>(k: u32, tau: F) -> (F, F) {
    if k == 0 {
        return (tau, F::one());
    }
    let coeffs = warp_cosine_coefficients(k);
    // (1 − cos τ)^k = Σ_j b_j cos(jτ); normalization makes b_0 · c_k = 1.
    let c = 1.0 / coeffs[0];
    let mut s = F::from(c * coeffs[0]).unwrap() * tau;
    for (j, &b) in coeffs.iter().enumerate().skip(1) {
        s = s + F::from(c * b / j as f64).unwrap() * (F::from(j).unwrap() * tau).sin();
    }
    let ds = F::from(c).unwrap() * (F::one() - tau.cos()).powi(k as i32);
    (s, ds)
}

/// Cosine coefficients of `(1 − cos τ)^k`.
pub fn warp_cosine_coefficients(k: u32) -> Vec<f64> {
    let mut poly = TrigSeries::<f64>::constant(1.0);
    let factor = TrigSeries::constant(1.0).add(&TrigSeries::sinusoid(-1.0, 1, 0));
    for _ in 0..k {
        poly = poly.mul(&factor);
    }
    let mut out = vec![0.0; k as usize + 1];
    for (&(_, w, _), &c) in poly.terms() {
        out[w as usize] += c;
    }
    out
}
