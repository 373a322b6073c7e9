//! Trigonometric polynomials with polynomial-in-time coefficients,
//! `Σ c · t^p · cos(ω t)` and `Σ c · t^p · sin(ω t)` with integer `ω ≥ 0`.
//!
//! Products and integrals from 0 stay in the class, so the canonical system
//! driven by sinusoids with integer frequencies can be propagated exactly.

use std::collections::BTreeMap;

use num_traits::Float;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Wave {
    Cos,
    Sin,
}

/// Key of one term: time power, frequency and wave.
pub type TermKey = (u32, u64, Wave);

#[derive(Clone, Debug, PartialEq)]
pub struct TrigSeries<F> {
    terms: BTreeMap<TermKey, F>,
}

impl<F: Float> Default for TrigSeries<F> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<F: Float> TrigSeries<F> {
    pub fn zero() -> Self {
        TrigSeries {
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(c: F) -> Self {
        let mut s = Self::zero();
        s.add_term((0, 0, Wave::Cos), c);
        s
    }

    /// `c · cos(ω t − phase · π/2)`.
    pub fn sinusoid(c: F, freq: u64, phase: u8) -> Self {
        let mut s = Self::zero();
        match phase % 4 {
            0 => s.add_term((0, freq, Wave::Cos), c),
            1 => s.add_term((0, freq, Wave::Sin), c),
            2 => s.add_term((0, freq, Wave::Cos), -c),
            _ => s.add_term((0, freq, Wave::Sin), -c),
        }
        s
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&TermKey, &F)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, key: TermKey, c: F) {
        if c == F::zero() || (key.2 == Wave::Sin && key.1 == 0) {
            return;
        }
        let entry = self.terms.entry(key).or_insert_with(F::zero);
        *entry = *entry + c;
        if *entry == F::zero() {
            self.terms.remove(&key);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&k, &c) in &other.terms {
            out.add_term(k, c);
        }
        out
    }

    pub fn scale(&self, k: F) -> Self {
        let mut out = Self::zero();
        for (&key, &c) in &self.terms {
            out.add_term(key, c * k);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let half = F::from(0.5).unwrap();
        let mut out = Self::zero();
        for (&(p1, w1, k1), &c1) in &self.terms {
            for (&(p2, w2, k2), &c2) in &other.terms {
                let p = p1 + p2;
                let c = c1 * c2 * half;
                let (sum, diff, diff_sign) = (
                    w1 + w2,
                    w1.abs_diff(w2),
                    if w1 >= w2 { F::one() } else { -F::one() },
                );
                match (k1, k2) {
                    (Wave::Cos, Wave::Cos) => {
                        out.add_term((p, diff, Wave::Cos), c);
                        out.add_term((p, sum, Wave::Cos), c);
                    }
                    (Wave::Sin, Wave::Sin) => {
                        out.add_term((p, diff, Wave::Cos), c);
                        out.add_term((p, sum, Wave::Cos), -c);
                    }
                    // sin a cos b = ½[sin(a+b) + sin(a−b)]
                    (Wave::Sin, Wave::Cos) => {
                        out.add_term((p, sum, Wave::Sin), c);
                        out.add_term((p, diff, Wave::Sin), c * diff_sign);
                    }
                    (Wave::Cos, Wave::Sin) => {
                        out.add_term((p, sum, Wave::Sin), c);
                        out.add_term((p, diff, Wave::Sin), -c * diff_sign);
                    }
                }
            }
        }
        out
    }

    /// `∫_0^t` of the series.
    pub fn integrate(&self) -> Self {
        let mut out = Self::zero();
        for (&(p, w, k), &c) in &self.terms {
            integrate_term(p, w, k, c, &mut out);
        }
        out
    }

    pub fn eval(&self, t: F) -> F {
        self.terms.iter().fold(F::zero(), |acc, (&(p, w, k), &c)| {
            let arg = F::from(w).unwrap() * t;
            let wave = match k {
                Wave::Cos => arg.cos(),
                Wave::Sin => arg.sin(),
            };
            acc + c * t.powi(p as i32) * wave
        })
    }

    /// Value at `t = 2π`, using `cos(2πω) = 1` and `sin(2πω) = 0` exactly.
    pub fn at_period(&self) -> F {
        let two_pi = F::from(std::f64::consts::TAU).unwrap();
        self.terms
            .iter()
            .filter(|(key, _)| key.2 == Wave::Cos)
            .fold(F::zero(), |acc, (&(p, _, _), &c)| {
                acc + c * two_pi.powi(p as i32)
            })
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> F {
        self.terms
            .values()
            .fold(F::zero(), |acc, c| acc.max(c.abs()))
    }
}

/// Adds `∫_0^t c s^p wave(ω s) ds` to `out`.
fn integrate_term<F: Float>(p: u32, w: u64, k: Wave, c: F, out: &mut TrigSeries<F>) {
    if w == 0 {
        // Only cosines survive at zero frequency.
        out.add_term((p + 1, 0, Wave::Cos), c / F::from(p + 1).unwrap());
        return;
    }
    let wf = F::from(w).unwrap();
    match k {
        // ∫ s^p cos = t^p sin/ω − (p/ω) ∫ s^{p−1} sin
        Wave::Cos => {
            out.add_term((p, w, Wave::Sin), c / wf);
            if p > 0 {
                integrate_term(p - 1, w, Wave::Sin, -c * F::from(p).unwrap() / wf, out);
            }
        }
        // ∫ s^p sin = −t^p cos/ω + (p/ω) ∫ s^{p−1} cos, plus 1/ω when p = 0
        Wave::Sin => {
            out.add_term((p, w, Wave::Cos), -c / wf);
            if p > 0 {
                integrate_term(p - 1, w, Wave::Cos, c * F::from(p).unwrap() / wf, out);
            } else {
                out.add_term((0, 0, Wave::Cos), c / wf);
            }
        }
    }
}
