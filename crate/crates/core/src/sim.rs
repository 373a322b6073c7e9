//! Numerical integration of driftless systems under piecewise-trigonometric
//! inputs, input length and time reparameterization.
//!
//! Integration proceeds period by period, so every period boundary is a
//! step endpoint and the inputs are smooth inside each integration span.

use num_traits::Float;
use serde::Serialize;

use crate::error::Error;
use crate::law::ControlLaw;
use crate::system::DriftlessSystem;

/// Axis-aligned box the trajectory must stay in.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Domain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Domain {
    pub fn contains<F: Float>(&self, x: &[F]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (&lo, &hi))| {
                let v = v.to_f64().unwrap_or(f64::NAN);
                v >= lo && v <= hi
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Adaptive Dormand–Prince 5(4).
    Dopri5,
    /// Classical Runge–Kutta with a fixed number of steps per period.
    Rk4 { steps_per_period: usize },
}

/// Integrator settings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimConfig {
    pub method: Method,
    /// Local relative and absolute error tolerance of the adaptive scheme.
    pub tol: f64,
    /// Step size below which the adaptive scheme gives up.
    pub min_step: f64,
    pub max_steps: usize,
    /// Whether every accepted step is stored, or only period boundaries.
    pub record_steps: bool,
    pub domain: Option<Domain>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            method: Method::Dopri5,
            tol: 1e-10,
            min_step: 1e-14,
            max_steps: 20_000_000,
            record_steps: true,
            domain: None,
        }
    }
}

impl SimConfig {
    pub fn with_tol(tol: f64) -> Self {
        SimConfig {
            tol,
            ..Self::default()
        }
    }
}

/// Integrator bookkeeping attached to a trajectory.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TrajectoryMeta {
    pub system: String,
    pub input: String,
    pub method: String,
    pub tol: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory<F> {
    pub times: Vec<F>,
    pub states: Vec<Vec<F>>,
    pub meta: TrajectoryMeta,
}

impl<F: Float> Trajectory<F> {
    pub fn endpoint(&self) -> &[F] {
        self.states
            .last()
            .expect("a trajectory holds at least its initial state")
    }

    /// States at the given step endpoints.
    pub fn at_times(&self, times: &[F]) -> Vec<Vec<F>> {
        times
            .iter()
            .map(|&t| {
                let i = self.times.iter().position(|&s| {
                    (s - t).abs() <= F::epsilon() * (F::one() + t.abs()) * F::from(16).unwrap()
                });
                self.states[i.expect("requested time is not a step endpoint")].clone()
            })
            .collect()
    }
}

/// Integration failure together with the trajectory computed so far.
#[derive(Clone, Debug)]
pub struct IntegrationFailure<F> {
    pub error: Error,
    pub partial: Trajectory<F>,
}

impl<F> From<IntegrationFailure<F>> for Error {
    fn from(f: IntegrationFailure<F>) -> Error {
        f.error
    }
}

impl<F> From<Box<IntegrationFailure<F>>> for Error {
    fn from(f: Box<IntegrationFailure<F>>) -> Error {
        f.error
    }
}

/// Solves `ẋ = Σ u_i(t) X_i(x)` over the whole law.
pub fn integrate<F: Float, S: DriftlessSystem>(
    system: &S,
    x0: &[F],
    law: &ControlLaw<F>,
    config: &SimConfig,
) -> Result<Trajectory<F>, Box<IntegrationFailure<F>>> {
    let method = match config.method {
        Method::Dopri5 => "dopri5".to_string(),
        Method::Rk4 { steps_per_period } => format!("rk4/{steps_per_period}"),
    };
    let mut traj = Trajectory {
        times: vec![F::zero()],
        states: vec![x0.to_vec()],
        meta: TrajectoryMeta {
            method,
            tol: config.tol,
            ..TrajectoryMeta::default()
        },
    };
    if x0.len() != system.state_dim() {
        let error = Error::DimensionMismatch(format!(
            "initial state of dimension {} for a system of dimension {}",
            x0.len(),
            system.state_dim()
        ));
        return Err(Box::new(IntegrationFailure {
            error,
            partial: traj,
        }));
    }
    if let Some(domain) = &config.domain {
        if !domain.contains(x0) {
            return Err(Box::new(IntegrationFailure {
                error: Error::DomainExit { t: 0.0 },
                partial: traj,
            }));
        }
    }
    let pd = law.period_duration();
    let mut x = x0.to_vec();
    for k in 0..law.periods.len() {
        let t0 = pd * F::from(k).unwrap();
        let rhs = |t: F, y: &[F]| -> Vec<F> {
            system.velocity(y, &law.eval_in_period(k, (t - t0) / law.time_scale))
        };
        let result = match config.method {
            Method::Dopri5 => dopri5(&rhs, t0, t0 + pd, &x, config, &mut traj),
            Method::Rk4 { steps_per_period } => rk4(
                &rhs,
                t0,
                t0 + pd,
                &x,
                steps_per_period.max(1),
                config,
                &mut traj,
            ),
        };
        match result {
            Ok(y) => x = y,
            Err(error) => {
                return Err(Box::new(IntegrationFailure {
                    error,
                    partial: traj,
                }))
            }
        }
    }
    Ok(traj)
}

/// Endpoint of [`integrate`] without storing intermediate steps.
pub fn endpoint<F: Float, S: DriftlessSystem>(
    system: &S,
    x0: &[F],
    law: &ControlLaw<F>,
    config: &SimConfig,
) -> Result<Vec<F>, Error> {
    let cfg = SimConfig {
        record_steps: false,
        ..config.clone()
    };
    Ok(integrate(system, x0, law, &cfg)?.endpoint().to_vec())
}

fn c<F: Float>(v: f64) -> F {
    F::from(v).unwrap()
}

fn axpy<F: Float>(y: &[F], h: F, terms: &[(f64, &Vec<F>)]) -> Vec<F> {
    let mut out = y.to_vec();
    for &(coef, k) in terms {
        if coef == 0.0 {
            continue;
        }
        let f = h * c::<F>(coef);
        for (o, &v) in out.iter_mut().zip(k.iter()) {
            *o = *o + f * v;
        }
    }
    out
}

fn check_state<F: Float>(t: F, y: &[F], config: &SimConfig) -> Result<(), Error> {
    let tf = t.to_f64().unwrap_or(f64::NAN);
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::StepFailure { t: tf });
    }
    if let Some(domain) = &config.domain {
        if !domain.contains(y) {
            return Err(Error::DomainExit { t: tf });
        }
    }
    Ok(())
}

fn record<F: Float>(traj: &mut Trajectory<F>, t: F, y: &[F], boundary: bool, config: &SimConfig) {
    if config.record_steps || boundary {
        traj.times.push(t);
        traj.states.push(y.to_vec());
    }
}

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const NODES: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
/// Difference between the fifth- and fourth-order weights.
const ERR: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn dopri5<F: Float>(
    rhs: &impl Fn(F, &[F]) -> Vec<F>,
    t0: F,
    t1: F,
    y0: &[F],
    config: &SimConfig,
    traj: &mut Trajectory<F>,
) -> Result<Vec<F>, Error> {
    let tol: F = c(config.tol);
    let min_step: F = c(config.min_step);
    let span = t1 - t0;
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = rhs(t, &y);
    let mut h = initial_step(rhs, t, &y, &k1, tol, span);
    while t < t1 {
        if traj.meta.accepted_steps + traj.meta.rejected_steps >= config.max_steps {
            return Err(Error::StepFailure {
                t: t.to_f64().unwrap_or(f64::NAN),
            });
        }
        let last = t + h >= t1 || (t1 - (t + h)) < min_step;
        if last {
            h = t1 - t;
        }
        let mut ks: Vec<Vec<F>> = vec![k1.clone()];
        for s in 0..6 {
            let terms: Vec<(f64, &Vec<F>)> = (0..=s).map(|j| (A[s][j], &ks[j])).collect();
            let ys = axpy(&y, h, &terms);
            let ts = if s >= 4 {
                t + h
            } else {
                t + h * c::<F>(NODES[s])
            };
            let k = rhs(ts, &ys);
            ks.push(k);
        }
        let y_new = axpy(
            &y,
            h,
            &(0..6).map(|j| (A[5][j], &ks[j])).collect::<Vec<_>>(),
        );
        let err_terms: Vec<(f64, &Vec<F>)> = (0..7).map(|j| (ERR[j], &ks[j])).collect();
        let err_vec = axpy(&vec![F::zero(); y.len()], h, &err_terms);
        let n = F::from(y.len().max(1)).unwrap();
        let err = (err_vec
            .iter()
            .zip(y.iter().zip(&y_new))
            .map(|(&e, (&a, &b))| {
                let sc = tol + tol * a.abs().max(b.abs());
                (e / sc) * (e / sc)
            })
            .fold(F::zero(), |acc, v| acc + v)
            / n)
            .sqrt();
        if !err.is_finite() {
            traj.meta.rejected_steps += 1;
            h = h * c(0.2);
            if h < min_step {
                return Err(Error::StepFailure {
                    t: t.to_f64().unwrap_or(f64::NAN),
                });
            }
            continue;
        }
        if err <= F::one() {
            t = if last { t1 } else { t + h };
            y = y_new;
            k1 = ks.swap_remove(6);
            traj.meta.accepted_steps += 1;
            check_state(t, &y, config)?;
            record(traj, t, &y, last, config);
            if last {
                break;
            }
            let fac = if err == F::zero() {
                c(5.0)
            } else {
                (c::<F>(0.9) * err.powf(c(-0.2))).min(c(5.0)).max(c(0.2))
            };
            h = h * fac;
        } else {
            traj.meta.rejected_steps += 1;
            h = h * (c::<F>(0.9) * err.powf(c(-0.2))).max(c(0.1));
            if h < min_step {
                return Err(Error::StepFailure {
                    t: t.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
    }
    Ok(y)
}

/// Starting step from the local scale of the solution and its derivative.
fn initial_step<F: Float>(
    rhs: &impl Fn(F, &[F]) -> Vec<F>,
    t: F,
    y: &[F],
    f0: &[F],
    tol: F,
    span: F,
) -> F {
    let norm = |v: &[F], w: &[F]| -> F {
        let n = F::from(v.len().max(1)).unwrap();
        (v.iter()
            .zip(w)
            .map(|(&a, &b)| (a / (tol + tol * b.abs())).powi(2))
            .fold(F::zero(), |s, x| s + x)
            / n)
            .sqrt()
    };
    let d0 = norm(y, y);
    let d1 = norm(f0, y);
    let h0 = if d0 < c(1e-5) || d1 < c(1e-5) {
        c(1e-6)
    } else {
        c::<F>(0.01) * d0 / d1
    };
    let h0 = h0.min(span);
    let y1: Vec<F> = y.iter().zip(f0).map(|(&a, &b)| a + h0 * b).collect();
    let f1 = rhs(t + h0, &y1);
    let diff: Vec<F> = f1.iter().zip(f0).map(|(&a, &b)| a - b).collect();
    let d2 = norm(&diff, y) / h0;
    let h1 = if d1.max(d2) <= c(1e-15) {
        (h0 * c(1e-3)).max(c(1e-6))
    } else {
        (c::<F>(0.01) / d1.max(d2)).powf(c(0.2))
    };
    (h0 * c(100.0)).min(h1).min(span)
}

fn rk4<F: Float>(
    rhs: &impl Fn(F, &[F]) -> Vec<F>,
    t0: F,
    t1: F,
    y0: &[F],
    steps: usize,
    config: &SimConfig,
    traj: &mut Trajectory<F>,
) -> Result<Vec<F>, Error> {
    let h = (t1 - t0) / F::from(steps).unwrap();
    let half: F = c(0.5);
    let mut y = y0.to_vec();
    for i in 0..steps {
        let t = t0 + h * F::from(i).unwrap();
        let k1 = rhs(t, &y);
        let k2 = rhs(t + half * h, &axpy(&y, half * h, &[(1.0, &k1)]));
        let k3 = rhs(t + half * h, &axpy(&y, half * h, &[(1.0, &k2)]));
        let k4 = rhs(t + h, &axpy(&y, h, &[(1.0, &k3)]));
        y = axpy(
            &y,
            h,
            &[
                (1.0 / 6.0, &k1),
                (1.0 / 3.0, &k2),
                (1.0 / 3.0, &k3),
                (1.0 / 6.0, &k4),
            ],
        );
        let last = i + 1 == steps;
        let t_next = if last { t1 } else { t + h };
        traj.meta.accepted_steps += 1;
        check_state(t_next, &y, config)?;
        record(traj, t_next, &y, last, config);
    }
    Ok(y)
}

/// `∫ ‖u(t)‖ dt` by adaptive Gauss–Kronrod quadrature (relative tolerance
/// `1e-10`).
///
/// Length is invariant under reparameterization, so each period is
/// integrated in its unwarped local time and multiplied by `|scale|`.
pub fn input_length<F: Float>(law: &ControlLaw<F>) -> F {
    let mut total = F::zero();
    for p in &law.periods {
        let norm = |s: F| -> F {
            (0..law.m)
                .map(|c| p.eval_channel(c, s).powi(2))
                .fold(F::zero(), |a, v| a + v)
                .sqrt()
        };
        let max_freq = p
            .channels
            .iter()
            .flatten()
            .map(|t| t.frequency)
            .max()
            .unwrap_or(0);
        total = total
            + integrate_adaptive(
                &norm,
                F::zero(),
                c(std::f64::consts::TAU),
                4 * (max_freq as usize + 1),
                c(1e-10),
            );
    }
    total * law.scale.abs()
}

const GK_NODES: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const G_WEIGHTS: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// 15-point Kronrod estimate and its difference from the embedded 7-point
/// Gauss rule.
fn gk15<F: Float>(f: &impl Fn(F) -> F, a: F, b: F) -> (F, F) {
    let half = (b - a) * c(0.5);
    let mid = (a + b) * c(0.5);
    let fc = f(mid);
    let mut kronrod = fc * c(GK_WEIGHTS[7]);
    let mut gauss = fc * c(G_WEIGHTS[3]);
    for i in 0..7 {
        let dx = half * c(GK_NODES[i]);
        let s = f(mid - dx) + f(mid + dx);
        kronrod = kronrod + s * c(GK_WEIGHTS[i]);
        if i % 2 == 1 {
            gauss = gauss + s * c(G_WEIGHTS[i / 2]);
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive quadrature over `[a, b]` starting from `pieces` equal panels.
pub fn integrate_adaptive<F: Float>(
    f: &impl Fn(F) -> F,
    a: F,
    b: F,
    pieces: usize,
    rel_tol: F,
) -> F {
    let pieces = pieces.max(1);
    let width = (b - a) / F::from(pieces).unwrap();
    let mut panels: Vec<(F, F, F, F)> = (0..pieces)
        .map(|i| {
            let lo = a + width * F::from(i).unwrap();
            let hi = if i + 1 == pieces { b } else { lo + width };
            let (v, e) = gk15(f, lo, hi);
            (lo, hi, v, e)
        })
        .collect();
    for _ in 0..200_000 {
        let total = panels.iter().fold(F::zero(), |s, p| s + p.2);
        let err = panels.iter().fold(F::zero(), |s, p| s + p.3);
        if err <= rel_tol * total.abs() || err <= F::min_positive_value() {
            return total;
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .fold(
                (0, F::zero()),
                |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best },
            );
        let (lo, hi, _, _) = panels.swap_remove(idx);
        let mid = (lo + hi) * c(0.5);
        let (v1, e1) = gk15(f, lo, mid);
        let (v2, e2) = gk15(f, mid, hi);
        panels.push((lo, mid, v1, e1));
        panels.push((mid, hi, v2, e2));
    }
    panels.iter().fold(F::zero(), |s, p| s + p.2)
}

/// Largest Euclidean input norm over the law, from dense sampling refined
/// by golden-section search around the best sample of each period.
pub fn sup_norm<F: Float>(law: &ControlLaw<F>) -> F {
    let mut best = F::zero();
    for k in 0..law.periods.len() {
        let norm = |tau: F| -> F {
            law.eval_in_period(k, tau)
                .iter()
                .fold(F::zero(), |a, &v| a + v * v)
                .sqrt()
        };
        let max_freq = law.periods[k]
            .channels
            .iter()
            .flatten()
            .map(|t| t.frequency)
            .max()
            .unwrap_or(0) as usize;
        let samples = 64 * (max_freq + 1) * (law.smoothing as usize + 1);
        let step = c::<F>(std::f64::consts::TAU) / F::from(samples).unwrap();
        let (mut arg, mut val) = (0, F::zero());
        for i in 0..=samples {
            let v = norm(step * F::from(i).unwrap());
            if v > val {
                arg = i;
                val = v;
            }
        }
        let lo = (step * F::from(arg).unwrap() - step).max(F::zero());
        let hi = (step * F::from(arg).unwrap() + step).min(c(std::f64::consts::TAU));
        best = best.max(val).max(golden_max(&norm, lo, hi));
    }
    best
}

fn golden_max<F: Float>(f: &impl Fn(F) -> F, mut a: F, mut b: F) -> F {
    let g: F = c(0.618_033_988_749_894_8);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        }
    }
    f1.max(f2)
}

/// Uniformly slows the law down so that `sup_t ‖u(t)‖ ≤ bound`; laws that
/// already satisfy the bound are returned unchanged.
pub fn reparameterize<F: Float>(law: &ControlLaw<F>, bound: F) -> ControlLaw<F> {
    assert!(bound > F::zero(), "input bound must be positive");
    let sup = sup_norm(law);
    if sup <= bound {
        return law.clone();
    }
    ControlLaw {
        time_scale: law.time_scale * sup / bound,
        ..law.clone()
    }
}
