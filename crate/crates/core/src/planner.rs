//! Iterative global steering.
//!
//! [`app_steer`] steers the canonical approximation at a goal exactly and
//! applies the resulting input to the true system. [`global_free`] chases
//! subgoals along the dilation path towards the target with an adaptive
//! step size, optionally with the bounded-iterate variant. [`global_plan`]
//! covers a box with cells on which one bracket frame stays independent,
//! lifts the system on each cell of a path between the endpoints and runs
//! [`global_free`] on the lifted system.

use std::collections::VecDeque;

use serde::Serialize;

use crate::desing::{bracket_values, desingularize, FrameSelection, LiftedSystem};
use crate::error::Error;
use crate::hall::{build_hall_basis, HallBasis};
use crate::law::ControlLaw;
use crate::linalg::Matrix;
use crate::privcoord::{dilate, first_order_approx, pseudo_norm, ApproxSystem, PrivilegedChart};
use crate::sim::{input_length, integrate, Domain, SimConfig};
use crate::steer::{exact_steer, plan_all, SteerConfig, SteeringPlan};
use crate::system::{DriftlessSystem, ExprSystem, JetSystem};

/// Planner settings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlannerConfig {
    /// Termination tolerance `e` on the pseudo-norm to the target.
    pub tol: f64,
    pub sim: SimConfig,
    pub steer: SteerConfig,
    /// Use the bounded-iterate variant of the subgoal loop.
    pub modified: bool,
    /// Constant `R` of the bounded-iterate variant; `None` picks the middle
    /// of the admissible interval.
    pub shrink: Option<f64>,
    pub max_iterations: usize,
    /// Boxes per axis of the covering grid.
    pub grid: usize,
    /// A frame is admissible on a box when its determinant at every box
    /// node has one sign and magnitude at least this fraction of its
    /// largest magnitude over the grid.
    pub cover_det_ratio: f64,
    /// Largest bracket length tried when looking for the step of the system.
    pub max_step: usize,
    /// Fiber ball radius as a multiple of the largest fiber norm observed.
    pub fiber_radius_factor: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            tol: 1e-3,
            sim: SimConfig {
                tol: 1e-11,
                ..SimConfig::default()
            },
            steer: SteerConfig::default(),
            modified: false,
            shrink: None,
            max_iterations: 10_000,
            grid: 8,
            cover_det_ratio: 0.05,
            max_step: 4,
            fiber_radius_factor: 10.0,
        }
    }
}

/// Open interval of admissible `R` for step `r`.
pub fn shrink_interval(r: usize) -> (f64, f64) {
    (0.5f64.powf(1.0 / ((r + 1) * (r + 1)) as f64), 1.0)
}

impl PlannerConfig {
    /// The constant `R` of the bounded-iterate variant for step `r`.
    pub fn shrink_for(&self, r: usize) -> Result<f64, Error> {
        let (lo, hi) = shrink_interval(r);
        let value = self.shrink.unwrap_or((lo + hi) / 2.0);
        if value <= lo || value >= hi {
            return Err(Error::InvalidSpec(format!(
                "R = {value} outside ({lo}, {hi}) for step {r}"
            )));
        }
        Ok(value)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "tolerance {} must be positive",
                self.tol
            )));
        }
        if self.grid == 0 {
            return Err(Error::InvalidSpec(
                "covering grid needs at least one box per axis".into(),
            ));
        }
        Ok(())
    }
}

/// Working region of a planning run: a union of boxes in the base
/// coordinates and an optional ball for the fiber coordinates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Region {
    pub boxes: Vec<Domain>,
    pub base_dim: usize,
    pub fiber_radius: Option<f64>,
}

impl Region {
    pub fn unbounded(base_dim: usize) -> Self {
        Region {
            boxes: Vec::new(),
            base_dim,
            fiber_radius: None,
        }
    }

    pub fn boxed(domain: Domain) -> Self {
        let base_dim = domain.lower.len();
        Region {
            boxes: vec![domain],
            base_dim,
            fiber_radius: None,
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        let base = &p[..self.base_dim.min(p.len())];
        let in_boxes = self.boxes.is_empty() || self.boxes.iter().any(|b| b.contains(base));
        let in_ball = match self.fiber_radius {
            Some(radius) => fiber_norm(p, self.base_dim) <= radius,
            None => true,
        };
        in_boxes && in_ball
    }
}

fn fiber_norm(p: &[f64], base_dim: usize) -> f64 {
    p.get(base_dim..)
        .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
        .unwrap_or(0.0)
}

/// A system free up to step `basis.r` on its working region, with the
/// steering plan of its canonical approximation.
pub struct FreeProblem<'a, Sys> {
    pub system: &'a Sys,
    pub basis: HallBasis,
    pub plan: SteeringPlan,
    pub region: Region,
}

impl<'a, Sys: DriftlessSystem + JetSystem<f64>> FreeProblem<'a, Sys> {
    pub fn new(
        system: &'a Sys,
        basis: HallBasis,
        steer: &SteerConfig,
        region: Region,
    ) -> Result<Self, Error> {
        let plan = plan_all(&basis, steer)?;
        Ok(FreeProblem {
            system,
            basis,
            plan,
            region,
        })
    }

    /// Privileged chart and canonical approximation at `a`.
    pub fn approx_at(&self, a: &[f64]) -> Result<ApproxSystem<f64>, Error> {
        first_order_approx(self.system, a, &self.basis)
    }
}

/// Result of one local steering step.
#[derive(Clone, Debug)]
pub struct AppSteerOutcome {
    pub endpoint: Vec<f64>,
    pub law: ControlLaw<f64>,
    /// Largest fiber norm along the trajectory.
    pub max_fiber: f64,
}

/// Steers the approximation at the anchor of `approx` from the image of `x`
/// to the origin and applies the input to the true system from `x`.
///
/// Leaving the working region is reported as [`Error::DomainExit`].
pub fn app_steer<Sys: DriftlessSystem + JetSystem<f64>>(
    problem: &FreeProblem<Sys>,
    approx: &ApproxSystem<f64>,
    x: &[f64],
    sim: &SimConfig,
) -> Result<AppSteerOutcome, Error> {
    let z = approx.chart.to_chart_f64(x);
    let law = exact_steer(&z, &problem.plan);
    let cfg = SimConfig {
        record_steps: true,
        ..sim.clone()
    };
    let traj = integrate(problem.system, x, &law, &cfg)?;
    let base_dim = problem.region.base_dim;
    let mut max_fiber: f64 = 0.0;
    for (t, state) in traj.times.iter().zip(&traj.states) {
        if !problem.region.contains(state) {
            return Err(Error::DomainExit { t: *t });
        }
        max_fiber = max_fiber.max(fiber_norm(state, base_dim));
    }
    Ok(AppSteerOutcome {
        endpoint: traj.endpoint().to_vec(),
        law,
        max_fiber,
    })
}

/// Point whose chart image at the target is `δ_t(z(x̄))`,
/// `t = max(0, 1 − jη/‖z(x̄)‖)`.
pub fn subgoal(xbar: &[f64], eta: f64, j: usize, chart: &PrivilegedChart<f64>) -> Vec<f64> {
    let z = chart.to_chart_f64(xbar);
    let norm = pseudo_norm(&z, &chart.weights);
    let t = if norm == 0.0 {
        0.0
    } else {
        (1.0 - j as f64 * eta / norm).max(0.0)
    };
    if t == 0.0 {
        return chart.anchor.clone();
    }
    if t == 1.0 {
        return xbar.to_vec();
    }
    chart.from_chart_f64(&dilate(&z, t, &chart.weights))
}

/// How an iteration of the subgoal loop ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepOutcome {
    /// Accepted step.
    Accepted,
    /// Accepted while entering the next ring of the bounded variant; `η` halved.
    AcceptedRing,
    /// The subgoal was not approached by half; `η` halved and the path restarted.
    NotApproaching,
    /// The trajectory left the working region; handled as `NotApproaching`.
    LeftDomain,
    /// Bounded variant: the endpoint fell outside the current ring; `η` halved.
    OutsideRing,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub subgoal: Vec<f64>,
    pub eta: f64,
    /// `‖Φ(x^d, x_i)‖`.
    pub before: f64,
    /// `‖Φ(x^d, x)‖`, infinite when the trajectory left the region.
    pub after: f64,
    /// `‖z(x)‖` of the endpoint.
    pub target_norm: f64,
    pub outcome: StepOutcome,
    pub input_length: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    IterationCapExceeded,
}

/// Trace of one subgoal loop.
#[derive(Clone, Debug, Serialize)]
pub struct FreeReport {
    pub modified: bool,
    /// Accepted iterates `x_i`, starting with the initial point.
    pub iterates: Vec<Vec<f64>>,
    /// Subgoals `x_i^d` of the accepted iterates.
    pub subgoals: Vec<Vec<f64>>,
    /// `η` at every iteration, accepted or not.
    pub eta_history: Vec<f64>,
    /// `‖z(x_i)‖` of the accepted iterates.
    pub norms: Vec<f64>,
    pub records: Vec<IterationRecord>,
    /// Inputs of the accepted iterations.
    pub inputs: Vec<ControlLaw<f64>>,
    pub total_length: f64,
    pub status: Status,
    /// Bound `‖z(x_0)‖ / (1 − R)` of the bounded variant.
    pub iterate_bound: Option<f64>,
    pub max_fiber: f64,
}

impl FreeReport {
    pub fn endpoint(&self) -> &[f64] {
        self.iterates
            .last()
            .expect("the initial point is always recorded")
    }

    pub fn final_norm(&self) -> f64 {
        *self
            .norms
            .last()
            .expect("the initial norm is always recorded")
    }

    /// Concatenation of the accepted inputs.
    pub fn law(&self, m: usize) -> ControlLaw<f64> {
        self.inputs
            .iter()
            .fold(ControlLaw::empty(m), |acc, l| acc.then(l))
    }
}

/// The subgoal loop from `x0` to `x1` with tolerance `config.tol`.
pub fn global_free<Sys: DriftlessSystem + JetSystem<f64>>(
    problem: &FreeProblem<Sys>,
    x0: &[f64],
    x1: &[f64],
    config: &PlannerConfig,
) -> Result<FreeReport, Error> {
    config.validate()?;
    let target = problem.approx_at(x1)?;
    let chart = &target.chart;
    let norm_z = |x: &[f64]| pseudo_norm(&chart.to_chart_f64(x), &chart.weights);
    let shrink = if config.modified {
        Some(config.shrink_for(problem.basis.r)?)
    } else {
        None
    };
    let initial_norm = norm_z(x0);
    let ring = |k: usize| -> f64 {
        shrink
            .map(|r| (0..=k).map(|p| r.powi(p as i32)).sum::<f64>())
            .unwrap_or(f64::INFINITY)
    };

    let mut report = FreeReport {
        modified: config.modified,
        iterates: vec![x0.to_vec()],
        subgoals: Vec::new(),
        eta_history: Vec::new(),
        norms: vec![initial_norm],
        records: Vec::new(),
        inputs: Vec::new(),
        total_length: 0.0,
        status: Status::Converged,
        iterate_bound: shrink.map(|r| initial_norm / (1.0 - r)),
        max_fiber: fiber_norm(x0, problem.region.base_dim),
    };
    let mut xi = x0.to_vec();
    let mut xbar = x0.to_vec();
    let mut j = 1usize;
    let mut k = 0usize;
    let mut eta = initial_norm;
    let mut current = initial_norm;
    while current > config.tol {
        if report.records.len() >= config.max_iterations {
            report.status = Status::IterationCapExceeded;
            break;
        }
        report.eta_history.push(eta);
        let xd = subgoal(&xbar, eta, j, chart);
        let local = problem.approx_at(&xd)?;
        let dist = |x: &[f64]| pseudo_norm(&local.chart.to_chart_f64(x), &local.chart.weights);
        let before = dist(&xi);
        let steered = match app_steer(problem, &local, &xi, &config.sim) {
            Ok(outcome) => Some(outcome),
            Err(Error::DomainExit { .. }) => None,
            Err(e) => return Err(e),
        };
        let (after, endpoint_norm, length) = match &steered {
            Some(o) => (dist(&o.endpoint), norm_z(&o.endpoint), input_length(&o.law)),
            None => (f64::INFINITY, f64::INFINITY, 0.0),
        };
        let outcome = match &steered {
            None => StepOutcome::LeftDomain,
            Some(_) if after > 0.5 * before => StepOutcome::NotApproaching,
            Some(_) if endpoint_norm >= ring(k + 1) * initial_norm => StepOutcome::OutsideRing,
            Some(_) if endpoint_norm >= ring(k) * initial_norm => StepOutcome::AcceptedRing,
            Some(_) => StepOutcome::Accepted,
        };
        report.records.push(IterationRecord {
            subgoal: xd.clone(),
            eta,
            before,
            after,
            target_norm: endpoint_norm,
            outcome,
            input_length: length,
        });
        match outcome {
            StepOutcome::NotApproaching | StepOutcome::LeftDomain => {
                eta /= 2.0;
                xbar = xi.clone();
                j = 1;
            }
            StepOutcome::OutsideRing => eta /= 2.0,
            StepOutcome::Accepted | StepOutcome::AcceptedRing => {
                let o = steered.expect("accepted steps have an outcome");
                j += 1;
                xi = o.endpoint;
                current = endpoint_norm;
                report.max_fiber = report.max_fiber.max(o.max_fiber);
                report.total_length += length;
                report.iterates.push(xi.clone());
                report.subgoals.push(xd);
                report.norms.push(current);
                report.inputs.push(o.law);
                if outcome == StepOutcome::AcceptedRing {
                    eta /= 2.0;
                    k += 1;
                }
            }
        }
    }
    Ok(report)
}

/// One cell of the covering: a frame and the grid boxes on which it is
/// admissible, connected through shared faces.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cell {
    pub frame: Vec<usize>,
    /// Flat indices of the boxes.
    pub boxes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoveringAtlas {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub grid: usize,
    /// Step `r` used for the frames (largest bracket length needed on `K`).
    pub step: usize,
    pub cells: Vec<Cell>,
    /// Pairs of cells sharing at least one box.
    pub edges: Vec<(usize, usize)>,
    /// Preferred frame of every box.
    pub preferred: Vec<Vec<usize>>,
    /// Cell path from the start point to the goal point, when requested.
    pub path: Vec<usize>,
}

impl CoveringAtlas {
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    fn width(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / self.grid as f64
    }

    /// Multi-index of a flat box index.
    pub fn box_coords(&self, flat: usize) -> Vec<usize> {
        let mut rest = flat;
        (0..self.dim())
            .map(|_| {
                let c = rest % self.grid;
                rest /= self.grid;
                c
            })
            .collect()
    }

    fn flat(&self, coords: &[usize]) -> usize {
        coords.iter().rev().fold(0, |acc, &c| acc * self.grid + c)
    }

    pub fn box_domain(&self, flat: usize) -> Domain {
        let coords = self.box_coords(flat);
        let lower: Vec<f64> = coords
            .iter()
            .enumerate()
            .map(|(a, &c)| self.lower[a] + c as f64 * self.width(a))
            .collect();
        let upper: Vec<f64> = lower
            .iter()
            .enumerate()
            .map(|(a, &l)| l + self.width(a))
            .collect();
        Domain { lower, upper }
    }

    pub fn box_center(&self, flat: usize) -> Vec<f64> {
        let d = self.box_domain(flat);
        d.lower
            .iter()
            .zip(&d.upper)
            .map(|(l, u)| (l + u) / 2.0)
            .collect()
    }

    /// Box containing `x`.
    pub fn locate(&self, x: &[f64]) -> Result<usize, Error> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "point of dimension {} in a box of dimension {}",
                x.len(),
                self.dim()
            )));
        }
        let mut coords = Vec::with_capacity(self.dim());
        for (a, &v) in x.iter().enumerate() {
            if !(v >= self.lower[a] && v <= self.upper[a]) {
                return Err(Error::OutsideBox);
            }
            coords
                .push((((v - self.lower[a]) / self.width(a)).floor() as usize).min(self.grid - 1));
        }
        Ok(self.flat(&coords))
    }

    pub fn cell_region(&self, cell: usize) -> Region {
        Region {
            boxes: self.cells[cell]
                .boxes
                .iter()
                .map(|&b| self.box_domain(b))
                .collect(),
            base_dim: self.dim(),
            fiber_radius: None,
        }
    }

    /// Simple path of cells from a cell containing `from` to one containing
    /// `to`, preferring the frame chosen at `from`.
    pub fn find_path(&self, from: &[f64], to: &[f64]) -> Result<Vec<usize>, Error> {
        let b0 = self.locate(from)?;
        let b1 = self.locate(to)?;
        let start = self
            .cells
            .iter()
            .position(|c| c.frame == self.preferred[b0] && c.boxes.contains(&b0))
            .expect("every box lies in a cell of its preferred frame");
        let goal = |c: usize| self.cells[c].boxes.contains(&b1);
        let mut previous = vec![usize::MAX; self.cells.len()];
        let mut queue = VecDeque::from([start]);
        previous[start] = start;
        while let Some(c) = queue.pop_front() {
            if goal(c) {
                let mut path = vec![c];
                let mut cur = c;
                while cur != start {
                    cur = previous[cur];
                    path.push(cur);
                }
                path.reverse();
                return Ok(path);
            }
            for &(a, b) in &self.edges {
                let next = if a == c {
                    b
                } else if b == c {
                    a
                } else {
                    continue;
                };
                if previous[next] == usize::MAX {
                    previous[next] = c;
                    queue.push_back(next);
                }
            }
        }
        Err(Error::NoPath)
    }

    /// Box center of the overlap of two cells closest to the overlap centroid.
    pub fn waypoint(&self, a: usize, b: usize) -> Option<Vec<f64>> {
        let shared: Vec<usize> = self.cells[a]
            .boxes
            .iter()
            .copied()
            .filter(|x| self.cells[b].boxes.contains(x))
            .collect();
        if shared.is_empty() {
            return None;
        }
        let centers: Vec<Vec<f64>> = shared.iter().map(|&s| self.box_center(s)).collect();
        let centroid: Vec<f64> = (0..self.dim())
            .map(|i| centers.iter().map(|c| c[i]).sum::<f64>() / centers.len() as f64)
            .collect();
        let dist = |c: &Vec<f64>| {
            c.iter()
                .zip(&centroid)
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
        };
        centers
            .into_iter()
            .min_by(|p, q| dist(p).partial_cmp(&dist(q)).unwrap())
    }
}

/// All `k`-subsets of `0..n`.
fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if n < k {
        return Vec::new();
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

/// Covers the box `k` by cells on which a fixed bracket frame stays
/// independent. The step is the least bracket length for which every box
/// has an admissible frame.
pub fn build_covering(
    system: &ExprSystem,
    k: &Domain,
    config: &PlannerConfig,
) -> Result<CoveringAtlas, Error> {
    config.validate()?;
    let n = system.state_dim();
    if k.lower.len() != n || k.upper.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "box of dimension {} for a state of dimension {n}",
            k.lower.len()
        )));
    }
    let mut last_gap = None;
    for step in 1..=config.max_step {
        let basis = build_hall_basis(system.input_dim(), step);
        if basis.len() < n {
            continue;
        }
        match covering_at_step(system, k, &basis, config) {
            Ok(atlas) => return Ok(atlas),
            Err(Error::CoverageGap { lower }) => last_gap = Some(lower),
            Err(e) => return Err(e),
        }
    }
    Err(Error::CoverageGap {
        lower: last_gap.unwrap_or_else(|| k.lower.clone()),
    })
}

fn covering_at_step(
    system: &ExprSystem,
    k: &Domain,
    basis: &HallBasis,
    config: &PlannerConfig,
) -> Result<CoveringAtlas, Error> {
    let n = system.state_dim();
    let g = config.grid;
    let frames = subsets(basis.len(), n);
    let mut atlas = CoveringAtlas {
        lower: k.lower.clone(),
        upper: k.upper.clone(),
        grid: g,
        step: basis.r,
        cells: Vec::new(),
        edges: Vec::new(),
        preferred: Vec::new(),
        path: Vec::new(),
    };

    // Determinants of every candidate frame at every grid node.
    let nodes = (g + 1).pow(n as u32);
    let node_point = |flat: usize| -> Vec<f64> {
        let mut rest = flat;
        (0..n)
            .map(|a| {
                let c = rest % (g + 1);
                rest /= g + 1;
                k.lower[a] + (k.upper[a] - k.lower[a]) * c as f64 / g as f64
            })
            .collect()
    };
    let dets: Vec<Vec<f64>> = (0..nodes)
        .map(|v| {
            let values = bracket_values(system, basis, &node_point(v));
            frames
                .iter()
                .map(|f| {
                    Matrix::from_columns(&f.iter().map(|&j| values[j].clone()).collect::<Vec<_>>())
                        .det()
                })
                .collect()
        })
        .collect();
    let scale: Vec<f64> = (0..frames.len())
        .map(|f| dets.iter().map(|d| d[f].abs()).fold(0.0, f64::max))
        .collect();

    let boxes = g.pow(n as u32);
    let box_nodes = |b: usize| -> Vec<usize> {
        let coords = atlas.box_coords(b);
        (0..1usize << n)
            .map(|corner| {
                coords
                    .iter()
                    .enumerate()
                    .rev()
                    .fold(0, |acc, (a, &c)| acc * (g + 1) + c + ((corner >> a) & 1))
            })
            .collect()
    };
    let admissible: Vec<Vec<bool>> = (0..boxes)
        .map(|b| {
            let corner_nodes = box_nodes(b);
            (0..frames.len())
                .map(|f| {
                    if scale[f] == 0.0 {
                        return false;
                    }
                    let values: Vec<f64> = corner_nodes.iter().map(|&v| dets[v][f]).collect();
                    let same_sign =
                        values.iter().all(|&d| d > 0.0) || values.iter().all(|&d| d < 0.0);
                    same_sign
                        && values
                            .iter()
                            .all(|d| d.abs() >= config.cover_det_ratio * scale[f])
                })
                .collect()
        })
        .collect();
    let weight = |f: usize| -> usize { frames[f].iter().map(|&j| basis.elements[j].length).sum() };
    let mut preferred = Vec::with_capacity(boxes);
    for b in 0..boxes {
        let corner_nodes = box_nodes(b);
        let min_det = |f: usize| {
            corner_nodes
                .iter()
                .map(|&v| dets[v][f].abs())
                .fold(f64::INFINITY, f64::min)
        };
        let best = (0..frames.len())
            .filter(|&f| admissible[b][f])
            .min_by(|&p, &q| {
                weight(p)
                    .cmp(&weight(q))
                    .then(min_det(q).partial_cmp(&min_det(p)).unwrap())
            });
        match best {
            Some(f) => preferred.push(f),
            None => {
                return Err(Error::CoverageGap {
                    lower: atlas.box_domain(b).lower,
                })
            }
        }
    }
    let mut used: Vec<usize> = preferred.clone();
    used.sort_unstable();
    used.dedup();

    for &f in &used {
        let mut seen = vec![false; boxes];
        for b in 0..boxes {
            if seen[b] || !admissible[b][f] {
                continue;
            }
            let mut component = Vec::new();
            let mut queue = VecDeque::from([b]);
            seen[b] = true;
            while let Some(c) = queue.pop_front() {
                component.push(c);
                let coords = atlas.box_coords(c);
                for a in 0..n {
                    for delta in [-1i64, 1] {
                        let v = coords[a] as i64 + delta;
                        if v < 0 || v >= g as i64 {
                            continue;
                        }
                        let mut next = coords.clone();
                        next[a] = v as usize;
                        let nb = atlas.flat(&next);
                        if !seen[nb] && admissible[nb][f] {
                            seen[nb] = true;
                            queue.push_back(nb);
                        }
                    }
                }
            }
            component.sort_unstable();
            atlas.cells.push(Cell {
                frame: frames[f].iter().map(|j| j + 1).collect(),
                boxes: component,
            });
        }
    }
    for a in 0..atlas.cells.len() {
        for b in a + 1..atlas.cells.len() {
            if atlas.cells[a]
                .boxes
                .iter()
                .any(|x| atlas.cells[b].boxes.binary_search(x).is_ok())
            {
                atlas.edges.push((a, b));
            }
        }
    }
    atlas.preferred = preferred
        .iter()
        .map(|&f| frames[f].iter().map(|j| j + 1).collect())
        .collect();
    Ok(atlas)
}

/// One leg of a global plan: the subgoal loop on the lifted system of a cell.
#[derive(Clone, Debug, Serialize)]
pub struct LegReport {
    pub cell: usize,
    pub frame: Vec<usize>,
    /// Anchor of the lifting (the leg's target).
    pub anchor: Vec<f64>,
    pub start: Vec<f64>,
    pub lifted_dim: usize,
    pub fiber_radius: f64,
    pub free: FreeReport,
}

/// Trace of a global plan.
#[derive(Clone, Debug, Serialize)]
pub struct PlannerReport {
    pub initial: Vec<f64>,
    pub target: Vec<f64>,
    pub tol: f64,
    pub modified: bool,
    pub step: usize,
    pub path: Vec<usize>,
    pub waypoints: Vec<Vec<f64>>,
    pub legs: Vec<LegReport>,
    /// Projection of the last lifted iterate.
    pub endpoint: Vec<f64>,
    /// Pseudo-norm of the last lifted iterate in the chart at the target.
    pub residual: f64,
    pub total_length: f64,
    pub status: Status,
}

#[derive(Clone, Debug)]
pub struct PlanOutcome {
    pub law: ControlLaw<f64>,
    pub report: PlannerReport,
    pub atlas: CoveringAtlas,
}

/// Steers `x_init` to within `config.tol` of `x_final` inside the box `k`.
pub fn global_plan(
    system: &ExprSystem,
    x_init: &[f64],
    x_final: &[f64],
    k: &Domain,
    config: &PlannerConfig,
) -> Result<PlanOutcome, Error> {
    let mut atlas = build_covering(system, k, config)?;
    let path = atlas.find_path(x_init, x_final)?;
    atlas.path = path.clone();
    let mut waypoints: Vec<Vec<f64>> = path
        .windows(2)
        .map(|w| atlas.waypoint(w[0], w[1]).expect("path cells overlap"))
        .collect();
    waypoints.push(x_final.to_vec());
    let basis = build_hall_basis(system.input_dim(), atlas.step);

    let mut legs = Vec::with_capacity(path.len());
    let mut x = x_init.to_vec();
    let mut law = ControlLaw::empty(system.input_dim());
    let mut status = Status::Converged;
    let mut residual = 0.0;
    for (&cell, target) in path.iter().zip(&waypoints) {
        let frame = FrameSelection {
            labels: atlas.cells[cell].frame.clone(),
            anchor: target.clone(),
            det_value: 0.0,
        };
        let lifted: LiftedSystem<f64> = desingularize(system, &frame, &basis)?;
        let region = atlas.cell_region(cell);
        let problem = FreeProblem::new(&lifted, basis.clone(), &config.steer, region)?;
        let start = lifted.lift_point(&x);
        let goal = lifted.lift_point(target);
        let free = global_free(&problem, &start, &goal, config)?;
        residual = free.final_norm();
        x = lifted.project(free.endpoint());
        law = law.then(&free.law(system.input_dim()));
        let leg_status = free.status;
        legs.push(LegReport {
            cell,
            frame: frame.labels,
            anchor: target.clone(),
            start: start.clone(),
            lifted_dim: lifted.dim(),
            fiber_radius: config.fiber_radius_factor * free.max_fiber,
            free,
        });
        if leg_status != Status::Converged {
            status = leg_status;
            break;
        }
    }
    let total_length = legs.iter().map(|l| l.free.total_length).sum();
    let report = PlannerReport {
        initial: x_init.to_vec(),
        target: x_final.to_vec(),
        tol: config.tol,
        modified: config.modified,
        step: atlas.step,
        path,
        waypoints,
        legs,
        endpoint: x,
        residual,
        total_length,
        status,
    };
    Ok(PlanOutcome { law, report, atlas })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{martinet, unicycle};

    fn cube(n: usize, h: f64) -> Domain {
        Domain {
            lower: vec![-h; n],
            upper: vec![h; n],
        }
    }

    #[test]
    fn subgoal_dilates_towards_the_target() {
        let basis = build_hall_basis(2, 2);
        let sys = crate::canonical::CanonicalSystem::<f64>::from_basis(basis.clone());
        let approx = first_order_approx(&sys, &[0.0; 3], &basis).unwrap();
        assert_eq!(
            subgoal(&[1.0, 0.0, 0.0], 0.5, 1, &approx.chart),
            vec![0.5, 0.0, 0.0]
        );
        assert_eq!(
            subgoal(&[1.0, 0.0, 0.0], 0.5, 2, &approx.chart),
            vec![0.0, 0.0, 0.0]
        );
        assert_eq!(
            subgoal(&[1.0, 2.0, 3.0], 0.0, 0, &approx.chart),
            vec![1.0, 2.0, 3.0]
        );
    }

    #[test]
    fn unicycle_covering_is_one_cell() {
        let atlas = build_covering(&unicycle(), &cube(3, 1.0), &PlannerConfig::default()).unwrap();
        assert_eq!(atlas.step, 2);
        assert_eq!(atlas.cells.len(), 1);
        assert_eq!(atlas.cells[0].frame, vec![1, 2, 3]);
    }

    #[test]
    fn martinet_covering_switches_frame_near_the_singular_plane() {
        let atlas = build_covering(&martinet(), &cube(3, 1.0), &PlannerConfig::default()).unwrap();
        assert_eq!(atlas.step, 3);
        let origin = atlas.locate(&[0.01, 0.0, 0.0]).unwrap();
        assert_eq!(atlas.preferred[origin], vec![1, 2, 4]);
        let away = atlas.locate(&[0.9, 0.0, 0.0]).unwrap();
        assert_eq!(atlas.preferred[away], vec![1, 2, 3]);
        let path = atlas
            .find_path(&[-0.5, 0.0, 0.0], &[0.5, 0.2, 0.1])
            .unwrap();
        assert!(path.len() <= 2);
    }

    #[test]
    fn canonical_system_converges_in_one_iteration() {
        let basis = build_hall_basis(2, 3);
        let sys = crate::canonical::CanonicalSystem::<f64>::from_basis(basis.clone());
        let problem =
            FreeProblem::new(&sys, basis, &SteerConfig::default(), Region::unbounded(5)).unwrap();
        let config = PlannerConfig {
            tol: 1e-2,
            ..PlannerConfig::default()
        };
        let report =
            global_free(&problem, &[0.3, -0.2, 0.1, 0.05, -0.02], &[0.0; 5], &config).unwrap();
        assert_eq!(report.status, Status::Converged);
        assert_eq!(report.iterates.len(), 2);
    }
}
