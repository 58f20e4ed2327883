//! Maximum-likelihood refinement of the motion state and anchor offsets by
//! block coordinate descent.
//!
//! Each block takes a Gauss-Newton direction, clipped to the block's step
//! cap, followed by Armijo backtracking. The orientation block works in the
//! tangent space of the unit sphere and returns to it with a retraction.
//!
//! By default the offsets are profiled: after every block they are reset to
//! their closed-form optimum (per-anchor weighted mean residuals). Plain
//! block descent is available through [`OffsetMode::Block`]; it converges
//! slowly because position and clock offset are strongly coupled.

pub mod manifold;
mod problem;

pub use problem::{Block, MotionState, Offsets, Prediction, Problem};

use nalgebra::{DMatrix, DVector, Vector2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::initializer::InitEstimate;
use crate::linalg::householder_tangent;
use crate::measurement::MeasurementSet;
use crate::rng::{keyed_rng, STREAM_JITTER};
use crate::scenario::{random_unit, Scenario};
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffsetMode {
    #[default]
    Profiled,
    Block,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    #[default]
    GaussNewton,
    /// Negative gradient scaled to the block's step cap.
    Gradient,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizes {
    pub position: f64,
    pub velocity: f64,
    pub clock_offset: f64,
    pub frequency_offset: f64,
    pub orientation: f64,
}

impl Default for StepSizes {
    fn default() -> Self {
        Self { position: 1.0, velocity: 0.5, clock_offset: 1e-7, frequency_offset: 10.0, orientation: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_outer_iters: usize,
    /// Relative cost decrease below which an outer iteration counts as stalled.
    pub cost_tolerance: f64,
    /// Consecutive stalled iterations before stopping.
    pub patience: usize,
    /// Accepted steps shorter than this fraction of the block's cap count as underflow.
    pub step_tolerance: f64,
    pub initial_steps: StepSizes,
    pub backtracking: f64,
    pub armijo: f64,
    pub max_backtracks: usize,
    pub block_order: Vec<Block>,
    pub offset_mode: OffsetMode,
    pub direction: Direction,
    /// End every outer iteration with a Gauss-Newton step over all motion
    /// parameters at once, kept only if it passes the Armijo test. Cyclic
    /// block updates alone converge slowly when position and orientation
    /// are strongly coupled.
    pub joint_step: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_outer_iters: 500,
            cost_tolerance: 1e-10,
            patience: 3,
            step_tolerance: 1e-13,
            initial_steps: StepSizes::default(),
            backtracking: 0.5,
            armijo: 1e-4,
            max_backtracks: 60,
            block_order: vec![Block::Position, Block::Velocity, Block::Offsets, Block::Orientation],
            offset_mode: OffsetMode::Profiled,
            direction: Direction::GaussNewton,
            joint_step: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let s = &self.initial_steps;
        let ok = self.cost_tolerance > 0.0
            && self.step_tolerance > 0.0
            && self.armijo > 0.0
            && self.backtracking > 0.0
            && self.backtracking < 1.0
            && [s.position, s.velocity, s.clock_offset, s.frequency_offset, s.orientation].iter().all(|&x| x > 0.0);
        if !ok {
            return Err(Error::Config("solver settings must be positive with backtracking in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    CostTol,
    StepTol,
    MaxIters,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::CostTol => "cost_tol",
            StopReason::StepTol => "step_tol",
            StopReason::MaxIters => "max_iters",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateState {
    pub position0: Vec3,
    pub velocity: Vec3,
    pub orientation: Vec3,
    pub offsets: Offsets,
    pub cost: f64,
    pub iteration: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
    /// Cost after every outer iteration, starting with the initial cost.
    pub cost_history: Vec<f64>,
}

impl EstimateState {
    pub fn motion(&self) -> MotionState {
        MotionState { position0: self.position0, velocity: self.velocity, orientation: self.orientation }
    }
}

/// Starting point of a refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct StartPoint {
    pub motion: MotionState,
    pub offsets: Offsets,
}

impl From<&InitEstimate> for StartPoint {
    fn from(i: &InitEstimate) -> Self {
        StartPoint {
            motion: MotionState { position0: i.position0, velocity: i.velocity, orientation: i.orientation },
            offsets: Offsets { clock: i.clock_offsets.clone(), frequency: i.frequency_offsets.clone() },
        }
    }
}

/// Cost of `(state, offsets)` under `meas`.
pub fn cost(state: &MotionState, offsets: &Offsets, meas: &MeasurementSet, scenario: &Scenario) -> Result<f64> {
    Ok(Problem::new(scenario, meas)?.cost(state, offsets))
}

/// Analytic gradient of the cost with respect to one block.
pub fn block_gradient(
    state: &MotionState,
    offsets: &Offsets,
    meas: &MeasurementSet,
    scenario: &Scenario,
    block: Block,
) -> Result<DVector<f64>> {
    Problem::new(scenario, meas)?.block_gradient(state, offsets, block)
}

/// One Armijo-backtracked Riemannian gradient step on the orientation.
/// Returns the new orientation, or `None` when the step underflows.
pub fn riemannian_step(problem: &Problem, state: &MotionState, offsets: &Offsets, cfg: &SolverConfig) -> Result<Option<Vec3>> {
    let g = problem.block_gradient(state, offsets, Block::Orientation)?;
    let g = Vec3::new(g[0], g[1], g[2]);
    let rg = manifold::project(&state.orientation, &g);
    let n = rg.norm();
    if n == 0.0 {
        return Ok(None);
    }
    let dir = -rg * (cfg.initial_steps.orientation / n);
    let f0 = problem.cost(state, offsets);
    let slope = rg.dot(&dir);
    let mut t = 1.0;
    for _ in 0..cfg.max_backtracks {
        let s = manifold::retract(&state.orientation, &(t * dir));
        let cand = MotionState { orientation: s, ..*state };
        if problem.cost(&cand, offsets) <= f0 + cfg.armijo * t * slope {
            return Ok(Some(s));
        }
        t *= cfg.backtracking;
        if t * cfg.initial_steps.orientation < cfg.step_tolerance * cfg.initial_steps.orientation {
            break;
        }
    }
    Ok(None)
}

struct Solver<'p, 'a> {
    problem: &'p Problem<'a>,
    cfg: &'p SolverConfig,
    state: MotionState,
    offsets: Offsets,
    cost: f64,
}

impl Solver<'_, '_> {
    fn profiled(&self) -> bool {
        self.cfg.offset_mode == OffsetMode::Profiled
    }

    /// Cost of a candidate, with the offsets it would carry.
    fn eval(&self, s: &MotionState, o: &Offsets) -> (f64, Option<Offsets>) {
        if self.profiled() {
            self.problem.profiled_cost(s)
        } else {
            (self.problem.cost(s, o), None)
        }
    }

    fn cap(&self, block: Block) -> f64 {
        let s = &self.cfg.initial_steps;
        match block {
            Block::Position => s.position,
            Block::Velocity => s.velocity,
            Block::Orientation => s.orientation,
            Block::Offsets => 1.0,
        }
    }

    /// Runs one block update. Returns true if a step was accepted.
    fn step(&mut self, block: Block) -> Result<bool> {
        let p = self.problem.predict(&self.state)?;
        let (rt, rf) = self.problem.residuals(&p, &self.offsets);
        let g = self.problem.block_gradient_at(&p, &rt, &rf, block);
        if g.iter().all(|x| *x == 0.0) {
            return Ok(false);
        }
        if block == Block::Offsets {
            return Ok(self.offsets_step(&g));
        }
        let g3 = Vec3::new(g[0], g[1], g[2]);
        let cap = self.cap(block);
        // search direction in block coordinates (tangent coordinates for orientation)
        let basis = householder_tangent(&self.state.orientation);
        let (grad, h) = {
            let h3 = self.problem.block_normal_matrix(&p, block, self.profiled());
            if block == Block::Orientation {
                let b = DMatrix::from_column_slice(3, 2, basis.as_slice());
                let gt = basis.transpose() * g3;
                (DVector::from_column_slice(gt.as_slice()), b.transpose() * h3 * b)
            } else {
                (g.clone(), h3)
            }
        };
        let mut d = match self.cfg.direction {
            Direction::GaussNewton => gauss_newton(&h, &grad).unwrap_or_else(|| -&grad),
            Direction::Gradient => -&grad,
        };
        if grad.dot(&d) >= 0.0 {
            d = -&grad;
        }
        if self.cfg.direction == Direction::Gradient || d.norm() > cap {
            d *= cap / d.norm();
        }
        let slope = grad.dot(&d);
        let to_step = |t: f64| -> MotionState {
            let mut s = self.state;
            match block {
                Block::Position => s.position0 += t * Vec3::new(d[0], d[1], d[2]),
                Block::Velocity => s.velocity += t * Vec3::new(d[0], d[1], d[2]),
                Block::Orientation => {
                    let u = basis * Vector2::new(d[0], d[1]) * t;
                    s.orientation = manifold::retract(&self.state.orientation, &u);
                }
                Block::Offsets => unreachable!(),
            }
            s
        };
        let mut t = 1.0;
        for _ in 0..self.cfg.max_backtracks {
            if t * d.norm() < self.cfg.step_tolerance * cap {
                break;
            }
            let cand = to_step(t);
            let (c, o) = self.eval(&cand, &self.offsets);
            if c <= self.cost + self.cfg.armijo * t * slope {
                self.state = cand;
                self.cost = c;
                if let Some(o) = o {
                    self.offsets = o;
                }
                return Ok(true);
            }
            t *= self.cfg.backtracking;
        }
        Ok(false)
    }

    /// Gauss-Newton step over `[p; v; s]` in the tangent coordinates of the
    /// orientation, clipped so that no block exceeds its cap.
    fn joint_step(&mut self) -> Result<bool> {
        let p = self.problem.predict(&self.state)?;
        let (rt, rf) = self.problem.residuals(&p, &self.offsets);
        let (h9, g9) = self.problem.motion_normal_system(&p, &rt, &rf, self.profiled());
        let basis = crate::linalg::tangent_basis(&self.state.orientation);
        let h = DMatrix::from_column_slice(8, 8, (basis.transpose() * h9 * basis).as_slice());
        let g = DVector::from_column_slice((basis.transpose() * g9).as_slice());
        let Some(mut d) = gauss_newton(&h, &g) else {
            return Ok(false);
        };
        let slope0 = g.dot(&d);
        if !(slope0 < 0.0) {
            return Ok(false);
        }
        let full = basis * nalgebra::SVector::<f64, 8>::from_column_slice(d.as_slice());
        let caps = [self.cap(Block::Position), self.cap(Block::Velocity), self.cap(Block::Orientation)];
        let over = (0..3).map(|j| full.fixed_rows::<3>(3 * j).norm() / caps[j]).fold(0.0, f64::max);
        if over > 1.0 {
            d /= over;
        }
        let full = basis * nalgebra::SVector::<f64, 8>::from_column_slice(d.as_slice());
        let slope = g.dot(&d);
        let mut t = 1.0;
        for _ in 0..self.cfg.max_backtracks {
            let rel = (0..3).map(|j| t * full.fixed_rows::<3>(3 * j).norm() / caps[j]).fold(0.0, f64::max);
            if rel < self.cfg.step_tolerance {
                break;
            }
            let mut cand = self.state;
            cand.position0 += t * full.fixed_rows::<3>(0).into_owned();
            cand.velocity += t * full.fixed_rows::<3>(3).into_owned();
            cand.orientation = manifold::retract(&self.state.orientation, &(t * full.fixed_rows::<3>(6).into_owned()));
            let (c, o) = self.eval(&cand, &self.offsets);
            if c <= self.cost + self.cfg.armijo * t * slope {
                self.state = cand;
                self.cost = c;
                if let Some(o) = o {
                    self.offsets = o;
                }
                return Ok(true);
            }
            t *= self.cfg.backtracking;
        }
        Ok(false)
    }

    fn offsets_step(&mut self, g: &DVector<f64>) -> bool {
        if self.profiled() {
            // already at the closed-form optimum
            return false;
        }
        let nb = self.problem.num_anchors();
        let curv = self.problem.offsets_curvature();
        let caps: Vec<f64> = (0..2 * nb)
            .map(|i| if i < nb { self.cfg.initial_steps.clock_offset } else { self.cfg.initial_steps.frequency_offset })
            .collect();
        let mut d: DVector<f64> = match self.cfg.direction {
            Direction::GaussNewton => DVector::from_iterator(2 * nb, (0..2 * nb).map(|i| -g[i] / curv[i])),
            Direction::Gradient => -g.clone(),
        };
        // clip in units of each entry's cap
        let scaled = (0..2 * nb).map(|i| (d[i] / caps[i]).abs()).fold(0.0, f64::max);
        if self.cfg.direction == Direction::Gradient {
            let gs = DVector::from_iterator(2 * nb, (0..2 * nb).map(|i| d[i] * caps[i]));
            let m = gs.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
            d = gs.map(|x| x / m.max(f64::MIN_POSITIVE)).component_mul(&DVector::from_vec(caps.clone()));
        } else if scaled > 1.0 {
            d /= scaled;
        }
        let slope = g.dot(&d);
        let mut t = 1.0;
        for _ in 0..self.cfg.max_backtracks {
            let rel = (0..2 * nb).map(|i| (t * d[i] / caps[i]).abs()).fold(0.0, f64::max);
            if rel < self.cfg.step_tolerance {
                break;
            }
            let mut o = self.offsets.clone();
            for b in 0..nb {
                o.clock[b] += t * d[b];
                o.frequency[b] += t * d[nb + b];
            }
            let c = self.problem.cost(&self.state, &o);
            if c <= self.cost + self.cfg.armijo * t * slope {
                self.offsets = o;
                self.cost = c;
                return true;
            }
            t *= self.cfg.backtracking;
        }
        false
    }
}

fn gauss_newton(h: &DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    let d = crate::linalg::jacobi_scaling(h);
    if d.iter().any(|&x| x == 0.0) {
        return None;
    }
    let hs = DMatrix::from_fn(h.nrows(), h.ncols(), |i, j| d[i] * h[(i, j)] * d[j]);
    let gs = g.component_mul(&d);
    let x = hs.cholesky()?.solve(&gs);
    Some(-x.component_mul(&d))
}

/// Refines `start` against `meas` (Algorithm: cyclic block updates until the
/// stopping rule fires).
pub fn refine(start: &StartPoint, meas: &MeasurementSet, scenario: &Scenario, cfg: &SolverConfig) -> Result<EstimateState> {
    cfg.validate()?;
    let problem = Problem::new(scenario, meas)?;
    if !start.motion.is_finite() {
        return Err(Error::Estimator("non-finite starting point".into()));
    }
    let mut motion = start.motion;
    motion.orientation = motion.orientation.normalize();
    let init_cost = problem.cost(&motion, &start.offsets);
    if !init_cost.is_finite() {
        return Err(Error::Estimator(format!("cost at the starting point is {init_cost}")));
    }
    let mut solver = Solver { problem: &problem, cfg, state: motion, offsets: start.offsets.clone(), cost: init_cost };
    if cfg.max_outer_iters == 0 {
        return Ok(finish(solver, 0, false, StopReason::MaxIters, vec![init_cost]));
    }
    if solver.profiled() {
        let (c, o) = problem.profiled_cost(&solver.state);
        solver.cost = c;
        solver.offsets = o.expect("finite cost implies a valid prediction");
    }
    let mut history = vec![init_cost];
    let mut stalled = 0;
    for it in 1..=cfg.max_outer_iters {
        let before = solver.cost;
        let mut moved = false;
        for &b in &cfg.block_order {
            moved |= solver.step(b)?;
        }
        if cfg.joint_step && cfg.direction == Direction::GaussNewton {
            moved |= solver.joint_step()?;
        }
        history.push(solver.cost);
        debug_assert!(solver.cost <= before);
        if solver.cost == 0.0 {
            return Ok(finish(solver, it, true, StopReason::CostTol, history));
        }
        if !moved {
            return Ok(finish(solver, it, true, StopReason::StepTol, history));
        }
        let rel = (before - solver.cost) / before.abs().max(f64::MIN_POSITIVE);
        stalled = if rel < cfg.cost_tolerance { stalled + 1 } else { 0 };
        if stalled >= cfg.patience {
            return Ok(finish(solver, it, true, StopReason::CostTol, history));
        }
    }
    Ok(finish(solver, cfg.max_outer_iters, false, StopReason::MaxIters, history))
}

fn finish(s: Solver, iteration: usize, converged: bool, stop_reason: StopReason, cost_history: Vec<f64>) -> EstimateState {
    EstimateState {
        position0: s.state.position0,
        velocity: s.state.velocity,
        orientation: s.state.orientation,
        offsets: s.offsets,
        cost: s.cost,
        iteration,
        converged,
        stop_reason,
        cost_history,
    }
}

/// Jitter applied to restarts in [`refine_multistart`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jitter {
    pub position: f64,
    pub velocity: f64,
    /// Angle (rad).
    pub orientation: f64,
}

impl Default for Jitter {
    fn default() -> Self {
        Self { position: 1.0, velocity: 0.5, orientation: 0.05 }
    }
}

/// Runs `refine` from `start` and from `restarts` jittered copies, keeping the
/// lowest final cost.
pub fn refine_multistart(
    start: &StartPoint,
    meas: &MeasurementSet,
    scenario: &Scenario,
    cfg: &SolverConfig,
    restarts: usize,
    jitter: &Jitter,
    seed: u64,
) -> Result<EstimateState> {
    let mut best = refine(start, meas, scenario, cfg)?;
    for r in 0..restarts {
        let mut rng = keyed_rng(&[seed, STREAM_JITTER, r as u64]);
        let mut s = start.clone();
        s.motion.position0 += jitter.position * rng.random::<f64>() * random_unit(&mut rng);
        s.motion.velocity += jitter.velocity * rng.random::<f64>() * random_unit(&mut rng);
        let axis = manifold::project(&s.motion.orientation, &random_unit(&mut rng));
        if axis.norm() > 0.0 {
            let u = axis.normalize() * (jitter.orientation * rng.random::<f64>()).tan();
            s.motion.orientation = manifold::retract(&s.motion.orientation, &u);
        }
        if let Ok(e) = refine(&s, meas, scenario, cfg) {
            if e.cost < best.cost {
                best = e;
            }
        }
    }
    Ok(best)
}
