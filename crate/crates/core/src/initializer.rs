//! Geometric initializer.
//!
//! 1. Per element in the index set and per slot, a TDoA least-squares fix of
//!    the element position from the delays of all anchors.
//! 2. Orientation from averaged differences of consecutive element fixes.
//! 3. Velocity from finite differences of the fixes (several slots) or from a
//!    Doppler least-squares fit (single slot).
//! 4. Reference position by back-propagating every fix through the motion
//!    and the array offset.
//! 5. Offsets as per-anchor mean residuals.
//!
//! With fewer than four anchors no TDoA fix exists and a coarse grid search
//! over reference position and orientation takes its place.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Vector3};

use crate::estimator::{MotionState, Offsets, Problem};
use crate::measurement::MeasurementSet;
use crate::scenario::Scenario;
use crate::{Error, Result, Vec3, SPEED_OF_LIGHT};

/// Smallest accepted ratio of extreme singular values in the TDoA system.
pub const TDOA_MIN_CONDITION: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct InitConfig {
    /// Elements used for the fixes. `None` picks `default_set_size` equally
    /// spaced elements.
    pub index_set: Option<Vec<usize>>,
    pub default_set_size: usize,
    pub fallback: FallbackConfig,
    /// Largest accepted magnitude of an initial clock offset (s).
    pub max_clock_offset: f64,
    /// Largest accepted magnitude of an initial frequency offset (Hz).
    pub max_frequency_offset: f64,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            index_set: None,
            default_set_size: 8,
            fallback: FallbackConfig::default(),
            max_clock_offset: 1e-3,
            max_frequency_offset: 1e5,
        }
    }
}

/// Grid search used when fewer than four anchors are available.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FallbackConfig {
    /// Half width of the search cube around the anchor centroid (m).
    pub half_width: f64,
    /// Grid points per axis.
    pub points_per_axis: usize,
    /// Number of candidate orientations (Fibonacci sphere).
    pub directions: usize,
}

impl Default for FallbackConfig {
    fn default() -> Self {
        Self { half_width: 60.0, points_per_axis: 25, directions: 200 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitEstimate {
    pub position0: Vec3,
    pub velocity: Vec3,
    pub orientation: Vec3,
    pub clock_offsets: Vec<f64>,
    pub frequency_offsets: Vec<f64>,
    /// Element fixes keyed by `(u, k)`.
    pub element_fixes: BTreeMap<(usize, usize), Vec3>,
    pub index_set: Vec<usize>,
}

impl InitEstimate {
    pub fn motion(&self) -> MotionState {
        MotionState { position0: self.position0, velocity: self.velocity, orientation: self.orientation }
    }
}

/// `n` equally spaced element indices spanning the whole array.
pub fn default_index_set(num_elements: usize, n: usize) -> Vec<usize> {
    let n = n.clamp(2, num_elements);
    let mut v: Vec<usize> = (0..n)
        .map(|i| ((i as f64) * (num_elements - 1) as f64 / (n - 1) as f64).round() as usize)
        .collect();
    v.dedup();
    v
}

/// Position of one element from the delays of all anchors in one slot.
///
/// Range differences against anchor 0 remove any delay offset common to all
/// anchors. With five or more anchors the linearized system in `[x, r_0]` is
/// solved by least squares; with four, `x` is expressed through `r_0` and the
/// quadratic `|x(r_0) - a_0| = r_0` picks `r_0`.
pub fn tdoa_element_fix(delays: &[f64], anchors: &[Vec3]) -> Result<Vec3> {
    let nb = anchors.len().max(1);
    let centroid = anchors.iter().fold(Vec3::zeros(), |s, x| s + x) / nb as f64;
    tdoa_candidates(delays, anchors)?
        .into_iter()
        .min_by(|p, q| (p - centroid).norm().total_cmp(&(q - centroid).norm()))
        .ok_or_else(|| Error::Initializer("4-anchor TDoA quadratic has no admissible root".into()))
}

/// All admissible TDoA solutions: one with five or more anchors, one or two
/// with four (the two roots of the range quadratic).
pub fn tdoa_candidates(delays: &[f64], anchors: &[Vec3]) -> Result<Vec<Vec3>> {
    let nb = anchors.len();
    if nb < 4 || delays.len() != nb {
        return Err(Error::Initializer(format!("TDoA fix needs at least 4 anchors, got {nb}")));
    }
    let a0 = anchors[0];
    let r: Vec<f64> = delays.iter().map(|t| (t - delays[0]) * SPEED_OF_LIGHT).collect();
    let m = nb - 1;
    let mut a = DMatrix::zeros(m, 4);
    let mut y = DVector::zeros(m);
    for b in 1..nb {
        let ab = anchors[b];
        let d = r[b];
        let row = 2.0 * (ab - a0);
        a[(b - 1, 0)] = row[0];
        a[(b - 1, 1)] = row[1];
        a[(b - 1, 2)] = row[2];
        a[(b - 1, 3)] = 2.0 * d;
        y[b - 1] = ab.norm_squared() - a0.norm_squared() - d * d;
    }
    // geometry columns alone must be well conditioned
    let geo = a.columns(0, 3).into_owned();
    let cond = column_scaled_condition(&geo);
    if cond < TDOA_MIN_CONDITION {
        return Err(Error::Initializer(format!("TDoA geometry is degenerate (singular-value ratio {cond:e})")));
    }
    if nb >= 5 {
        let cond = column_scaled_condition(&a);
        if cond < TDOA_MIN_CONDITION {
            return Err(Error::Initializer(format!("TDoA system is rank deficient (singular-value ratio {cond:e})")));
        }
        let sol = a.clone().svd(true, true).solve(&y, 0.0).map_err(|e| Error::Initializer(e.to_string()))?;
        return Ok(vec![Vec3::new(sol[0], sol[1], sol[2])]);
    }
    // four anchors: x = x0 + r0 w
    let g3 = geo.fixed_view::<3, 3>(0, 0).into_owned();
    let inv = g3.try_inverse().ok_or_else(|| Error::Initializer("singular 4-anchor TDoA system".into()))?;
    let yv = Vector3::new(y[0], y[1], y[2]);
    let dv = Vector3::new(a[(0, 3)], a[(1, 3)], a[(2, 3)]);
    let x0 = inv * yv;
    let w = -(inv * dv);
    let q = x0 - a0;
    let (qa, qb, qc) = (w.norm_squared() - 1.0, 2.0 * q.dot(&w), q.norm_squared());
    let mut roots = Vec::new();
    if qa.abs() < 1e-14 {
        if qb != 0.0 {
            roots.push(-qc / qb);
        }
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        let disc = if disc < 0.0 { 0.0 } else { disc };
        roots.push((-qb + disc.sqrt()) / (2.0 * qa));
        roots.push((-qb - disc.sqrt()) / (2.0 * qa));
    }
    let out: Vec<Vec3> = roots.into_iter().filter(|r0| *r0 >= 0.0).map(|r0| x0 + r0 * w).collect();
    if out.is_empty() {
        return Err(Error::Initializer("4-anchor TDoA quadratic has no admissible root".into()));
    }
    Ok(out)
}

/// Picks one candidate per element so that the fixes of one slot sit at the
/// known mutual distances along the array. Each candidate of the first
/// element is tried as an anchor point; every other element then takes its
/// candidate with the best distance match, and the hypothesis with the
/// smallest total mismatch wins.
fn pick_consistent(cands: &[(f64, Vec<Vec3>)]) -> Vec<Vec3> {
    let (o0, first) = &cands[0];
    let mut best: Option<(f64, Vec<Vec3>)> = None;
    for a in first {
        let mut total = 0.0;
        let mut chosen = vec![*a];
        for (o, cs) in &cands[1..] {
            let want = (o - o0).abs();
            let (err, c) = cs
                .iter()
                .map(|c| (((c - a).norm() - want).abs(), *c))
                .min_by(|x, y| x.0.total_cmp(&y.0))
                .expect("candidate lists are non-empty");
            total += err;
            chosen.push(c);
        }
        if best.as_ref().is_none_or(|b| total < b.0) {
            best = Some((total, chosen));
        }
    }
    best.expect("first element has a candidate").1
}

fn column_scaled_condition(a: &DMatrix<f64>) -> f64 {
    let mut s = a.clone();
    for mut c in s.column_iter_mut() {
        let n = c.norm();
        if n > 0.0 {
            c /= n;
        }
    }
    let sv = s.singular_values();
    let max = sv.max();
    if max == 0.0 {
        0.0
    } else {
        sv.min() / max
    }
}

/// Averaged consecutive-element differences, normalized, with the sign fixed
/// so that the result points from the lowest to the highest element index.
pub fn orientation_init(fixes: &BTreeMap<(usize, usize), Vec3>, index_set: &[usize], num_slots: usize) -> Result<Vec3> {
    if index_set.len() < 2 {
        return Err(Error::Initializer("orientation needs at least two elements".into()));
    }
    let mut s = Vec3::zeros();
    let norm = (num_slots * index_set.len()) as f64;
    for k in 0..num_slots {
        for w in index_set.windows(2) {
            s += (fixes[&(w[1], k)] - fixes[&(w[0], k)]) / norm;
        }
    }
    let lo = *index_set.iter().min().unwrap();
    let hi = *index_set.iter().max().unwrap();
    let mut axis = Vec3::zeros();
    for k in 0..num_slots {
        axis += fixes[&(hi, k)] - fixes[&(lo, k)];
    }
    let n = s.norm();
    if !(n > 0.0) {
        return Err(Error::Initializer("orientation average has zero length".into()));
    }
    let s = s / n;
    Ok(if s.dot(&axis) < 0.0 { -s } else { s })
}

/// Velocity from finite differences of the fixes across consecutive slots.
pub fn velocity_from_fixes(fixes: &BTreeMap<(usize, usize), Vec3>, index_set: &[usize], num_slots: usize, slot_spacing: f64) -> Result<Vec3> {
    if num_slots < 2 {
        return Err(Error::Initializer("finite-difference velocity needs two slots".into()));
    }
    let norm = (num_slots - 1) as f64 * slot_spacing * index_set.len() as f64;
    let mut v = Vec3::zeros();
    for &i in index_set {
        for k in 1..num_slots {
            v += (fixes[&(i, k)] - fixes[&(i, k - 1)]) / norm;
        }
    }
    Ok(v)
}

/// Single-slot velocity from Dopplers by least squares.
///
/// Each `(anchor, element)` pair contributes the row `-Delta` with right-hand
/// side `c (1 - f_hat / f_c) - Delta . v_b`, the radial speed in m/s after
/// compensating the known anchor velocity. Frequency offsets are ignored.
pub fn velocity_from_doppler(
    meas: &MeasurementSet,
    scenario: &Scenario,
    element_positions: &[(usize, Vec3)],
) -> Result<Vec3> {
    let fc = scenario.waveform.carrier_frequency;
    let rows = scenario.anchors.len() * element_positions.len();
    let mut e = DMatrix::zeros(rows, 3);
    let mut f = DVector::zeros(rows);
    let mut r = 0;
    for (b, a) in scenario.anchors.iter().enumerate() {
        let pb = a.position(0, scenario.plan.slot_spacing);
        for &(u, p) in element_positions {
            let d = pb - p;
            let dn = d.norm();
            if dn < crate::scenario::MIN_DISTANCE {
                return Err(Error::Initializer("element fix coincides with an anchor".into()));
            }
            let dir = d / dn;
            let i = meas.index(b, u, 0);
            let radial = -SPEED_OF_LIGHT * (meas.doppler_meas[i] - fc) / fc;
            e[(r, 0)] = -dir[0];
            e[(r, 1)] = -dir[1];
            e[(r, 2)] = -dir[2];
            f[r] = radial - dir.dot(&a.velocity_per_slot[0]);
            r += 1;
        }
    }
    let ete = e.transpose() * &e;
    let cond = column_scaled_condition(&e);
    if cond < TDOA_MIN_CONDITION {
        return Err(Error::Initializer(format!("Doppler velocity system is singular (ratio {cond:e})")));
    }
    let sol = ete
        .cholesky()
        .ok_or_else(|| Error::Initializer("Doppler normal equations are not positive definite".into()))?
        .solve(&(e.transpose() * f));
    Ok(Vec3::new(sol[0], sol[1], sol[2]))
}

/// Reference position from all fixes corrected for motion and array offset.
pub fn position_init(
    fixes: &BTreeMap<(usize, usize), Vec3>,
    velocity: &Vec3,
    orientation: &Vec3,
    scenario: &Scenario,
) -> Vec3 {
    let lambda = scenario.wavelength();
    let mut p = Vec3::zeros();
    for (&(u, k), x) in fixes {
        let off = scenario.offset_convention.factor(&scenario.array, lambda, u);
        p += x - scenario.plan.time(k) * velocity - off * orientation;
    }
    p / fixes.len() as f64
}

/// Per-anchor mean delay and Doppler residuals at the given motion state.
pub fn offset_init(meas: &MeasurementSet, scenario: &Scenario, state: &MotionState) -> Result<Offsets> {
    let problem = Problem::new(scenario, meas)?;
    let pred = problem.predict(state)?;
    let nb = scenario.anchors.len();
    let n = meas.len() / nb.max(1);
    let fc = meas.carrier_frequency;
    let mut o = Offsets::zeros(nb);
    for b in 0..nb {
        for i in b * n..(b + 1) * n {
            o.clock[b] += (meas.delay_meas[i] - pred.delay[i]) / n as f64;
            o.frequency[b] += ((meas.doppler_meas[i] - fc) - pred.doppler_dev[i]) / n as f64;
        }
    }
    Ok(o)
}

/// Runs the whole initializer.
pub fn initialize(meas: &MeasurementSet, scenario: &Scenario, cfg: &InitConfig) -> Result<InitEstimate> {
    let nu = scenario.array.num_elements;
    let index_set = match &cfg.index_set {
        Some(s) => s.clone(),
        None => default_index_set(nu, cfg.default_set_size),
    };
    if index_set.len() < 2 || index_set.iter().any(|&u| u >= nu) {
        return Err(Error::Config("index set needs at least two valid elements".into()));
    }
    let est = if scenario.anchors.len() >= 4 {
        tdoa_initialize(meas, scenario, &index_set)?
    } else {
        fallback_initialize(meas, scenario, &index_set, &cfg.fallback)?
    };
    let offsets = offset_init(meas, scenario, &est.0)?;
    let out = InitEstimate {
        position0: est.0.position0,
        velocity: est.0.velocity,
        orientation: est.0.orientation,
        clock_offsets: offsets.clock,
        frequency_offsets: offsets.frequency,
        element_fixes: est.1,
        index_set,
    };
    check_handoff(&out, cfg)?;
    Ok(out)
}

fn check_handoff(e: &InitEstimate, cfg: &InitConfig) -> Result<()> {
    let m = e.motion();
    if !m.is_finite() || (e.orientation.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::Initializer("initial state is not finite or not unit-norm".into()));
    }
    if e.clock_offsets.iter().any(|x| !(x.abs() <= cfg.max_clock_offset))
        || e.frequency_offsets.iter().any(|x| !(x.abs() <= cfg.max_frequency_offset))
    {
        return Err(Error::Initializer("initial offsets outside the plausibility window".into()));
    }
    Ok(())
}

type Fixes = BTreeMap<(usize, usize), Vec3>;

fn tdoa_initialize(meas: &MeasurementSet, scenario: &Scenario, index_set: &[usize]) -> Result<(MotionState, Fixes)> {
    let nk = scenario.plan.num_slots;
    let dt = scenario.plan.slot_spacing;
    let mut fixes = BTreeMap::new();
    for k in 0..nk {
        let anchors: Vec<Vec3> = scenario.anchors.iter().map(|a| a.position(k, dt)).collect();
        let lambda = scenario.wavelength();
        let cands = index_set
            .iter()
            .map(|&u| {
                let delays: Vec<f64> = (0..anchors.len()).map(|b| meas.delay_meas[meas.index(b, u, k)]).collect();
                let off = scenario.offset_convention.factor(&scenario.array, lambda, u);
                Ok((off, tdoa_candidates(&delays, &anchors)?))
            })
            .collect::<Result<Vec<_>>>()?;
        for (&u, x) in index_set.iter().zip(pick_consistent(&cands)) {
            fixes.insert((u, k), x);
        }
    }
    let orientation = orientation_init(&fixes, index_set, nk)?;
    let velocity = if nk >= 2 {
        velocity_from_fixes(&fixes, index_set, nk, dt)?
    } else {
        let pts: Vec<(usize, Vec3)> = index_set.iter().map(|&u| (u, fixes[&(u, 0)])).collect();
        velocity_from_doppler(meas, scenario, &pts)?
    };
    let position0 = position_init(&fixes, &velocity, &orientation, scenario);
    Ok((MotionState { position0, velocity, orientation }, fixes))
}

fn fibonacci_sphere(n: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let th = golden * i as f64;
            Vec3::new(r * th.cos(), r * th.sin(), z)
        })
        .collect()
}

/// Cost of element-differenced first-slot delays, which do not depend on
/// the clock offsets.
fn differenced_cost(meas: &MeasurementSet, scenario: &Scenario, index_set: &[usize], p: &Vec3, s: &Vec3) -> f64 {
    let uref = scenario.array.reference_index;
    let mut c = 0.0;
    for (b, a) in scenario.anchors.iter().enumerate() {
        let pb = a.initial_position;
        let dref = (pb - (p + scenario.array.offset(uref) * s)).norm();
        let mref = meas.delay_meas[meas.index(b, uref, 0)];
        for &u in index_set {
            let d = (pb - (p + scenario.array.offset(u) * s)).norm();
            let m = meas.delay_meas[meas.index(b, u, 0)] - mref;
            let r = m - (d - dref) / SPEED_OF_LIGHT;
            c += r * r;
        }
    }
    c
}

fn fallback_initialize(
    meas: &MeasurementSet,
    scenario: &Scenario,
    index_set: &[usize],
    cfg: &FallbackConfig,
) -> Result<(MotionState, Fixes)> {
    let nb = scenario.anchors.len();
    if nb == 0 {
        return Err(Error::Initializer("no anchors".into()));
    }
    let mut set: Vec<usize> = index_set.to_vec();
    if !set.contains(&scenario.array.reference_index) {
        set.push(scenario.array.reference_index);
    }
    let centroid = scenario.anchors.iter().fold(Vec3::zeros(), |s, a| s + a.initial_position) / nb as f64;
    let dirs = fibonacci_sphere(cfg.directions.max(2));
    let n = cfg.points_per_axis.max(2);
    let step = 2.0 * cfg.half_width / (n - 1) as f64;
    let mut best = (f64::INFINITY, Vec3::zeros(), dirs[0]);
    for ix in 0..n {
        for iy in 0..n {
            for iz in 0..n {
                let p = centroid + Vec3::new(ix as f64, iy as f64, iz as f64) * step - Vec3::repeat(cfg.half_width);
                if scenario.anchors.iter().any(|a| (a.initial_position - p).norm() < 1e-3) {
                    continue;
                }
                for s in &dirs {
                    let c = differenced_cost(meas, scenario, &set, &p, s);
                    if c < best.0 {
                        best = (c, p, *s);
                    }
                }
            }
        }
    }
    // compass search over position and orientation
    let (mut c, mut p, mut s) = best;
    let mut hp = step / 2.0;
    let mut hs = 0.5;
    while hp > 1e-9 || hs > 1e-10 {
        let mut improved = false;
        for axis in 0..3 {
            for sign in [-1.0, 1.0] {
                let mut q = p;
                q[axis] += sign * hp;
                let cq = differenced_cost(meas, scenario, &set, &q, &s);
                if cq < c {
                    (c, p, improved) = (cq, q, true);
                }
            }
        }
        let t = householder_basis(&s);
        for col in t {
            for sign in [-1.0, 1.0] {
                let cand = crate::estimator::manifold::retract(&s, &(sign * hs * col)).normalize();
                let cq = differenced_cost(meas, scenario, &set, &p, &cand);
                if cq < c {
                    (c, s, improved) = (cq, cand, true);
                }
            }
        }
        if !improved {
            hp *= 0.5;
            hs *= 0.5;
        }
    }
    let pts: Vec<(usize, Vec3)> = set.iter().map(|&u| (u, p + scenario.array.offset(u) * s)).collect();
    let velocity = velocity_from_doppler(meas, scenario, &pts).unwrap_or_else(|_| Vec3::zeros());
    let fixes = pts.into_iter().map(|(u, x)| ((u, 0), x)).collect();
    Ok((MotionState { position0: p, velocity, orientation: s }, fixes))
}

fn householder_basis(s: &Vec3) -> [Vec3; 2] {
    let b = crate::linalg::householder_tangent(s);
    [b.column(0).into_owned(), b.column(1).into_owned()]
}
