use nalgebra::{DMatrix, DVector, Vector3};

use crate::fisher::{Grad9, TripleGradient};
use crate::measurement::MeasurementSet;
use crate::scenario::{build_geometry, GeometryTable, ReceiverTruth, Scenario};
use crate::{Error, Result, Vec3, SPEED_OF_LIGHT};

/// Candidate receiver motion state `[p; v; s]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionState {
    pub position0: Vec3,
    pub velocity: Vec3,
    pub orientation: Vec3,
}

impl MotionState {
    pub fn from_truth(r: &ReceiverTruth) -> Self {
        Self { position0: r.position0, velocity: r.velocity, orientation: r.orientation }
    }

    pub fn is_finite(&self) -> bool {
        self.position0.iter().chain(self.velocity.iter()).chain(self.orientation.iter()).all(|x| x.is_finite())
    }
}

/// Per-anchor clock and frequency offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct Offsets {
    pub clock: Vec<f64>,
    pub frequency: Vec<f64>,
}

impl Offsets {
    pub fn zeros(nb: usize) -> Self {
        Self { clock: vec![0.0; nb], frequency: vec![0.0; nb] }
    }
}

/// Parameter blocks of the ML cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    Position,
    Velocity,
    Offsets,
    Orientation,
}

/// Model predictions at a motion state, without offsets.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub geometry: GeometryTable,
    /// `d / c`.
    pub delay: Vec<f64>,
    /// `-f_c nu`.
    pub doppler_dev: Vec<f64>,
}

/// Negative log-likelihood of the delay and Doppler measurements, with the
/// known anchor kinematics taken from `scenario`. Anchor offsets stored in
/// the scenario are ignored.
pub struct Problem<'a> {
    pub scenario: &'a Scenario,
    pub meas: &'a MeasurementSet,
    w_tau: Vec<f64>,
    w_f: Vec<f64>,
    /// `f_hat - f_c`.
    f_dev: Vec<f64>,
}

impl<'a> Problem<'a> {
    pub fn new(scenario: &'a Scenario, meas: &'a MeasurementSet) -> Result<Self> {
        let n = scenario.anchors.len() * scenario.array.num_elements * scenario.plan.num_slots;
        if meas.len() != n {
            return Err(Error::Contract(format!("measurement set has {} triples, scenario has {n}", meas.len())));
        }
        let fc = scenario.waveform.carrier_frequency;
        let mut w_tau = Vec::with_capacity(n);
        let mut w_f = Vec::with_capacity(n);
        for i in 0..n {
            let (st, sd) = (meas.noise.tau(i), meas.noise.doppler(i));
            if !(st > 0.0 && sd > 0.0) {
                return Err(Error::Contract("measurement sigmas must be positive".into()));
            }
            w_tau.push(1.0 / (st * st));
            w_f.push(1.0 / (sd * sd));
        }
        let f_dev = meas.doppler_meas.iter().map(|f| f - fc).collect();
        Ok(Self { scenario, meas, w_tau, w_f, f_dev })
    }

    pub fn num_anchors(&self) -> usize {
        self.scenario.anchors.len()
    }

    fn per_anchor(&self) -> usize {
        self.scenario.array.num_elements * self.scenario.plan.num_slots
    }

    pub fn predict(&self, s: &MotionState) -> Result<Prediction> {
        let r = ReceiverTruth { position0: s.position0, velocity: s.velocity, orientation: s.orientation };
        let g = build_geometry(&self.scenario.anchors, &r, &self.scenario.array, &self.scenario.plan)?;
        let fc = self.scenario.waveform.carrier_frequency;
        let delay = g.distance.iter().map(|d| d / SPEED_OF_LIGHT).collect();
        let doppler_dev = g
            .rel_velocity
            .iter()
            .zip(&g.unit_dir)
            .map(|(v, e)| -fc * v.dot(e) / SPEED_OF_LIGHT)
            .collect();
        Ok(Prediction { geometry: g, delay, doppler_dev })
    }

    /// Delay and Doppler residuals `measurement - model`.
    pub fn residuals(&self, p: &Prediction, o: &Offsets) -> (Vec<f64>, Vec<f64>) {
        let n = self.per_anchor();
        let rt = (0..self.meas.len()).map(|i| self.meas.delay_meas[i] - p.delay[i] - o.clock[i / n]).collect();
        let rf = (0..self.meas.len()).map(|i| self.f_dev[i] - p.doppler_dev[i] - o.frequency[i / n]).collect();
        (rt, rf)
    }

    pub fn cost_of(&self, p: &Prediction, o: &Offsets) -> f64 {
        let (rt, rf) = self.residuals(p, o);
        0.5 * (0..rt.len()).map(|i| self.w_tau[i] * rt[i] * rt[i] + self.w_f[i] * rf[i] * rf[i]).sum::<f64>()
    }

    /// Cost at `(s, o)`; `+inf` when the geometry degenerates.
    pub fn cost(&self, s: &MotionState, o: &Offsets) -> f64 {
        match self.predict(s) {
            Ok(p) => self.cost_of(&p, o),
            Err(_) => f64::INFINITY,
        }
    }

    /// Offsets minimizing the cost for fixed motion: weighted mean residuals.
    pub fn optimal_offsets(&self, p: &Prediction) -> Offsets {
        let n = self.per_anchor();
        let nb = self.num_anchors();
        let mut o = Offsets::zeros(nb);
        for b in 0..nb {
            let (mut st, mut wt, mut sf, mut wf) = (0.0, 0.0, 0.0, 0.0);
            for i in b * n..(b + 1) * n {
                st += self.w_tau[i] * (self.meas.delay_meas[i] - p.delay[i]);
                wt += self.w_tau[i];
                sf += self.w_f[i] * (self.f_dev[i] - p.doppler_dev[i]);
                wf += self.w_f[i];
            }
            o.clock[b] = st / wt;
            o.frequency[b] = sf / wf;
        }
        o
    }

    /// Cost with offsets profiled out, and the optimal offsets.
    pub fn profiled_cost(&self, s: &MotionState) -> (f64, Option<Offsets>) {
        match self.predict(s) {
            Ok(p) => {
                let o = self.optimal_offsets(&p);
                (self.cost_of(&p, &o), Some(o))
            }
            Err(_) => (f64::INFINITY, None),
        }
    }

    pub(crate) fn gradients(&self, p: &Prediction) -> Vec<TripleGradient> {
        let sc = self.scenario;
        let fc = sc.waveform.carrier_frequency;
        let lambda = sc.wavelength();
        let g = &p.geometry;
        let mut out = Vec::with_capacity(g.len());
        for b in 0..g.num_anchors {
            for k in 0..g.num_slots {
                for u in 0..g.num_elements {
                    let i = g.index(b, u, k);
                    out.push(crate::fisher::gradient_from_geometry(
                        g.distance[i],
                        &g.unit_dir[i],
                        &g.rel_velocity[i],
                        sc.plan.time(k),
                        sc.array.offset(u),
                        fc,
                        lambda,
                        sc.pathloss_exponent,
                    ));
                }
            }
        }
        out
    }

    /// Gradient of the cost with respect to one block at fixed offsets.
    /// Motion blocks return 3 entries; the offsets block returns
    /// `[d/d delta_b ..., d/d epsilon_b ...]`.
    pub fn block_gradient(&self, s: &MotionState, o: &Offsets, block: Block) -> Result<DVector<f64>> {
        let p = self.predict(s)?;
        let (rt, rf) = self.residuals(&p, o);
        Ok(self.block_gradient_at(&p, &rt, &rf, block))
    }

    pub(crate) fn block_gradient_at(&self, p: &Prediction, rt: &[f64], rf: &[f64], block: Block) -> DVector<f64> {
        match block {
            Block::Offsets => {
                let n = self.per_anchor();
                let nb = self.num_anchors();
                let mut g = DVector::zeros(2 * nb);
                for i in 0..rt.len() {
                    g[i / n] -= self.w_tau[i] * rt[i];
                    g[nb + i / n] -= self.w_f[i] * rf[i];
                }
                g
            }
            _ => {
                let off = block_offset(block);
                let grads = self.gradients(p);
                let mut g = Vector3::zeros();
                for (i, tg) in grads.iter().enumerate() {
                    g -= self.w_tau[i] * rt[i] * rows3(&tg.delay, off) + self.w_f[i] * rf[i] * rows3(&tg.doppler, off);
                }
                DVector::from_column_slice(g.as_slice())
            }
        }
    }

    /// Gauss-Newton normal matrix of a motion block. With `project` set, the
    /// per-anchor weighted means are removed from the Jacobian rows, which is
    /// the curvature of the cost with offsets profiled out.
    pub(crate) fn block_normal_matrix(&self, p: &Prediction, block: Block, project: bool) -> DMatrix<f64> {
        let off = block_offset(block);
        let grads = self.gradients(p);
        let n = self.per_anchor();
        let mut h = nalgebra::Matrix3::zeros();
        for b in 0..self.num_anchors() {
            let (mut mt, mut wt, mut mf, mut wf) = (Vector3::zeros(), 0.0, Vector3::zeros(), 0.0);
            for i in b * n..(b + 1) * n {
                let jt = rows3(&grads[i].delay, off);
                let jf = rows3(&grads[i].doppler, off);
                h += self.w_tau[i] * jt * jt.transpose() + self.w_f[i] * jf * jf.transpose();
                mt += self.w_tau[i] * jt;
                wt += self.w_tau[i];
                mf += self.w_f[i] * jf;
                wf += self.w_f[i];
            }
            if project {
                h -= mt * mt.transpose() / wt + mf * mf.transpose() / wf;
            }
        }
        DMatrix::from_column_slice(3, 3, h.as_slice())
    }

    /// Gauss-Newton normal matrix and gradient over all nine motion
    /// parameters `[p; v; s]`, projected like [`Self::block_normal_matrix`].
    pub(crate) fn motion_normal_system(
        &self,
        p: &Prediction,
        rt: &[f64],
        rf: &[f64],
        project: bool,
    ) -> (nalgebra::SMatrix<f64, 9, 9>, nalgebra::SVector<f64, 9>) {
        let grads = self.gradients(p);
        let n = self.per_anchor();
        let mut h = nalgebra::SMatrix::<f64, 9, 9>::zeros();
        let mut g = nalgebra::SVector::<f64, 9>::zeros();
        for b in 0..self.num_anchors() {
            let (mut mt, mut wt, mut mf, mut wf) =
                (nalgebra::SVector::<f64, 9>::zeros(), 0.0, nalgebra::SVector::<f64, 9>::zeros(), 0.0);
            for i in b * n..(b + 1) * n {
                let (jt, jf) = (&grads[i].delay, &grads[i].doppler);
                h += self.w_tau[i] * jt * jt.transpose() + self.w_f[i] * jf * jf.transpose();
                g -= self.w_tau[i] * rt[i] * jt + self.w_f[i] * rf[i] * jf;
                mt += self.w_tau[i] * jt;
                wt += self.w_tau[i];
                mf += self.w_f[i] * jf;
                wf += self.w_f[i];
            }
            if project {
                h -= mt * mt.transpose() / wt + mf * mf.transpose() / wf;
            }
        }
        (h, g)
    }

    /// Diagonal Gauss-Newton curvature of the offsets block.
    pub(crate) fn offsets_curvature(&self) -> DVector<f64> {
        let n = self.per_anchor();
        let nb = self.num_anchors();
        let mut d = DVector::zeros(2 * nb);
        for i in 0..self.meas.len() {
            d[i / n] += self.w_tau[i];
            d[nb + i / n] += self.w_f[i];
        }
        d
    }
}

fn block_offset(block: Block) -> usize {
    match block {
        Block::Position => 0,
        Block::Velocity => 3,
        Block::Orientation => 6,
        Block::Offsets => unreachable!("offsets are not a motion block"),
    }
}

fn rows3(g: &Grad9, off: usize) -> Vector3<f64> {
    Vector3::new(g[off], g[off + 1], g[off + 2])
}
