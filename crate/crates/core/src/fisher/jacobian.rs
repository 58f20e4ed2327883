use nalgebra::{DMatrix, Matrix3, SVector};

use crate::scenario::{GeometryTable, Scenario};
use crate::{Error, Result, SPEED_OF_LIGHT};

pub type Grad9 = SVector<f64, 9>;

/// Gradients of the geometric delay, Doppler frequency and gain of one triple
/// with respect to `[p; v; s]`. Offsets enter with unit derivatives and are
/// not part of these vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleGradient {
    pub delay: Grad9,
    pub doppler: Grad9,
    pub gain: Grad9,
}

pub fn triple_gradient(scenario: &Scenario, geometry: &GeometryTable, b: usize, u: usize, k: usize) -> TripleGradient {
    let i = geometry.index(b, u, k);
    let fc = scenario.waveform.carrier_frequency;
    let lambda = scenario.wavelength();
    let alpha = scenario.pathloss_exponent;
    let tk = scenario.plan.time(k);
    let off = scenario.offset_convention.factor(&scenario.array, lambda, u);
    gradient_from_geometry(
        geometry.distance[i],
        &geometry.unit_dir[i],
        &geometry.rel_velocity[i],
        tk,
        off,
        fc,
        lambda,
        alpha,
    )
}

#[allow(clippy::too_many_arguments)]
pub fn gradient_from_geometry(
    d: f64,
    dir: &crate::Vec3,
    vrel: &crate::Vec3,
    tk: f64,
    off: f64,
    fc: f64,
    lambda: f64,
    alpha: f64,
) -> TripleGradient {
    let c = SPEED_OF_LIGHT;
    let proj = Matrix3::identity() - dir * dir.transpose();
    let pv = proj * vrel / d;
    let gt = -dir / c;
    let gf_p = (fc / c) * pv;
    let gb = alpha * lambda * d.powf(-alpha - 1.0) / (4.0 * std::f64::consts::PI) * dir;
    let mut delay = Grad9::zeros();
    let mut doppler = Grad9::zeros();
    let mut gain = Grad9::zeros();
    delay.fixed_rows_mut::<3>(0).copy_from(&gt);
    delay.fixed_rows_mut::<3>(3).copy_from(&(tk * gt));
    delay.fixed_rows_mut::<3>(6).copy_from(&(off * gt));
    doppler.fixed_rows_mut::<3>(0).copy_from(&gf_p);
    doppler.fixed_rows_mut::<3>(3).copy_from(&((fc / c) * (dir + tk * pv)));
    doppler.fixed_rows_mut::<3>(6).copy_from(&(off * gf_p));
    gain.fixed_rows_mut::<3>(0).copy_from(&gb);
    gain.fixed_rows_mut::<3>(3).copy_from(&(tk * gb));
    gain.fixed_rows_mut::<3>(6).copy_from(&(off * gb));
    TripleGradient { delay, doppler, gain }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KappaParam {
    Position(usize),
    Velocity(usize),
    Orientation(usize),
    ClockOffset(usize),
    FrequencyOffset(usize),
    Gain { b: usize, u: usize, k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EtaParam {
    Delay { b: usize, u: usize, k: usize },
    Doppler { b: usize, u: usize, k: usize },
    Gain { b: usize, u: usize, k: usize },
    ClockOffset(usize),
    FrequencyOffset(usize),
}

/// `d eta / d kappa`, shape `dim(kappa) x dim(eta)`.
///
/// The delay and Doppler columns of `eta` are the geometric parts; the clock
/// and frequency offsets of `kappa` map one-to-one onto the offset entries of
/// `eta`, whose coupling to the delays and Dopplers lives in the channel FIM.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformJacobian {
    pub matrix: DMatrix<f64>,
    pub kappa: Vec<KappaParam>,
    pub eta: Vec<EtaParam>,
}

impl TransformJacobian {
    pub fn kappa_index(&self, p: KappaParam) -> Option<usize> {
        self.kappa.iter().position(|&q| q == p)
    }

    /// Checks that every column and row carries a distinct label and that
    /// each channel parameter owns exactly the derivative entries the model
    /// allows: motion gradients for delays and Dopplers, motion gradients
    /// plus one unit entry for gains, one unit entry for each offset.
    pub fn audit(&self) -> Result<()> {
        if self.matrix.nrows() != self.kappa.len() || self.matrix.ncols() != self.eta.len() {
            return Err(Error::Contract("jacobian labels do not match its shape".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for p in &self.kappa {
            if !seen.insert(format!("{p:?}")) {
                return Err(Error::Contract(format!("duplicate kappa label {p:?}")));
            }
        }
        seen.clear();
        for p in &self.eta {
            if !seen.insert(format!("{p:?}")) {
                return Err(Error::Contract(format!("duplicate eta label {p:?}")));
            }
        }
        for (j, e) in self.eta.iter().enumerate() {
            let col = self.matrix.column(j);
            let owner = match *e {
                EtaParam::Delay { .. } | EtaParam::Doppler { .. } => None,
                EtaParam::Gain { b, u, k } => Some(KappaParam::Gain { b, u, k }),
                EtaParam::ClockOffset(b) => Some(KappaParam::ClockOffset(b)),
                EtaParam::FrequencyOffset(b) => Some(KappaParam::FrequencyOffset(b)),
            };
            let motion_only = matches!(e, EtaParam::Delay { .. } | EtaParam::Doppler { .. } | EtaParam::Gain { .. });
            for (r, kp) in self.kappa.iter().enumerate() {
                let v = col[r];
                let is_motion = matches!(kp, KappaParam::Position(_) | KappaParam::Velocity(_) | KappaParam::Orientation(_));
                if Some(*kp) == owner {
                    if v != 1.0 {
                        return Err(Error::Contract(format!("{e:?} must have unit derivative on {kp:?}")));
                    }
                } else if !(is_motion && motion_only) && v != 0.0 {
                    return Err(Error::Contract(format!("{e:?} has a stray derivative on {kp:?}")));
                }
            }
            if let Some(o) = owner {
                if !self.kappa.contains(&o) {
                    return Err(Error::Contract(format!("{e:?} has no kappa owner")));
                }
            }
        }
        Ok(())
    }
}

pub fn jacobian(scenario: &Scenario, geometry: &GeometryTable) -> TransformJacobian {
    let (nb, nu, nk) = (geometry.num_anchors, geometry.num_elements, geometry.num_slots);
    let n = nu * nk;
    let mut kappa = Vec::new();
    kappa.extend((0..3).map(KappaParam::Position));
    kappa.extend((0..3).map(KappaParam::Velocity));
    kappa.extend((0..3).map(KappaParam::Orientation));
    kappa.extend((0..nb).map(KappaParam::ClockOffset));
    kappa.extend((0..nb).map(KappaParam::FrequencyOffset));
    for b in 0..nb {
        for k in 0..nk {
            for u in 0..nu {
                kappa.push(KappaParam::Gain { b, u, k });
            }
        }
    }
    let mut eta = Vec::new();
    for b in 0..nb {
        for f in [
            (|b, u, k| EtaParam::Delay { b, u, k }) as fn(usize, usize, usize) -> EtaParam,
            |b, u, k| EtaParam::Doppler { b, u, k },
            |b, u, k| EtaParam::Gain { b, u, k },
        ] {
            for k in 0..nk {
                for u in 0..nu {
                    eta.push(f(b, u, k));
                }
            }
        }
        eta.push(EtaParam::ClockOffset(b));
        eta.push(EtaParam::FrequencyOffset(b));
    }
    let mut m = DMatrix::zeros(kappa.len(), eta.len());
    let block = 3 * n + 2;
    for b in 0..nb {
        let c0 = b * block;
        for k in 0..nk {
            for u in 0..nu {
                let j = k * nu + u;
                let g = triple_gradient(scenario, geometry, b, u, k);
                for r in 0..9 {
                    m[(r, c0 + j)] = g.delay[r];
                    m[(r, c0 + n + j)] = g.doppler[r];
                    m[(r, c0 + 2 * n + j)] = g.gain[r];
                }
                m[(9 + 2 * nb + b * n + j, c0 + 2 * n + j)] = 1.0;
            }
        }
        m[(9 + b, c0 + 3 * n)] = 1.0;
        m[(9 + nb + b, c0 + 3 * n + 1)] = 1.0;
    }
    TransformJacobian { matrix: m, kappa, eta }
}
