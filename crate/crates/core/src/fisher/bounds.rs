use nalgebra::{DMatrix, Matrix2, Vector2, Vector3};
use rayon::prelude::*;

use super::entries::{assemble_channel_fim, triple_fim, ChannelFim};
use super::jacobian::{triple_gradient, KappaParam, TransformJacobian};
use super::{FimOptions, NuisanceSet};
use crate::channel::{compute_channel, noise_psd_for_snr, ChannelParams};
use crate::linalg::{scaled_pinv, scaled_rank, scaled_spd_inverse, tangent_basis, RANK_REL_TOL};
use crate::scenario::{GeometryTable, Scenario};
use crate::waveform::{compute_stats, Quadrature, WaveformStats};
use crate::{Error, Result, Vec3};

fn schur(a: &DMatrix<f64>, keep: &[usize], nuisance: &[usize]) -> DMatrix<f64> {
    let a11 = a.select_rows(keep).select_columns(keep);
    if nuisance.is_empty() {
        return a11;
    }
    let a12 = a.select_rows(keep).select_columns(nuisance);
    let a22 = a.select_rows(nuisance).select_columns(nuisance);
    let mut out = &a11 - &a12 * scaled_pinv(&a22) * a12.transpose();
    crate::linalg::symmetrize(&mut out);
    out
}

/// Dense motion-parameter FIM `T J_eta T^T` restricted to `kappa_1` plus the
/// nuisance entries selected by `nuisance`. Returns the matrix and the number
/// of motion rows (always 9, first).
pub fn kappa_fim(channel_fim: &ChannelFim, jac: &TransformJacobian, nuisance: &NuisanceSet) -> DMatrix<f64> {
    let keep = kappa_rows(jac, nuisance);
    let t = jac.matrix.select_rows(&keep);
    let mut j = &t * channel_fim.dense() * t.transpose();
    crate::linalg::symmetrize(&mut j);
    j
}

fn kappa_rows(jac: &TransformJacobian, nuisance: &NuisanceSet) -> Vec<usize> {
    jac.kappa
        .iter()
        .enumerate()
        .filter(|(_, p)| match p {
            KappaParam::Position(_) | KappaParam::Velocity(_) | KappaParam::Orientation(_) => true,
            KappaParam::ClockOffset(_) => nuisance.clock_offsets,
            KappaParam::FrequencyOffset(_) => nuisance.frequency_offsets,
            KappaParam::Gain { .. } => nuisance.gains,
        })
        .map(|(i, _)| i)
        .collect()
}

/// Equivalent FIM of `[p; v; s]` from the dense channel FIM and Jacobian.
/// Parameters outside `nuisance` are treated as known.
pub fn efim(channel_fim: &ChannelFim, jac: &TransformJacobian, nuisance: &NuisanceSet) -> DMatrix<f64> {
    let j = kappa_fim(channel_fim, jac, nuisance);
    let keep: Vec<usize> = (0..9).collect();
    let rest: Vec<usize> = (9..j.nrows()).collect();
    schur(&j, &keep, &rest)
}

/// Equivalent FIM of `[p; v; s]` computed anchor by anchor, without forming
/// the dense channel FIM. Agrees with [`efim`] and scales to large arrays.
pub fn efim_structured(
    scenario: &Scenario,
    geometry: &GeometryTable,
    channel: &ChannelParams,
    stats: &WaveformStats,
    opts: &FimOptions,
    nuisance: &NuisanceSet,
) -> DMatrix<f64> {
    let nb = geometry.num_anchors;
    let blocks: Vec<DMatrix<f64>> = (0..nb)
        .into_par_iter()
        .map(|b| anchor_efim(scenario, geometry, channel, stats, opts, nuisance, b))
        .collect();
    let mut out = DMatrix::zeros(9, 9);
    for blk in &blocks {
        out += blk;
    }
    crate::linalg::symmetrize(&mut out);
    out
}

fn anchor_efim(
    scenario: &Scenario,
    geometry: &GeometryTable,
    channel: &ChannelParams,
    stats: &WaveformStats,
    opts: &FimOptions,
    nuisance: &NuisanceSet,
    b: usize,
) -> DMatrix<f64> {
    let mut a = DMatrix::<f64>::zeros(11, 11);
    for k in 0..geometry.num_slots {
        for u in 0..geometry.num_elements {
            let i = geometry.index(b, u, k);
            let f = triple_fim(channel, stats, opts, i);
            let g = triple_gradient(scenario, geometry, b, u, k);
            let mut gt = nalgebra::SVector::<f64, 11>::zeros();
            gt.fixed_rows_mut::<9>(0).copy_from(&g.delay);
            gt[9] = 1.0;
            let mut gf = nalgebra::SVector::<f64, 11>::zeros();
            gf.fixed_rows_mut::<9>(0).copy_from(&g.doppler);
            gf[10] = 1.0;
            if nuisance.gains {
                // eliminate the gain of this triple
                let m = Matrix2::new(f.tau_tau, f.tau_f, f.tau_f, f.f_f);
                let c = Vector2::new(f.beta_tau, f.beta_f);
                let m = if f.beta_beta > 0.0 { m - c * c.transpose() / f.beta_beta } else { m };
                a += gt * gt.transpose() * m[(0, 0)]
                    + (gt * gf.transpose() + gf * gt.transpose()) * m[(0, 1)]
                    + gf * gf.transpose() * m[(1, 1)];
            } else {
                let mut gb = nalgebra::SVector::<f64, 11>::zeros();
                gb.fixed_rows_mut::<9>(0).copy_from(&g.gain);
                let fm = f.matrix();
                let rows = [gt, gf, gb];
                for r in 0..3 {
                    for c in 0..3 {
                        if fm[(r, c)] != 0.0 {
                            a += rows[r] * rows[c].transpose() * fm[(r, c)];
                        }
                    }
                }
            }
        }
    }
    let keep: Vec<usize> = (0..9).collect();
    let mut nuis = Vec::new();
    if nuisance.clock_offsets {
        nuis.push(9);
    }
    if nuisance.frequency_offsets {
        nuis.push(10);
    }
    schur(&a, &keep, &nuis)
}

#[derive(Debug, Clone)]
pub struct BoundReport {
    pub efim_kappa1: DMatrix<f64>,
    /// Constrained CRB (9x9). Filled with infinities when not localizable.
    pub ccrb: DMatrix<f64>,
    pub peb: f64,
    pub veb: f64,
    pub oeb: f64,
    /// Raw traces of the three diagonal blocks.
    pub peb_sq: f64,
    pub veb_sq: f64,
    pub oeb_sq: f64,
    /// Numerical rank of the tangent-projected EFIM (8 means full rank).
    pub rank_kappa1: usize,
    pub condition_number: f64,
    pub localizable: bool,
    pub singular_values: Vec<f64>,
}

/// Constrained CRB `U (U^T J U)^{-1} U^T` under `|s| = 1`.
pub fn ccrb(efim: &DMatrix<f64>, orientation: &Vec3) -> BoundReport {
    let ub = tangent_basis(orientation);
    let u = DMatrix::from_column_slice(9, 8, ub.as_slice());
    let mut jt = u.transpose() * efim * &u;
    crate::linalg::symmetrize(&mut jt);
    let rank = scaled_rank(&jt, RANK_REL_TOL);
    let localizable = rank.rank == 8;
    let inv = if localizable {
        scaled_spd_inverse(&jt).or_else(|| Some(scaled_pinv(&jt)))
    } else {
        None
    };
    let (ccrb, traces) = match inv {
        Some(inv) => {
            let mut c = &u * inv * u.transpose();
            crate::linalg::symmetrize(&mut c);
            let tr = |o: usize| (0..3).map(|i| c[(o + i, o + i)]).sum::<f64>();
            let t = [tr(0), tr(3), tr(6)];
            (c, t)
        }
        None => (DMatrix::from_element(9, 9, f64::INFINITY), [f64::INFINITY; 3]),
    };
    BoundReport {
        efim_kappa1: efim.clone(),
        ccrb,
        peb: traces[0].sqrt(),
        veb: traces[1].sqrt(),
        oeb: traces[2].sqrt(),
        peb_sq: traces[0],
        veb_sq: traces[1],
        oeb_sq: traces[2],
        rank_kappa1: rank.rank,
        condition_number: rank.condition_number,
        localizable,
        singular_values: rank.singular_values,
    }
}

/// Inverse of the 9x9 EFIM without the orientation constraint, if it exists.
pub fn unconstrained_crb(efim: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let r = scaled_rank(efim, RANK_REL_TOL);
    if r.rank < efim.nrows() {
        return None;
    }
    scaled_spd_inverse(efim)
}

/// Settings for a full bound evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSettings {
    pub snr_db: f64,
    pub fim: FimOptions,
    pub nuisance: NuisanceSet,
    pub quadrature: Quadrature,
}

impl Default for BoundSettings {
    fn default() -> Self {
        Self { snr_db: 10.0, fim: FimOptions::default(), nuisance: NuisanceSet::ALL, quadrature: Quadrature::default() }
    }
}

/// Everything computed on the way to the bounds.
#[derive(Debug, Clone)]
pub struct FisherReport {
    pub geometry: GeometryTable,
    pub channel: ChannelParams,
    pub stats: WaveformStats,
    pub bounds: BoundReport,
}

/// Bounds for `scenario`, calibrating the noise PSD to `settings.snr_db`.
pub fn analyze(scenario: &Scenario, settings: &BoundSettings) -> Result<FisherReport> {
    let stats = compute_stats(&scenario.waveform, &settings.quadrature)?;
    analyze_with_stats(scenario, settings, &stats)
}

pub fn analyze_with_stats(scenario: &Scenario, settings: &BoundSettings, stats: &WaveformStats) -> Result<FisherReport> {
    let geometry = scenario.geometry()?;
    let n0 = noise_psd_for_snr(scenario, &geometry, settings.snr_db)?;
    let channel = compute_channel(scenario, &geometry, n0)?;
    let j = efim_structured(scenario, &geometry, &channel, stats, &settings.fim, &settings.nuisance);
    if j.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("non-finite EFIM".into()));
    }
    let bounds = ccrb(&j, &scenario.receiver.orientation);
    Ok(FisherReport { geometry, channel, stats: *stats, bounds })
}

/// Dense-route analysis, intended for small scenarios and cross-checks.
pub fn analyze_dense(scenario: &Scenario, settings: &BoundSettings, stats: &WaveformStats) -> Result<(ChannelFim, TransformJacobian, DMatrix<f64>)> {
    let geometry = scenario.geometry()?;
    let n0 = noise_psd_for_snr(scenario, &geometry, settings.snr_db)?;
    let channel = compute_channel(scenario, &geometry, n0)?;
    let cf = assemble_channel_fim(&channel, stats, &settings.fim);
    let jac = super::jacobian::jacobian(scenario, &geometry);
    let e = efim(&cf, &jac, &settings.nuisance);
    Ok((cf, jac, e))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Localizability {
    pub rank: usize,
    pub condition_number: f64,
    pub localizable: bool,
}

/// Rank verdict on the tangent-projected EFIM.
pub fn localizability(scenario: &Scenario, settings: &BoundSettings) -> Result<Localizability> {
    let r = analyze(scenario, settings)?.bounds;
    Ok(Localizability { rank: r.rank_kappa1, condition_number: r.condition_number, localizable: r.localizable })
}

/// Orientation-block residual `|C_ss s|`, which vanishes for the constrained bound.
pub fn orientation_residual(ccrb: &DMatrix<f64>, orientation: &Vector3<f64>) -> f64 {
    let c = ccrb.view((6, 6), (3, 3)).into_owned();
    (c * DMatrix::from_column_slice(3, 1, orientation.as_slice())).norm()
}
