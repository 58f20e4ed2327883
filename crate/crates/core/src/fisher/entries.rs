use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix3};

use super::{FimOptions, MeasurementSelection};
use crate::channel::ChannelParams;
use crate::waveform::WaveformStats;

/// FIM entries of one (anchor, element, slot) triple over `(tau, f_d, beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TripleFim {
    pub tau_tau: f64,
    pub f_f: f64,
    pub beta_beta: f64,
    pub beta_tau: f64,
    pub tau_f: f64,
    pub beta_f: f64,
}

impl TripleFim {
    /// Symmetric 3x3 block ordered `(tau, f_d, beta)`.
    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.tau_tau, self.tau_f, self.beta_tau,
            self.tau_f, self.f_f, self.beta_f,
            self.beta_tau, self.beta_f, self.beta_beta,
        )
    }

    fn select(mut self, sel: MeasurementSelection) -> Self {
        match sel {
            MeasurementSelection::Joint => {}
            MeasurementSelection::DelayOnly => {
                self.f_f = 0.0;
                self.tau_f = 0.0;
                self.beta_f = 0.0;
            }
            MeasurementSelection::DopplerOnly => {
                self.tau_tau = 0.0;
                self.tau_f = 0.0;
                self.beta_tau = 0.0;
            }
        }
        self
    }
}

/// The three summands of the delay entry `F(tau, tau)` before the common
/// prefactor: `(f_d^2, alpha_1^2, f_d alpha_2)`.
pub fn delay_fim_terms(f_d: f64, stats: &WaveformStats) -> (f64, f64, f64) {
    let a1 = stats.effective_bandwidth;
    (f_d * f_d, a1 * a1, f_d * stats.baseband_carrier_correlation)
}

pub fn fim_entries(
    channel: &ChannelParams,
    stats: &WaveformStats,
    opts: &FimOptions,
    b: usize,
    u: usize,
    k: usize,
) -> TripleFim {
    triple_fim(channel, stats, opts, channel.index(b, u, k))
}

pub(crate) fn triple_fim(channel: &ChannelParams, stats: &WaveformStats, opts: &FimOptions, i: usize) -> TripleFim {
    let beta = channel.gain[i].abs();
    let fd = channel.doppler_freq[i];
    let n0 = channel.noise_psd;
    let es = stats.energy_freq;
    let b2 = beta * beta;
    let (t1, t2, t3) = delay_fim_terms(fd, stats);
    let snr = b2 * es / n0;
    let sigma = stats.effective_duration;
    let e_dop = if opts.doppler_fim_includes_energy { es } else { 1.0 };
    TripleFim {
        tau_tau: 8.0 * PI * PI * b2 * es / n0 * (t1 + t2 + t3),
        f_f: 8.0 * PI * PI * b2 / n0 * sigma * sigma * e_dop,
        beta_beta: if beta > 0.0 { snr / (4.0 * PI * PI * b2) } else { 0.0 },
        beta_tau: -2.0 / n0 * beta * stats.derivative_correlation,
        tau_f: 8.0 * PI * PI * b2 / n0 * channel.carrier_frequency * fd * stats.temporal_centroid,
        beta_f: 0.0,
    }
    .select(opts.selection)
}

/// Channel FIM, block diagonal over anchors. Only the per-triple entries are
/// stored; dense blocks are built on request.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelFim {
    pub num_anchors: usize,
    pub num_elements: usize,
    pub num_slots: usize,
    /// Indexed like the channel table.
    pub triples: Vec<TripleFim>,
}

pub fn assemble_channel_fim(channel: &ChannelParams, stats: &WaveformStats, opts: &FimOptions) -> ChannelFim {
    ChannelFim {
        num_anchors: channel.num_anchors,
        num_elements: channel.num_elements,
        num_slots: channel.num_slots,
        triples: (0..channel.len()).map(|i| triple_fim(channel, stats, opts, i)).collect(),
    }
}

impl ChannelFim {
    pub fn per_anchor(&self) -> usize {
        self.num_elements * self.num_slots
    }

    /// `3 N_U N_K + 2`.
    pub fn anchor_dim(&self) -> usize {
        3 * self.per_anchor() + 2
    }

    pub fn dim(&self) -> usize {
        self.num_anchors * self.anchor_dim()
    }

    pub fn anchor_triples(&self, b: usize) -> &[TripleFim] {
        let n = self.per_anchor();
        &self.triples[b * n..(b + 1) * n]
    }

    /// Dense block of anchor `b`, including the offset rows and columns.
    pub fn anchor_block(&self, b: usize) -> DMatrix<f64> {
        let n = self.per_anchor();
        let m = self.anchor_dim();
        let (d, e) = (3 * n, 3 * n + 1);
        let mut a = DMatrix::zeros(m, m);
        for (j, t) in self.anchor_triples(b).iter().enumerate() {
            let idx = [j, n + j, 2 * n + j];
            let f = t.matrix();
            for r in 0..3 {
                for c in 0..3 {
                    a[(idx[r], idx[c])] = f[(r, c)];
                }
            }
            // offset couplings
            a[(j, d)] = t.tau_tau;
            a[(n + j, d)] = t.tau_f;
            a[(2 * n + j, d)] = t.beta_tau;
            a[(j, e)] = t.tau_f;
            a[(n + j, e)] = t.f_f;
            a[(2 * n + j, e)] = t.beta_f;
            a[(d, d)] += t.tau_tau;
            a[(e, e)] += t.f_f;
            a[(d, e)] += t.tau_f;
        }
        for r in 0..3 * n {
            a[(d, r)] = a[(r, d)];
            a[(e, r)] = a[(r, e)];
        }
        a[(e, d)] = a[(d, e)];
        a
    }

    /// Full block-diagonal matrix. Intended for small scenarios.
    pub fn dense(&self) -> DMatrix<f64> {
        let m = self.anchor_dim();
        let mut a = DMatrix::zeros(self.dim(), self.dim());
        for b in 0..self.num_anchors {
            a.view_mut((b * m, b * m), (m, m)).copy_from(&self.anchor_block(b));
        }
        a
    }
}
