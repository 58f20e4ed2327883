//! Gaussian delay and Doppler observations.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::fisher::ChannelFim;
use crate::rng::{keyed_rng, STREAM_DELAY, STREAM_DOPPLER};
use crate::{Error, Result};

/// How per-triple CRLBs are turned into measurement noise levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMode {
    /// One sigma per family: the median over triples.
    #[default]
    Median,
    /// Every triple keeps its own CRLB.
    PerTriple,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseFloor {
    pub sigma_tau: f64,
    pub sigma_doppler: f64,
    /// Per-triple sigmas when built with [`SigmaMode::PerTriple`].
    pub per_triple: Option<(Vec<f64>, Vec<f64>)>,
}

impl NoiseFloor {
    pub fn scalar(sigma_tau: f64, sigma_doppler: f64) -> Self {
        Self { sigma_tau, sigma_doppler, per_triple: None }
    }

    pub fn tau(&self, i: usize) -> f64 {
        self.per_triple.as_ref().map_or(self.sigma_tau, |p| p.0[i])
    }

    pub fn doppler(&self, i: usize) -> f64 {
        self.per_triple.as_ref().map_or(self.sigma_doppler, |p| p.1[i])
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Noise levels from the per-triple delay and Doppler CRLBs `1/sqrt(F)`.
pub fn noise_floor_from_crlb(channel_fim: &ChannelFim, mode: SigmaMode) -> Result<NoiseFloor> {
    if channel_fim.triples.is_empty() {
        return Err(Error::Config("empty channel FIM".into()));
    }
    let mut st = Vec::with_capacity(channel_fim.triples.len());
    let mut sd = Vec::with_capacity(channel_fim.triples.len());
    for (i, t) in channel_fim.triples.iter().enumerate() {
        if !(t.tau_tau > 0.0) || !(t.f_f > 0.0) {
            return Err(Error::Config(format!("triple {i} has a non-positive delay or Doppler FIM entry")));
        }
        st.push(1.0 / t.tau_tau.sqrt());
        sd.push(1.0 / t.f_f.sqrt());
    }
    Ok(match mode {
        SigmaMode::Median => NoiseFloor::scalar(median(st), median(sd)),
        SigmaMode::PerTriple => NoiseFloor { sigma_tau: median(st.clone()), sigma_doppler: median(sd.clone()), per_triple: Some((st, sd)) },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub num_anchors: usize,
    pub num_elements: usize,
    pub num_slots: usize,
    /// Indexed like the channel table.
    pub delay_meas: Vec<f64>,
    /// Absolute observed frequency (Hz).
    pub doppler_meas: Vec<f64>,
    pub carrier_frequency: f64,
    pub noise: NoiseFloor,
    pub seed: u64,
}

impl MeasurementSet {
    pub fn sigma_tau(&self) -> f64 {
        self.noise.sigma_tau
    }

    pub fn sigma_doppler(&self) -> f64 {
        self.noise.sigma_doppler
    }

    #[inline]
    pub fn index(&self, b: usize, u: usize, k: usize) -> usize {
        (b * self.num_slots + k) * self.num_elements + u
    }

    pub fn len(&self) -> usize {
        self.delay_meas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delay_meas.is_empty()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["b", "u", "k", "delay_meas", "doppler_meas"])?;
        for b in 0..self.num_anchors {
            for k in 0..self.num_slots {
                for u in 0..self.num_elements {
                    let i = self.index(b, u, k);
                    wr.write_record([
                        b.to_string(),
                        u.to_string(),
                        k.to_string(),
                        format!("{:e}", self.delay_meas[i]),
                        format!("{:e}", self.doppler_meas[i]),
                    ])?;
                }
            }
        }
        wr.flush()?;
        Ok(())
    }
}

/// Standard normal draw of triple `(b, u, k)` in the given stream.
pub fn unit_noise(seed: u64, b: usize, u: usize, k: usize, stream: u64) -> f64 {
    keyed_rng(&[seed, b as u64, u as u64, k as u64, stream]).sample(StandardNormal)
}

/// Truth plus independent zero-mean Gaussian noise on every delay and Doppler.
///
/// The unit draws depend only on `(seed, b, u, k)`, so the same seed at a
/// different noise level gives the same realization scaled by sigma.
pub fn sample(channel: &ChannelParams, noise: &NoiseFloor, seed: u64) -> Result<MeasurementSet> {
    if !(noise.sigma_tau > 0.0) || !(noise.sigma_doppler > 0.0) {
        return Err(Error::Contract("measurement sigmas must be positive".into()));
    }
    let mut delay_meas = Vec::with_capacity(channel.len());
    let mut doppler_meas = Vec::with_capacity(channel.len());
    for b in 0..channel.num_anchors {
        for k in 0..channel.num_slots {
            for u in 0..channel.num_elements {
                let i = channel.index(b, u, k);
                delay_meas.push(channel.delay[i] + noise.tau(i) * unit_noise(seed, b, u, k, STREAM_DELAY));
                doppler_meas.push(channel.doppler_freq[i] + noise.doppler(i) * unit_noise(seed, b, u, k, STREAM_DOPPLER));
            }
        }
    }
    Ok(MeasurementSet {
        num_anchors: channel.num_anchors,
        num_elements: channel.num_elements,
        num_slots: channel.num_slots,
        delay_meas,
        doppler_meas,
        carrier_frequency: channel.carrier_frequency,
        noise: noise.clone(),
        seed,
    })
}

/// Noise-free measurement set carrying the given sigmas as weights.
pub fn noiseless(channel: &ChannelParams, noise: &NoiseFloor) -> MeasurementSet {
    MeasurementSet {
        num_anchors: channel.num_anchors,
        num_elements: channel.num_elements,
        num_slots: channel.num_slots,
        delay_meas: channel.delay.clone(),
        doppler_meas: channel.doppler_freq.clone(),
        carrier_frequency: channel.carrier_frequency,
        noise: noise.clone(),
        seed: 0,
    }
}

/// Gaussian log-likelihood of `meas` under `model`, dropping constants.
pub fn log_likelihood(meas: &MeasurementSet, model: &ChannelParams) -> f64 {
    let fc = meas.carrier_frequency;
    (0..meas.len())
        .map(|i| {
            let rt = (meas.delay_meas[i] - model.delay[i]) / meas.noise.tau(i);
            let rf = ((meas.doppler_meas[i] - fc) - model.doppler_deviation(i)) / meas.noise.doppler(i);
            -0.5 * (rt * rt + rf * rf)
        })
        .sum()
}
