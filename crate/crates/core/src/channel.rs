//! Noiseless channel parameters for every (anchor, element, slot) triple.

use std::f64::consts::PI;

use crate::scenario::{GeometryTable, Scenario, MIN_DISTANCE};
use crate::waveform::{db_to_linear, Waveform};
use crate::{Error, Result, SPEED_OF_LIGHT};

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    pub num_anchors: usize,
    pub num_elements: usize,
    pub num_slots: usize,
    /// Indexed like [`GeometryTable::index`].
    pub delay: Vec<f64>,
    pub doppler_freq: Vec<f64>,
    pub doppler_shift: Vec<f64>,
    pub gain: Vec<f64>,
    pub noise_psd: f64,
    pub pathloss_exponent: f64,
    pub carrier_frequency: f64,
    pub clock_offsets: Vec<f64>,
    pub frequency_offsets: Vec<f64>,
}

impl ChannelParams {
    #[inline]
    pub fn index(&self, b: usize, u: usize, k: usize) -> usize {
        (b * self.num_slots + k) * self.num_elements + u
    }

    pub fn len(&self) -> usize {
        self.delay.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delay.is_empty()
    }

    /// `f_d - f_c` for triple `i`, evaluated without cancellation.
    pub fn doppler_deviation(&self, i: usize) -> f64 {
        let b = i / (self.num_elements * self.num_slots);
        doppler_deviation(self.carrier_frequency, self.doppler_shift[i], self.frequency_offsets[b])
    }
}

/// `d / c + delta_b`.
pub fn delay(geometry: &GeometryTable, clock_offsets: &[f64], b: usize, u: usize, k: usize) -> f64 {
    geometry.distance[geometry.index(b, u, k)] / SPEED_OF_LIGHT + clock_offsets[b]
}

/// `v_rel . Delta / c`.
pub fn doppler_shift(geometry: &GeometryTable, b: usize, u: usize, k: usize) -> f64 {
    let i = geometry.index(b, u, k);
    geometry.rel_velocity[i].dot(&geometry.unit_dir[i]) / SPEED_OF_LIGHT
}

/// `f_c (1 - nu) + epsilon_b`.
pub fn doppler_frequency(w: &Waveform, shift: f64, freq_offset: f64) -> f64 {
    w.carrier_frequency * (1.0 - shift) + freq_offset
}

/// `-f_c nu + epsilon_b`, the observed frequency minus the carrier.
pub fn doppler_deviation(carrier: f64, shift: f64, freq_offset: f64) -> f64 {
    -carrier * shift + freq_offset
}

/// Free-space gain `lambda d^{-alpha} / (4 pi)`.
pub fn friis_gain(wavelength: f64, distance: f64, pathloss_exponent: f64) -> Result<f64> {
    if !(distance > MIN_DISTANCE) {
        return Err(Error::DegenerateGeometry(format!("distance {distance:e} m too small for a gain")));
    }
    Ok(wavelength * distance.powf(-pathloss_exponent) / (4.0 * PI))
}

pub fn compute_channel(scenario: &Scenario, geometry: &GeometryTable, noise_psd: f64) -> Result<ChannelParams> {
    let w = &scenario.waveform;
    let lambda = w.wavelength();
    let alpha = scenario.pathloss_exponent;
    let clock = scenario.clock_offsets();
    let freq = scenario.frequency_offsets();
    let n = geometry.len();
    let mut out = ChannelParams {
        num_anchors: geometry.num_anchors,
        num_elements: geometry.num_elements,
        num_slots: geometry.num_slots,
        delay: Vec::with_capacity(n),
        doppler_freq: Vec::with_capacity(n),
        doppler_shift: Vec::with_capacity(n),
        gain: Vec::with_capacity(n),
        noise_psd,
        pathloss_exponent: alpha,
        carrier_frequency: w.carrier_frequency,
        clock_offsets: clock.clone(),
        frequency_offsets: freq.clone(),
    };
    for b in 0..geometry.num_anchors {
        for k in 0..geometry.num_slots {
            for u in 0..geometry.num_elements {
                let i = geometry.index(b, u, k);
                let nu = doppler_shift(geometry, b, u, k);
                out.delay.push(delay(geometry, &clock, b, u, k));
                out.doppler_shift.push(nu);
                out.doppler_freq.push(doppler_frequency(w, nu, freq[b]));
                out.gain.push(friis_gain(lambda, geometry.distance[i], alpha)?);
            }
        }
    }
    Ok(out)
}

/// Noise PSD that puts the mean over anchors of `|beta|^2 E_S / N_o`, taken
/// at the reference element in the first slot, at `snr_db`.
pub fn noise_psd_for_snr(scenario: &Scenario, geometry: &GeometryTable, snr_db: f64) -> Result<f64> {
    let lambda = scenario.wavelength();
    let u = scenario.array.reference_index;
    let nb = geometry.num_anchors;
    if nb == 0 {
        return Err(Error::Config("scenario has no anchors".into()));
    }
    let mut acc = 0.0;
    for b in 0..nb {
        let g = friis_gain(lambda, geometry.distance[geometry.index(b, u, 0)], scenario.pathloss_exponent)?;
        acc += g * g;
    }
    Ok(acc / nb as f64 * scenario.waveform.symbol_energy() / db_to_linear(snr_db))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn friis_examples() {
        assert!((friis_gain(0.3, 1.0, 1.0).unwrap() - 0.3 / (4.0 * PI)).abs() < 1e-17);
        assert!((friis_gain(0.3, 1.0, 1.0).unwrap() - 0.023873).abs() < 1e-6);
        let g1 = friis_gain(0.3, 7.0, 1.0).unwrap();
        let g2 = friis_gain(0.3, 14.0, 1.0).unwrap();
        assert!((g1 / g2 - 2.0).abs() < 1e-14);
        assert!((friis_gain(0.3, 10.0, 2.0).unwrap() - 2.3873e-4).abs() < 1e-8);
        assert!(friis_gain(0.3, 0.0, 1.0).is_err());
    }

    #[test]
    fn doppler_frequency_examples() {
        let w = Waveform::raised_cosine_bw(0.25, 500e6, 1e9).unwrap();
        assert_eq!(doppler_frequency(&w, 0.0, 0.0), 1e9);
        let f = doppler_frequency(&w, 10.0 / SPEED_OF_LIGHT, 0.0);
        assert!((f - (1e9 - 33.356)).abs() < 1e-3);
        assert_eq!(doppler_frequency(&w, 0.0, 500.0), 1e9 + 500.0);
    }
}
