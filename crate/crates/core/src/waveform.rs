//! Transmit pulse and the waveform statistics that enter the Fisher entries.
//!
//! Spectra use the ordinary-frequency Fourier transform
//! `S(f) = \int s(t) exp(-j 2 pi f t) dt`, so that `\int |S|^2 df = \int s^2 dt`
//! and the raised-cosine spectrum takes the value `T_s` on its flat band.

use std::f64::consts::PI;

use crate::{Error, Result, SPEED_OF_LIGHT};

#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedPulse {
    /// Time of the first sample (s).
    pub start: f64,
    /// Sample spacing (s).
    pub step: f64,
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PulseKind {
    RaisedCosine,
    Tabulated(TabulatedPulse),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub kind: PulseKind,
    /// Roll-off factor in `[0, 1]`.
    pub rolloff: f64,
    /// Zero-crossing spacing `T_s` (s).
    pub zero_crossing_time: f64,
    pub carrier_frequency: f64,
    /// Pulse amplitude. Energy scales with its square.
    pub amplitude: f64,
}

impl Waveform {
    pub fn raised_cosine(rolloff: f64, zero_crossing_time: f64, carrier_frequency: f64) -> Result<Self> {
        let w = Self {
            kind: PulseKind::RaisedCosine,
            rolloff,
            zero_crossing_time,
            carrier_frequency,
            amplitude: 1.0,
        };
        w.validate()?;
        Ok(w)
    }

    /// Raised cosine with `T_s = (1 + rolloff) / bandwidth`.
    pub fn raised_cosine_bw(rolloff: f64, bandwidth: f64, carrier_frequency: f64) -> Result<Self> {
        if !(bandwidth > 0.0) {
            return Err(Error::Config("bandwidth must be positive".into()));
        }
        Self::raised_cosine(rolloff, (1.0 + rolloff) / bandwidth, carrier_frequency)
    }

    pub fn tabulated(pulse: TabulatedPulse, carrier_frequency: f64) -> Result<Self> {
        if pulse.samples.len() < 3 || !(pulse.step > 0.0) {
            return Err(Error::Config("tabulated pulse needs at least 3 samples and a positive step".into()));
        }
        Ok(Self {
            kind: PulseKind::Tabulated(pulse),
            rolloff: 0.0,
            zero_crossing_time: f64::NAN,
            carrier_frequency,
            amplitude: 1.0,
        })
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn with_carrier(mut self, carrier_frequency: f64) -> Self {
        self.carrier_frequency = carrier_frequency;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_frequency > 0.0) {
            return Err(Error::Config("carrier frequency must be positive".into()));
        }
        if let PulseKind::RaisedCosine = self.kind {
            if !(0.0..=1.0).contains(&self.rolloff) {
                return Err(Error::Config(format!("roll-off {} outside [0, 1]", self.rolloff)));
            }
            if !(self.zero_crossing_time > 0.0) {
                return Err(Error::Config("zero-crossing time must be positive".into()));
            }
        }
        if !(self.amplitude > 0.0) {
            return Err(Error::Config("amplitude must be positive".into()));
        }
        Ok(())
    }

    /// `(1 + rolloff) / T_s` for the raised cosine.
    pub fn bandwidth(&self) -> f64 {
        (1.0 + self.rolloff) / self.zero_crossing_time
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    /// `E_S = \int s(t)^2 dt`.
    pub fn symbol_energy(&self) -> f64 {
        match &self.kind {
            PulseKind::RaisedCosine => {
                self.amplitude.powi(2) * self.zero_crossing_time * (1.0 - self.rolloff / 4.0)
            }
            PulseKind::Tabulated(p) => {
                self.amplitude.powi(2) * trapezoid(&p.samples.iter().map(|s| s * s).collect::<Vec<_>>(), p.step)
            }
        }
    }

    /// Pulse value `s(t)` including the amplitude.
    pub fn pulse(&self, t: f64) -> f64 {
        match &self.kind {
            PulseKind::RaisedCosine => self.amplitude * raised_cosine_pulse(self.rolloff, self.zero_crossing_time, t),
            PulseKind::Tabulated(p) => self.amplitude * interpolate(p, t),
        }
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Unit-amplitude raised-cosine pulse.
pub fn raised_cosine_pulse(rolloff: f64, ts: f64, t: f64) -> f64 {
    let x = t / ts;
    let q = 2.0 * rolloff * x;
    let den = 1.0 - q * q;
    if den.abs() < 1e-8 {
        // removable singularity at t = +-T_s / (2 rolloff)
        return PI / 4.0 * sinc(1.0 / (2.0 * rolloff));
    }
    sinc(x) * (PI * rolloff * x).cos() / den
}

/// Closed-form raised-cosine spectrum (three branches), scaled by the amplitude.
pub fn raised_cosine_spectrum(w: &Waveform, f: f64) -> f64 {
    let ts = w.zero_crossing_time;
    let beta = w.rolloff;
    let af = f.abs();
    let f1 = (1.0 - beta) / (2.0 * ts);
    let f2 = (1.0 + beta) / (2.0 * ts);
    let v = if af <= f1 {
        ts
    } else if af <= f2 {
        ts / 2.0 * (1.0 + (PI * ts / beta * (af - f1)).cos())
    } else {
        0.0
    };
    w.amplitude * v
}

fn interpolate(p: &TabulatedPulse, t: f64) -> f64 {
    let x = (t - p.start) / p.step;
    if x < 0.0 || x > (p.samples.len() - 1) as f64 {
        return 0.0;
    }
    let i = (x.floor() as usize).min(p.samples.len() - 2);
    let r = x - i as f64;
    p.samples[i] * (1.0 - r) + p.samples[i + 1] * r
}

fn trapezoid(y: &[f64], h: f64) -> f64 {
    if y.len() < 2 {
        return 0.0;
    }
    let inner: f64 = y[1..y.len() - 1].iter().sum();
    h * (inner + 0.5 * (y[0] + y[y.len() - 1]))
}

/// Quadrature settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    /// Target relative accuracy of each integral.
    pub rel_tol: f64,
    /// Time-domain truncation in units of `T_s`.
    pub truncation: f64,
    /// Maximum bisection depth of the adaptive Simpson rule.
    pub max_depth: u32,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self { rel_tol: 1e-10, truncation: 50.0, max_depth: 30 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    out: &mut Integral,
) {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let h = b - a;
    let left = h / 12.0 * (fa + 4.0 * flm + fm);
    let right = h / 12.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        out.value += left + right + diff / 15.0;
        out.error += diff.abs() / 15.0;
        return;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1, out);
    simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1, out);
}

/// Adaptive Simpson on `[a, b]` with absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, max_depth: u32) -> Integral {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut out = Integral { value: 0.0, error: 0.0 };
    simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth, &mut out);
    out
}

/// Composite adaptive Simpson over the given breakpoints.
pub fn composite_simpson<F: Fn(f64) -> f64>(f: &F, breaks: &[f64], tol: f64, max_depth: u32) -> Integral {
    let pieces = (breaks.len().max(2) - 1) as f64;
    breaks.windows(2).fold(Integral { value: 0.0, error: 0.0 }, |acc, w| {
        let r = adaptive_simpson(f, w[0], w[1], tol / pieces, max_depth);
        Integral { value: acc.value + r.value, error: acc.error + r.error }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveformStats {
    /// `alpha_1` (Hz).
    pub effective_bandwidth: f64,
    /// `alpha_2`.
    pub baseband_carrier_correlation: f64,
    /// `sigma` (s).
    pub effective_duration: f64,
    /// `gamma` (s J).
    pub temporal_centroid: f64,
    /// `epsilon`.
    pub derivative_correlation: f64,
    /// `\int s^2 dt`.
    pub energy_time: f64,
    /// `\int |S|^2 df` (equals `energy_time` up to quadrature error for the
    /// raised cosine; computed from `energy_time` for tabulated pulses).
    pub energy_freq: f64,
    /// Largest error estimate relative to its integral's scale.
    pub max_rel_error: f64,
}

fn check(name: &str, i: Integral, scale: f64, tol: f64, worst: &mut f64) -> Result<f64> {
    let rel = i.error / scale;
    if !rel.is_finite() || rel > tol {
        return Err(Error::Integration(format!(
            "{name}: error estimate {:e} exceeds tolerance {:e}",
            rel, tol
        )));
    }
    *worst = worst.max(rel);
    Ok(i.value)
}

pub fn compute_stats(w: &Waveform, q: &Quadrature) -> Result<WaveformStats> {
    w.validate()?;
    match &w.kind {
        PulseKind::RaisedCosine => raised_cosine_stats(w, q),
        PulseKind::Tabulated(p) => tabulated_stats(w, p),
    }
}

fn raised_cosine_stats(w: &Waveform, q: &Quadrature) -> Result<WaveformStats> {
    let ts = w.zero_crossing_time;
    let beta = w.rolloff;
    let a2 = w.amplitude * w.amplitude;
    let accept = 100.0 * q.rel_tol;
    let mut worst = 0.0_f64;

    let f1 = (1.0 - beta) / (2.0 * ts);
    let f2 = (1.0 + beta) / (2.0 * ts);
    let fbreaks = [-f2, -f1, 0.0, f1, f2];
    let s2 = |f: f64| raised_cosine_spectrum(w, f).powi(2);
    let e_scale = a2 * ts;
    let ef = composite_simpson(&s2, &fbreaks, q.rel_tol * e_scale, q.max_depth);
    let ef = check("spectral energy", ef, e_scale, accept, &mut worst)?;
    let m2_scale = e_scale / (ts * ts);
    let m2 = composite_simpson(&|f: f64| f * f * s2(f), &fbreaks, q.rel_tol * m2_scale, q.max_depth);
    let m2 = check("second spectral moment", m2, m2_scale, accept, &mut worst)?;
    let m1_scale = e_scale / ts;
    let m1 = composite_simpson(&|f: f64| f * s2(f), &fbreaks, q.rel_tol * m1_scale, q.max_depth);
    let m1 = check("first spectral moment", m1, m1_scale, accept, &mut worst)?;

    let half = q.truncation * ts;
    let n = (2.0 * q.truncation * 2.0).round() as usize;
    let tbreaks: Vec<f64> = (0..=n).map(|i| -half + i as f64 * (2.0 * half / n as f64)).collect();
    let p2 = |t: f64| w.pulse(t).powi(2);
    let et = composite_simpson(&p2, &tbreaks, q.rel_tol * e_scale, q.max_depth);
    let et = check("time energy", et, e_scale, accept, &mut worst)?;
    let t2_scale = e_scale * ts * ts;
    let t2 = composite_simpson(&|t: f64| t * t * p2(t), &tbreaks, q.rel_tol * t2_scale, q.max_depth);
    let t2 = check("second time moment", t2, t2_scale, accept, &mut worst)?;
    let t1_scale = e_scale * ts;
    let t1 = composite_simpson(&|t: f64| t * p2(t), &tbreaks, q.rel_tol * t1_scale, q.max_depth);
    let t1 = check("first time moment", t1, t1_scale, accept, &mut worst)?;
    let h = 1e-5 * ts;
    let sd = |t: f64| w.pulse(t) * (w.pulse(t + h) - w.pulse(t - h)) / (2.0 * h);
    let d_scale = a2;
    let eps = composite_simpson(&sd, &tbreaks, q.rel_tol * d_scale, q.max_depth);
    let eps = check("derivative correlation", eps, d_scale, accept, &mut worst)?;

    // t^2 s(t)^2 decays only as t^-4, so the truncated time integral is off
    // by a few parts per million. With a roll-off the spectrum is smooth and
    // Parseval gives the exact moment: \int t^2 s^2 dt = \int |S'|^2 df / (4 pi^2).
    let duration = if beta > 0.0 {
        let k = PI * ts / beta;
        let ds2 = |f: f64| {
            let af = f.abs();
            if af > f1 && af <= f2 {
                let d = w.amplitude * ts / 2.0 * k * (k * (af - f1)).sin();
                d * d
            } else {
                0.0
            }
        };
        let v2_scale = e_scale * k * k * beta;
        let v2 = composite_simpson(&ds2, &fbreaks, q.rel_tol * v2_scale, q.max_depth);
        let v2 = check("spectral derivative energy", v2, v2_scale, accept, &mut worst)?;
        (v2 / (4.0 * PI * PI) / ef).sqrt()
    } else {
        (t2 / et).sqrt()
    };

    Ok(WaveformStats {
        effective_bandwidth: (m2 / ef).sqrt(),
        baseband_carrier_correlation: m1 / (m2.sqrt() * ef.sqrt()),
        effective_duration: duration,
        temporal_centroid: t1,
        derivative_correlation: eps,
        energy_time: et,
        energy_freq: ef,
        max_rel_error: worst,
    })
}

fn tabulated_stats(w: &Waveform, p: &TabulatedPulse) -> Result<WaveformStats> {
    let h = p.step;
    let s: Vec<f64> = p.samples.iter().map(|x| w.amplitude * x).collect();
    let n = s.len();
    let t: Vec<f64> = (0..n).map(|i| p.start + i as f64 * h).collect();
    let ds: Vec<f64> = (0..n)
        .map(|i| {
            if i == 0 {
                (s[1] - s[0]) / h
            } else if i == n - 1 {
                (s[n - 1] - s[n - 2]) / h
            } else {
                (s[i + 1] - s[i - 1]) / (2.0 * h)
            }
        })
        .collect();
    let e = trapezoid(&s.iter().map(|x| x * x).collect::<Vec<_>>(), h);
    if !(e > 0.0) {
        return Err(Error::Config("tabulated pulse has zero energy".into()));
    }
    let t2 = trapezoid(&s.iter().zip(&t).map(|(x, t)| t * t * x * x).collect::<Vec<_>>(), h);
    let t1 = trapezoid(&s.iter().zip(&t).map(|(x, t)| t * x * x).collect::<Vec<_>>(), h);
    let eps = trapezoid(&s.iter().zip(&ds).map(|(x, d)| x * d).collect::<Vec<_>>(), h);
    let d2 = trapezoid(&ds.iter().map(|d| d * d).collect::<Vec<_>>(), h);
    // coarse-grid energy as a crude error estimate
    let coarse: Vec<f64> = s.iter().step_by(2).map(|x| x * x).collect();
    let e_coarse = trapezoid(&coarse, 2.0 * h);
    Ok(WaveformStats {
        // Parseval: \int f^2 |S|^2 df = \int s'^2 dt / (4 pi^2)
        effective_bandwidth: (d2 / (4.0 * PI * PI * e)).sqrt(),
        // a real pulse has an even |S|^2, so the first moment vanishes
        baseband_carrier_correlation: 0.0,
        effective_duration: (t2 / e).sqrt(),
        temporal_centroid: t1,
        derivative_correlation: eps,
        energy_time: e,
        energy_freq: e,
        max_rel_error: ((e - e_coarse) / e).abs(),
    })
}

/// `|gain|^2 E_S / N_o`.
pub fn snr(w: &Waveform, gain: f64, noise_psd: f64) -> Result<f64> {
    if !(noise_psd > 0.0) {
        return Err(Error::Contract("noise PSD must be positive".into()));
    }
    Ok(gain * gain * w.symbol_energy() / noise_psd)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rc() -> Waveform {
        Waveform::raised_cosine_bw(0.25, 500e6, 1e9).unwrap()
    }

    #[test]
    fn spectrum_branches() {
        let w = rc();
        let ts = w.zero_crossing_time;
        assert_eq!(raised_cosine_spectrum(&w, 0.0), ts);
        assert_eq!(raised_cosine_spectrum(&w, 1.01 * 1.25 / (2.0 * ts)), 0.0);
        assert_eq!(raised_cosine_spectrum(&w, 0.75 / (2.0 * ts)), ts);
        let right = raised_cosine_spectrum(&w, 1.25 / (2.0 * ts));
        assert!(right.abs() < 1e-25);
    }

    #[test]
    fn pulse_singularity_is_continuous() {
        let ts = 1.0;
        let t0 = ts / (2.0 * 0.25);
        let at = raised_cosine_pulse(0.25, ts, t0);
        let near = raised_cosine_pulse(0.25, ts, t0 * (1.0 + 1e-6));
        assert!((at - near).abs() < 1e-6);
    }

    #[test]
    fn raised_cosine_stats_known_values() {
        let w = rc();
        let s = compute_stats(&w, &Quadrature::default()).unwrap();
        let ts = w.zero_crossing_time;
        assert!((ts - 2.5e-9).abs() < 1e-24);
        assert!((s.energy_freq - ts * (1.0 - 0.25 / 4.0)).abs() < 1e-9 * ts);
        assert!((s.energy_time - s.energy_freq).abs() < 1e-6 * s.energy_freq);
        assert!(s.baseband_carrier_correlation.abs() < 1e-12);
        assert!(s.temporal_centroid.abs() < 1e-9 * ts * ts);
        assert!(s.derivative_correlation.abs() < 1e-9);
        assert!((s.effective_duration / ts - 0.516397779494322).abs() < 1e-9);
        assert!((s.effective_bandwidth / 1.0972e8 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn snr_is_quadratic_in_gain() {
        let w = rc();
        assert_eq!(snr(&w, 0.0, 1.0).unwrap(), 0.0);
        let a = snr(&w, 1e-3, 1e-20).unwrap();
        let b = snr(&w, 2e-3, 1e-20).unwrap();
        assert!((b / a - 4.0).abs() < 1e-12);
        assert!(snr(&w, 1.0, 0.0).is_err());
    }
}
