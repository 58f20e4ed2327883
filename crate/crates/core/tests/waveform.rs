use elaa_loc::waveform::{compute_stats, Quadrature, TabulatedPulse, Waveform};

// Frozen from an arbitrary-precision evaluation of the spectral integrals.
// (rolloff, zero-crossing time, E/Ts, effective bandwidth in Hz, effective duration / Ts)
const ORACLE: [(f64, f64, f64, f64, f64); 3] = [
    (0.1, 2.2e-9, 0.975, 128192432.461648, 0.800640769025436),
    (0.25, 2.5e-9, 0.9375, 109722020.625659, 0.516397779494322),
    (0.5, 3.0e-9, 0.875, 89372925.3700181, 0.377964473009227),
];

// Closed forms: E = Ts (1 - b/4) and \int t^2 s^2 dt = Ts^3 / (16 b).
fn closed_form_duration(beta: f64) -> f64 {
    (1.0 / (16.0 * beta) / (1.0 - beta / 4.0)).sqrt()
}

#[test]
fn raised_cosine_matches_oracle() {
    for &(beta, ts, e, alpha, sigma) in &ORACLE {
        let w = Waveform::raised_cosine(beta, ts, 1e9).unwrap();
        let s = compute_stats(&w, &Quadrature::default()).unwrap();
        assert!((s.energy_freq / ts - e).abs() < 1e-9, "energy {beta}");
        assert!((s.energy_time / ts - e).abs() < 1e-6, "time energy {beta}");
        assert!((s.effective_bandwidth / alpha - 1.0).abs() < 1e-8, "bandwidth {beta}");
        assert!((s.effective_duration / ts / sigma - 1.0).abs() < 1e-8, "duration {beta}");
        assert!((closed_form_duration(beta) / sigma - 1.0).abs() < 1e-12);
        assert!(s.baseband_carrier_correlation.abs() < 1e-12);
        assert!(s.derivative_correlation.abs() < 1e-9);
    }
}

#[test]
fn normalized_stats_ignore_amplitude() {
    let w = Waveform::raised_cosine(0.25, 2.5e-9, 1e9).unwrap();
    let a = compute_stats(&w, &Quadrature::default()).unwrap();
    let b = compute_stats(&w.clone().with_amplitude(3.0), &Quadrature::default()).unwrap();
    assert!((b.energy_freq / a.energy_freq - 9.0).abs() < 1e-9);
    assert!((b.effective_bandwidth / a.effective_bandwidth - 1.0).abs() < 1e-10);
    assert!((b.effective_duration / a.effective_duration - 1.0).abs() < 1e-10);
}

#[test]
fn tabulated_samples_track_closed_form() {
    let (beta, ts) = (0.25, 2.5e-9);
    let rc = Waveform::raised_cosine(beta, ts, 1e9).unwrap();
    let step = ts / 32.0;
    let n = 2 * 40 * 32 + 1;
    let start = -40.0 * ts;
    let samples: Vec<f64> = (0..n).map(|i| rc.pulse(start + i as f64 * step)).collect();
    let tab = Waveform::tabulated(TabulatedPulse { start, step, samples }, 1e9).unwrap();
    let a = compute_stats(&rc, &Quadrature::default()).unwrap();
    let b = compute_stats(&tab, &Quadrature::default()).unwrap();
    assert!((b.energy_time / a.energy_freq - 1.0).abs() < 1e-4);
    assert!((b.effective_bandwidth / a.effective_bandwidth - 1.0).abs() < 1e-3);
    assert!((b.effective_duration / a.effective_duration - 1.0).abs() < 1e-3);
}
