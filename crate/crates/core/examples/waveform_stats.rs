//! Raised-cosine pulse statistics that enter the Fisher entries.

use elaa_loc::waveform::{compute_stats, Quadrature, Waveform, WaveformStats};

pub fn run_example() -> elaa_loc::Result<WaveformStats> {
    let w = Waveform::raised_cosine_bw(0.25, 500e6, 1e9)?;
    let s = compute_stats(&w, &Quadrature::default())?;
    let ts = w.zero_crossing_time;
    println!("T_s = {:e} s, closed-form E_S = {:e}", ts, w.symbol_energy());
    println!("energy (time)  {:e}", s.energy_time);
    println!("energy (freq)  {:e}", s.energy_freq);
    println!("alpha_1 = {:e} Hz", s.effective_bandwidth);
    println!("alpha_2 = {:e}", s.baseband_carrier_correlation);
    println!("sigma   = {:e} s ({:.9} T_s)", s.effective_duration, s.effective_duration / ts);
    println!("gamma   = {:e}, epsilon = {:e}", s.temporal_centroid, s.derivative_correlation);
    println!("worst relative quadrature error {:e}", s.max_rel_error);

    // Stats other than the energy do not depend on the amplitude.
    let loud = compute_stats(&w.clone().with_amplitude(3.0), &Quadrature::default())?;
    println!("amplitude x3: energy ratio {:.6}, alpha_1 ratio {:.6}", loud.energy_time / s.energy_time, loud.effective_bandwidth / s.effective_bandwidth);
    Ok(s)
}

fn main() -> elaa_loc::Result<()> {
    run_example().map(|_| ())
}
