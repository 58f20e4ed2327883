//! Element-wise delays and Doppler shifts across a large array. In the near
//! field both vary along the aperture, which is what makes the orientation
//! observable.

use elaa_loc::channel::compute_channel;
use elaa_loc::harness::ScenarioConfig;

pub fn run_example() -> elaa_loc::Result<(f64, f64)> {
    let cfg = ScenarioConfig::from_toml_with_overrides("", &["array.num_elements=400".into(), "waveform.carrier_hz=1e10".into()])?;
    let scenario = cfg.build_scenario(3)?;
    let geom = scenario.geometry()?;
    let ch = compute_channel(&scenario, &geom, 1.0)?;
    let nu = scenario.array.num_elements;
    let mut spread = (0.0f64, 0.0f64);
    for b in 0..scenario.anchors.len() {
        let first = ch.index(b, 0, 0);
        let last = ch.index(b, nu - 1, 0);
        let dtau = ch.delay[last] - ch.delay[first];
        let dnu = ch.doppler_deviation(last) - ch.doppler_deviation(first);
        println!("anchor {b}: delay spread {:+.3e} s, Doppler spread {:+.3} Hz", dtau, dnu);
        spread.0 = spread.0.max(dtau.abs());
        spread.1 = spread.1.max(dnu.abs());
    }
    Ok(spread)
}

fn main() -> elaa_loc::Result<()> {
    run_example().map(|_| ())
}
