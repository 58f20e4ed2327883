// Runs every example through its `run_example` entry point and checks what it reports.

#[allow(dead_code)]
#[path = "../examples/bounds.rs"]
mod bounds;
#[allow(dead_code)]
#[path = "../examples/doppler_only.rs"]
mod doppler_only;
#[allow(dead_code)]
#[path = "../examples/estimate.rs"]
mod estimate;
#[allow(dead_code)]
#[path = "../examples/geometry_fresnel.rs"]
mod geometry_fresnel;
#[allow(dead_code)]
#[path = "../examples/minimum_infrastructure.rs"]
mod minimum_infrastructure;
#[allow(dead_code)]
#[path = "../examples/monte_carlo.rs"]
mod monte_carlo;
#[allow(dead_code)]
#[path = "../examples/near_field_doppler.rs"]
mod near_field_doppler;
#[allow(dead_code)]
#[path = "../examples/waveform_stats.rs"]
mod waveform_stats;

#[test]
fn bounds_shrink_with_array_size() {
    let rows = bounds::run_example().unwrap();
    for w in rows.windows(2) {
        assert!(w[1].1 < w[0].1, "PEB {:?}", w);
        assert!(w[1].3 < w[0].3, "OEB {:?}", w);
    }
}

#[test]
fn minimum_infrastructure_verdicts() {
    let got: Vec<bool> = minimum_infrastructure::run_example().unwrap().into_iter().map(|(_, ok)| ok).collect();
    assert_eq!(got, [false, false, true, false, true, false, true]);
}

#[test]
fn doppler_only_is_much_weaker() {
    let rows = doppler_only::run_example().unwrap();
    let d = rows.iter().find(|r| r.mode == "doppler_only").unwrap();
    assert!(d.peb_ratio > 10.0 && d.veb_ratio > 10.0);
    let j = rows.iter().find(|r| r.mode == "joint").unwrap();
    assert_eq!(j.peb_ratio, 1.0);
}

#[test]
fn single_estimate_converges() {
    let est = estimate::run_example().unwrap();
    assert!(est.converged);
    assert!((est.orientation.norm() - 1.0).abs() < 1e-12);
}

#[test]
fn fresnel_report_is_consistent() {
    let r = geometry_fresnel::run_example().unwrap();
    assert!(r.lower_bound < r.upper_bound);
    assert!((0.0..=1.0).contains(&r.fraction_inside));
}

#[test]
fn monte_carlo_tracks_the_bound() {
    let pts = monte_carlo::run_example().unwrap();
    assert_eq!(pts.len(), 3);
    for p in &pts {
        assert_eq!(p.failed, 0);
        assert!(p.ratio_p < 2.0 && p.ratio_v < 2.0 && p.ratio_o < 2.0, "{p:?}");
    }
}

#[test]
fn near_field_spreads_are_visible() {
    let (dtau, dnu) = near_field_doppler::run_example().unwrap();
    assert!(dtau > 1e-10);
    assert!(dnu > 1.0);
}

#[test]
fn waveform_example_is_normalized() {
    let s = waveform_stats::run_example().unwrap();
    assert!((s.energy_time / s.energy_freq - 1.0).abs() < 1e-6);
}
