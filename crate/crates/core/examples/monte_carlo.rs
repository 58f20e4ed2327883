//! Monte Carlo RMSE against the bounds over an SNR sweep, written as CSV.

use elaa_loc::harness::{run_estimation_campaign, EstimatePoint, ScenarioConfig, SweepMode, SweepSpec, SweepVariable};

pub fn run_example() -> elaa_loc::Result<Vec<EstimatePoint>> {
    let cfg = ScenarioConfig::from_toml_with_overrides(
        "",
        &["array.num_elements=30".into(), "noise.sigma_mode=per_triple".into()],
    )?;
    let spec = SweepSpec {
        variable: SweepVariable::Snr,
        values: vec![0.0, 10.0, 20.0],
        trials_per_point: 20,
        geometries: 1,
        mode: SweepMode::FullEstimation,
    };
    let res = run_estimation_campaign(&spec, &cfg)?;
    let dir = std::env::temp_dir().join("elaa-loc-monte-carlo");
    res.write(&dir)?;
    for p in &res.points {
        println!(
            "SNR {:4.1} dB: RMSE/bound  p {:.3}  v {:.3}  s {:.3}  ({} of {} converged)",
            p.value, p.ratio_p, p.ratio_v, p.ratio_o, (p.convergence_rate * p.trials as f64).round(), p.trials
        );
    }
    println!("CSV in {}", dir.display());
    Ok(res.points)
}

fn main() -> elaa_loc::Result<()> {
    run_example().map(|_| ())
}
