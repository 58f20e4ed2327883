//! One noisy measurement set, the closed-form initial fix and the
//! maximum-likelihood refinement.

use elaa_loc::estimator::{refine, EstimateState, SolverConfig, StartPoint};
use elaa_loc::fisher::assemble_channel_fim;
use elaa_loc::harness::{ScenarioConfig, SweepMode};
use elaa_loc::initializer::{initialize, InitConfig};
use elaa_loc::measurement::{noise_floor_from_crlb, sample, SigmaMode};

pub fn run_example() -> elaa_loc::Result<EstimateState> {
    let cfg = ScenarioConfig::from_toml_with_overrides("", &["array.num_elements=50".into()])?;
    let scenario = cfg.build_scenario(cfg.seed.value)?;
    let settings = cfg.bound_settings(SweepMode::FullEstimation);
    let rep = elaa_loc::fisher::analyze(&scenario, &settings)?;
    let floor = noise_floor_from_crlb(&assemble_channel_fim(&rep.channel, &rep.stats, &settings.fim), SigmaMode::PerTriple)?;
    let meas = sample(&rep.channel, &floor, 2024)?;

    let init = initialize(&meas, &scenario, &InitConfig::default())?;
    let est = refine(&StartPoint::from(&init), &meas, &scenario, &SolverConfig::default())?;
    let truth = &scenario.receiver;
    println!("initial error  p {:.3e} m", (init.position0 - truth.position0).norm());
    println!("refined error  p {:.3e} m  v {:.3e} m/s  s {:.3e}", (est.position0 - truth.position0).norm(), (est.velocity - truth.velocity).norm(), (est.orientation - truth.orientation).norm());
    println!("bounds         p {:.3e} m  v {:.3e} m/s  s {:.3e}", rep.bounds.peb, rep.bounds.veb, rep.bounds.oeb);
    println!("{} iterations, stopped on {}, cost {:.3}", est.iteration, est.stop_reason.as_str(), est.cost);
    Ok(est)
}

fn main() -> elaa_loc::Result<()> {
    run_example().map(|_| ())
}
