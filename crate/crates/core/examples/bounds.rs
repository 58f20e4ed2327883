//! Position, velocity and orientation error bounds for the reference
//! scenario, and how they shrink as the array grows.

use elaa_loc::fisher::{analyze, BoundSettings};
use elaa_loc::harness::ScenarioConfig;

pub fn run_example() -> elaa_loc::Result<Vec<(usize, f64, f64, f64)>> {
    let mut out = Vec::new();
    let base = ScenarioConfig::default();
    for nu in [50, 100, 200, 400] {
        let cfg = base.with_sweep_value(elaa_loc::harness::SweepVariable::NumElements, nu as f64)?;
        let scenario = cfg.build_scenario_around(1, &base)?;
        let rep = analyze(&scenario, &BoundSettings::default())?;
        let b = &rep.bounds;
        println!("N_U = {nu:3}: PEB {:.3e} m  VEB {:.3e} m/s  OEB {:.3e}  rank {}", b.peb, b.veb, b.oeb, b.rank_kappa1);
        out.push((nu, b.peb, b.veb, b.oeb));
    }
    Ok(out)
}

fn main() -> elaa_loc::Result<()> {
    run_example().map(|_| ())
}
