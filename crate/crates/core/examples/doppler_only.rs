//! Bounds with Doppler only, delay only and both measurement families.

use elaa_loc::harness::{run_doppler_only_study, ScenarioConfig, StudyRow};

pub fn run_example() -> elaa_loc::Result<Vec<StudyRow>> {
    let cfg = ScenarioConfig::default();
    let res = run_doppler_only_study(&cfg, 4)?;
    for r in &res.points {
        println!(
            "{:12} PEB {:.3e} m  VEB {:.3e} m/s  OEB {:.3e}   (x{:.1e}, x{:.1e}, x{:.1e} joint)",
            r.mode, r.peb, r.veb, r.oeb, r.peb_ratio, r.veb_ratio, r.oeb_ratio
        );
    }
    Ok(res.points)
}

fn main() -> elaa_loc::Result<()> {
    run_example().map(|_| ())
}
