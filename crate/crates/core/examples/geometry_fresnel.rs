//! Builds the reference geometry and reports which anchor/element/slot
//! triples lie in the radiating near field of the array.

use elaa_loc::harness::ScenarioConfig;
use elaa_loc::scenario::{fresnel_check, FresnelReport};

pub fn run_example() -> elaa_loc::Result<FresnelReport> {
    let cfg = ScenarioConfig::from_toml_with_overrides("", &["array.num_elements=200".into()])?;
    let scenario = cfg.build_scenario(7)?;
    let geom = scenario.geometry()?;
    let report = fresnel_check(&scenario.array, scenario.wavelength(), &geom);
    println!("aperture {:.2} m, wavelength {:.3} m", scenario.array.aperture(), scenario.wavelength());
    println!("Fresnel region: {:.2} m < d < {:.1} m", report.lower_bound, report.upper_bound);
    for (b, a) in scenario.anchors.iter().enumerate() {
        let d = geom.distance[geom.index(b, 0, 0)];
        println!("anchor {b}: at {:?}, {:.1} m from element 0", a.initial_position.as_slice(), d);
    }
    println!("{:.1}% of triples in the Fresnel region", 100.0 * report.fraction_inside);
    let near = geom.distance.iter().filter(|&&d| d < report.upper_bound).count();
    println!("{:.1}% of triples closer than the Fraunhofer distance", 100.0 * near as f64 / geom.distance.len() as f64);
    Ok(report)
}

fn main() -> elaa_loc::Result<()> {
    run_example().map(|_| ())
}
