#![allow(dead_code)]

use elaa_loc::fisher::{analyze, assemble_channel_fim, BoundSettings, FisherReport};
use elaa_loc::harness::ScenarioConfig;
use elaa_loc::measurement::{noise_floor_from_crlb, noiseless, sample, MeasurementSet, NoiseFloor, SigmaMode};
use elaa_loc::scenario::Scenario;

pub fn config(nb: usize, nu: usize, nk: usize, extra: &[&str]) -> ScenarioConfig {
    let mut o = vec![format!("anchors.count={nb}"), format!("array.num_elements={nu}"), format!("slots.num_slots={nk}")];
    o.extend(extra.iter().map(|s| s.to_string()));
    ScenarioConfig::from_toml_with_overrides("", &o).unwrap()
}

pub fn scenario(nb: usize, nu: usize, nk: usize, seed: u64) -> Scenario {
    config(nb, nu, nk, &[]).build_scenario(seed).unwrap()
}

pub fn zero_offsets(mut s: Scenario) -> Scenario {
    for a in &mut s.anchors {
        a.clock_offset = 0.0;
        a.frequency_offset = 0.0;
    }
    s
}

pub struct Fixture {
    pub scenario: Scenario,
    pub report: FisherReport,
    pub noise: NoiseFloor,
}

impl Fixture {
    pub fn new(scenario: Scenario, mode: SigmaMode) -> Self {
        let settings = BoundSettings::default();
        let report = analyze(&scenario, &settings).unwrap();
        let cf = assemble_channel_fim(&report.channel, &report.stats, &settings.fim);
        let noise = noise_floor_from_crlb(&cf, mode).unwrap();
        Self { scenario, report, noise }
    }

    pub fn noisy(&self, seed: u64) -> MeasurementSet {
        sample(&self.report.channel, &self.noise, seed).unwrap()
    }

    pub fn clean(&self) -> MeasurementSet {
        noiseless(&self.report.channel, &self.noise)
    }
}
