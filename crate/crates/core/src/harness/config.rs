//! Scenario configuration files.
//!
//! TOML with the sections `[anchors]`, `[receiver]`, `[array]`, `[slots]`,
//! `[waveform]`, `[noise]` and `[seed]`, plus optional `[solver]` and
//! `[sweep]`. Every key has a default, so an empty file is a valid config
//! describing the reference scenario:
//!
//! ```toml
//! [anchors]
//! count = 5
//! radius_m = 50.0
//! speed_mps = 10.0
//! velocity_pattern = "constant"   # or "distinct"
//! min_clearance_m = 1.0
//! clock_offset_s = 1e-6
//! clock_offset_spread_s = 1e-9
//! frequency_offset_spread_hz = 100.0
//! # positions_m = [[x, y, z], ...]           explicit layout (optional)
//! # velocities_mps = [[[vx, vy, vz], ...]]   per anchor, per slot (optional)
//! # clock_offsets_s = [...]                  (optional)
//! # frequency_offsets_hz = [...]             (optional)
//!
//! [receiver]
//! position_m = [0.0, 0.0, 0.0]
//! speed_mps = 5.0
//! # velocity_mps = [vx, vy, vz]   (optional, otherwise random direction)
//! # orientation = [sx, sy, sz]    (optional, otherwise random)
//!
//! [array]
//! num_elements = 100
//! # spacing_m = 0.15              (default: half a wavelength)
//! reference_index = 0
//! offset_convention = "reference_index"
//!
//! [slots]
//! num_slots = 2
//! slot_spacing_s = 0.5
//!
//! [waveform]
//! kind = "raised_cosine"
//! rolloff = 0.25
//! bandwidth_hz = 5e8              # or zero_crossing_time_s
//! carrier_hz = 1e9
//!
//! [noise]
//! snr_db = 10.0
//! sigma_mode = "median"           # or "per_triple"
//! doppler_fim_includes_energy = false
//! pathloss_exponent = 1.0
//!
//! [seed]
//! value = 1
//! ```

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::estimator::{Direction, OffsetMode, SolverConfig};
use crate::fisher::{BoundSettings, FimOptions, NuisanceSet};
use crate::measurement::SigmaMode;
use crate::scenario::{
    array_center, place_anchors, random_receiver, Anchor, AnchorLayout, ArraySpec, OffsetConvention, ReceiverTruth,
    Scenario, SlotPlan, VelocityPattern,
};
use crate::waveform::{Quadrature, TabulatedPulse, Waveform};
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnchorsSection {
    pub count: usize,
    pub radius_m: f64,
    pub speed_mps: f64,
    pub velocity_pattern: VelocityPattern,
    pub min_clearance_m: f64,
    pub clock_offset_s: f64,
    pub clock_offset_spread_s: f64,
    pub frequency_offset_spread_hz: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positions_m: Option<Vec<[f64; 3]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub velocities_mps: Option<Vec<Vec<[f64; 3]>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clock_offsets_s: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequency_offsets_hz: Option<Vec<f64>>,
}

impl Default for AnchorsSection {
    fn default() -> Self {
        let l = AnchorLayout::default();
        Self {
            count: l.count,
            radius_m: l.radius,
            speed_mps: l.speed,
            velocity_pattern: l.pattern,
            min_clearance_m: l.min_clearance,
            clock_offset_s: l.clock_offset_common,
            clock_offset_spread_s: l.clock_offset_spread,
            frequency_offset_spread_hz: l.frequency_offset_spread,
            positions_m: None,
            velocities_mps: None,
            clock_offsets_s: None,
            frequency_offsets_hz: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReceiverSection {
    pub position_m: [f64; 3],
    pub speed_mps: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub velocity_mps: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orientation: Option<[f64; 3]>,
}

impl Default for ReceiverSection {
    fn default() -> Self {
        Self { position_m: [0.0; 3], speed_mps: 5.0, velocity_mps: None, orientation: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArraySection {
    pub num_elements: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spacing_m: Option<f64>,
    pub reference_index: usize,
    pub offset_convention: OffsetConvention,
}

impl Default for ArraySection {
    fn default() -> Self {
        Self { num_elements: 100, spacing_m: None, reference_index: 0, offset_convention: OffsetConvention::ReferenceIndex }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlotsSection {
    pub num_slots: usize,
    pub slot_spacing_s: f64,
}

impl Default for SlotsSection {
    fn default() -> Self {
        Self { num_slots: 2, slot_spacing_s: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveformKind {
    RaisedCosine,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveformSection {
    pub kind: WaveformKind,
    pub rolloff: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zero_crossing_time_s: Option<f64>,
    pub carrier_hz: f64,
    pub amplitude: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_step_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_start_s: Option<f64>,
}

impl Default for WaveformSection {
    fn default() -> Self {
        Self {
            kind: WaveformKind::RaisedCosine,
            rolloff: 0.25,
            bandwidth_hz: None,
            zero_crossing_time_s: None,
            carrier_hz: 1e9,
            amplitude: 1.0,
            samples: None,
            sample_step_s: None,
            sample_start_s: None,
        }
    }
}

/// Default signal bandwidth (Hz).
pub const DEFAULT_BANDWIDTH: f64 = 500e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub snr_db: f64,
    pub sigma_mode: SigmaMode,
    pub doppler_fim_includes_energy: bool,
    pub pathloss_exponent: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { snr_db: 10.0, sigma_mode: SigmaMode::Median, doppler_fim_includes_energy: false, pathloss_exponent: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedSection {
    pub value: u64,
}

impl Default for SeedSection {
    fn default() -> Self {
        Self { value: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub max_outer_iters: usize,
    pub offset_mode: OffsetMode,
    pub direction: Direction,
    pub joint_step: bool,
    pub index_set_size: usize,
    pub restarts: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            max_outer_iters: SolverConfig::default().max_outer_iters,
            offset_mode: OffsetMode::Profiled,
            direction: Direction::GaussNewton,
            joint_step: true,
            index_set_size: 8,
            restarts: 0,
        }
    }
}

impl SolverSection {
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            max_outer_iters: self.max_outer_iters,
            offset_mode: self.offset_mode,
            direction: self.direction,
            joint_step: self.joint_step,
            ..SolverConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    NumElements,
    CarrierFrequency,
    SlotSpacing,
    NumAnchors,
    NumSlots,
    Snr,
}

impl SweepVariable {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepVariable::NumElements => "num_elements",
            SweepVariable::CarrierFrequency => "carrier_frequency",
            SweepVariable::SlotSpacing => "slot_spacing",
            SweepVariable::NumAnchors => "num_anchors",
            SweepVariable::NumSlots => "num_slots",
            SweepVariable::Snr => "snr",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "num_elements" => SweepVariable::NumElements,
            "carrier_frequency" => SweepVariable::CarrierFrequency,
            "slot_spacing" => SweepVariable::SlotSpacing,
            "num_anchors" => SweepVariable::NumAnchors,
            "num_slots" => SweepVariable::NumSlots,
            "snr" => SweepVariable::Snr,
            _ => return Err(Error::Config(format!("unknown sweep variable '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    BoundsOnly,
    FullEstimation,
    DopplerOnly,
    DelayOnly,
}

impl SweepMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepMode::BoundsOnly => "bounds_only",
            SweepMode::FullEstimation => "full_estimation",
            SweepMode::DopplerOnly => "doppler_only",
            SweepMode::DelayOnly => "delay_only",
        }
    }
}

/// Experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    #[serde(default = "one")]
    pub trials_per_point: usize,
    /// Random geometries per point for bound sweeps.
    #[serde(default = "one")]
    pub geometries: usize,
    #[serde(default = "bounds_only")]
    pub mode: SweepMode,
}

fn one() -> usize {
    1
}

fn bounds_only() -> SweepMode {
    SweepMode::BoundsOnly
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("sweep needs at least one value".into()));
        }
        if self.values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("sweep values must be sorted and distinct".into()));
        }
        if self.trials_per_point < 1 || self.geometries < 1 {
            return Err(Error::Config("trials_per_point and geometries must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub anchors: AnchorsSection,
    pub receiver: ReceiverSection,
    pub array: ArraySection,
    pub slots: SlotsSection,
    pub waveform: WaveformSection,
    pub noise: NoiseSection,
    pub seed: SeedSection,
    pub solver: SolverSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parses `s` after applying `key.path=value` overrides.
    pub fn from_toml_with_overrides(s: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = s.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for o in overrides {
            let (key, raw) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override '{o}' is not key=value")))?;
            let path: Vec<&str> = key.trim().split('.').collect();
            let mut node = &mut table;
            for part in &path[..path.len() - 1] {
                let entry = node.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
                node = entry
                    .as_table_mut()
                    .ok_or_else(|| Error::Config(format!("'{part}' in '{key}' is not a section")))?;
            }
            node.insert(path[path.len() - 1].to_string(), parse_value(raw.trim()));
        }
        let cfg: ScenarioConfig = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        let canon = self.to_toml_string().unwrap_or_default();
        let digest = Sha256::digest(canon.as_bytes());
        hex::encode(digest)[..16].to_string()
    }

    pub fn waveform(&self) -> Result<Waveform> {
        let w = &self.waveform;
        let wf = match w.kind {
            WaveformKind::RaisedCosine => match (w.bandwidth_hz, w.zero_crossing_time_s) {
                (Some(_), Some(_)) => {
                    return Err(Error::Config("give either bandwidth_hz or zero_crossing_time_s, not both".into()))
                }
                (_, Some(ts)) => Waveform::raised_cosine(w.rolloff, ts, w.carrier_hz)?,
                (bw, None) => Waveform::raised_cosine_bw(w.rolloff, bw.unwrap_or(DEFAULT_BANDWIDTH), w.carrier_hz)?,
            },
            WaveformKind::Tabulated => {
                let samples = w.samples.clone().ok_or_else(|| Error::Config("tabulated waveform needs samples".into()))?;
                let step = w.sample_step_s.ok_or_else(|| Error::Config("tabulated waveform needs sample_step_s".into()))?;
                let start = w.sample_start_s.unwrap_or(-(samples.len() as f64 - 1.0) * step / 2.0);
                Waveform::tabulated(TabulatedPulse { start, step, samples }, w.carrier_hz)?
            }
        };
        let wf = wf.with_amplitude(w.amplitude);
        wf.validate()?;
        Ok(wf)
    }

    pub fn layout(&self) -> AnchorLayout {
        let a = &self.anchors;
        AnchorLayout {
            count: a.count,
            radius: a.radius_m,
            speed: a.speed_mps,
            pattern: a.velocity_pattern,
            min_clearance: a.min_clearance_m,
            clock_offset_common: a.clock_offset_s,
            clock_offset_spread: a.clock_offset_spread_s,
            frequency_offset_spread: a.frequency_offset_spread_hz,
        }
    }

    fn array_spec(&self, waveform: &Waveform) -> Result<ArraySpec> {
        let spacing = self.array.spacing_m.unwrap_or(waveform.wavelength() / 2.0);
        ArraySpec::new(self.array.num_elements, spacing, self.array.reference_index)
    }

    fn receiver(&self, seed: u64) -> Result<ReceiverTruth> {
        let r = &self.receiver;
        let p0 = Vec3::from(r.position_m);
        let rnd = random_receiver(p0, r.speed_mps, seed);
        let velocity = r.velocity_mps.map(Vec3::from).unwrap_or(rnd.velocity);
        let orientation = match r.orientation {
            Some(o) => {
                let v = Vec3::from(o);
                if !(v.norm() > 0.0) {
                    return Err(Error::Config("receiver orientation must be non-zero".into()));
                }
                // Leave already-unit vectors untouched so pinned configs rebuild bit for bit.
                if (v.norm() - 1.0).abs() <= 4.0 * f64::EPSILON { v } else { v.normalize() }
            }
            None => rnd.orientation,
        };
        ReceiverTruth::new(p0, velocity, orientation)
    }

    /// Builds the scenario for `geometry_seed`.
    pub fn build_scenario(&self, geometry_seed: u64) -> Result<Scenario> {
        self.build_scenario_around(geometry_seed, self)
    }

    /// Like [`ScenarioConfig::build_scenario`], but random anchors are placed
    /// around the array of `placement`. Sweeps pass the base config here so
    /// that changing the swept variable does not move the anchors.
    pub fn build_scenario_around(&self, geometry_seed: u64, placement: &ScenarioConfig) -> Result<Scenario> {
        let waveform = self.waveform()?;
        let plan = SlotPlan::new(self.slots.num_slots, self.slots.slot_spacing_s)?;
        let array = self.array_spec(&waveform)?;
        let receiver = self.receiver(geometry_seed)?;
        let nk = plan.num_slots;
        let a = &self.anchors;
        let mut anchors = match &a.positions_m {
            Some(pos) => {
                let mut out = Vec::with_capacity(pos.len());
                for (b, p) in pos.iter().enumerate() {
                    let vels = match &a.velocities_mps {
                        Some(v) => {
                            let vb = v.get(b).ok_or_else(|| Error::Config(format!("no velocities for anchor {b}")))?;
                            if vb.len() == 1 {
                                vec![Vec3::from(vb[0]); nk]
                            } else if vb.len() == nk {
                                vb.iter().map(|x| Vec3::from(*x)).collect()
                            } else {
                                return Err(Error::Config(format!("anchor {b} needs 1 or {nk} velocities")));
                            }
                        }
                        None => vec![Vec3::zeros(); nk],
                    };
                    out.push(Anchor { initial_position: Vec3::from(*p), velocity_per_slot: vels, clock_offset: 0.0, frequency_offset: 0.0 });
                }
                out
            }
            None => {
                let pw = placement.waveform()?;
                let pa = placement.array_spec(&pw)?;
                let pr = placement.receiver(geometry_seed)?;
                let center = array_center(&pr, &pa);
                let first = pr.position0 + pa.offset(0) * pr.orientation;
                let last = pr.position0 + pa.offset(pa.num_elements - 1) * pr.orientation;
                place_anchors(&self.layout(), &center, (&first, &last), nk, geometry_seed)
            }
        };
        if let Some(c) = &a.clock_offsets_s {
            if c.len() != anchors.len() {
                return Err(Error::Config("clock_offsets_s length differs from the anchor count".into()));
            }
            for (x, v) in anchors.iter_mut().zip(c) {
                x.clock_offset = *v;
            }
        }
        if let Some(f) = &a.frequency_offsets_hz {
            if f.len() != anchors.len() {
                return Err(Error::Config("frequency_offsets_hz length differs from the anchor count".into()));
            }
            for (x, v) in anchors.iter_mut().zip(f) {
                x.frequency_offset = *v;
            }
        }
        if anchors.is_empty() {
            return Err(Error::Config("scenario needs at least one anchor".into()));
        }
        Ok(Scenario {
            anchors,
            receiver,
            array,
            plan,
            waveform,
            pathloss_exponent: self.noise.pathloss_exponent,
            offset_convention: self.array.offset_convention,
        })
    }

    /// Copy of the config with the random parts of `scenario` written out
    /// explicitly, so that it rebuilds the same scenario for any seed.
    pub fn pinned(&self, scenario: &Scenario) -> Self {
        let mut c = self.clone();
        let a = &scenario.anchors;
        c.anchors.count = a.len();
        c.anchors.positions_m = Some(a.iter().map(|x| x.initial_position.into()).collect());
        c.anchors.velocities_mps =
            Some(a.iter().map(|x| x.velocity_per_slot.iter().map(|v| (*v).into()).collect()).collect());
        c.anchors.clock_offsets_s = Some(a.iter().map(|x| x.clock_offset).collect());
        c.anchors.frequency_offsets_hz = Some(a.iter().map(|x| x.frequency_offset).collect());
        c.receiver.position_m = scenario.receiver.position0.into();
        c.receiver.velocity_mps = Some(scenario.receiver.velocity.into());
        c.receiver.orientation = Some(scenario.receiver.orientation.into());
        c.array.spacing_m = Some(scenario.array.element_spacing);
        c
    }

    pub fn bound_settings(&self, mode: SweepMode) -> BoundSettings {
        let (selection, nuisance) = match mode {
            SweepMode::DopplerOnly => (crate::fisher::MeasurementSelection::DopplerOnly, NuisanceSet::DOPPLER_ONLY),
            SweepMode::DelayOnly => (crate::fisher::MeasurementSelection::DelayOnly, NuisanceSet::ALL),
            _ => (crate::fisher::MeasurementSelection::Joint, NuisanceSet::ALL),
        };
        BoundSettings {
            snr_db: self.noise.snr_db,
            fim: FimOptions { doppler_fim_includes_energy: self.noise.doppler_fim_includes_energy, selection },
            nuisance,
            quadrature: Quadrature::default(),
        }
    }

    /// Copy of the config with the sweep variable set to `value`.
    pub fn with_sweep_value(&self, variable: SweepVariable, value: f64) -> Result<Self> {
        let mut c = self.clone();
        let as_count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Config(format!("sweep value {v} is not a count")))
            }
        };
        match variable {
            SweepVariable::NumElements => c.array.num_elements = as_count(value)?,
            SweepVariable::CarrierFrequency => c.waveform.carrier_hz = value,
            SweepVariable::SlotSpacing => c.slots.slot_spacing_s = value,
            SweepVariable::NumAnchors => c.anchors.count = as_count(value)?,
            SweepVariable::NumSlots => c.slots.num_slots = as_count(value)?,
            SweepVariable::Snr => c.noise.snr_db = value,
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_reference_config() {
        let c = ScenarioConfig::from_toml_str("").unwrap();
        assert_eq!(c, ScenarioConfig::default());
        let s = c.build_scenario(1).unwrap();
        assert_eq!(s.anchors.len(), 5);
        assert!((s.waveform.bandwidth() - 500e6).abs() < 1e-3);
        assert!((s.array.element_spacing - s.wavelength() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn overrides_apply() {
        let c = ScenarioConfig::from_toml_with_overrides(
            "[array]\nnum_elements = 10\n",
            &["array.num_elements=20".into(), "noise.sigma_mode=per_triple".into()],
        )
        .unwrap();
        assert_eq!(c.array.num_elements, 20);
        assert_eq!(c.noise.sigma_mode, SigmaMode::PerTriple);
        assert!(ScenarioConfig::from_toml_with_overrides("", &["array.bogus=1".into()]).is_err());
    }

    #[test]
    fn round_trip_and_hash() {
        let c = ScenarioConfig::default();
        let s = c.to_toml_string().unwrap();
        let d = ScenarioConfig::from_toml_str(&s).unwrap();
        assert_eq!(c, d);
        assert_eq!(c.hash(), d.hash());
        let e = c.with_sweep_value(SweepVariable::Snr, 3.0).unwrap();
        assert_ne!(c.hash(), e.hash());
    }

    #[test]
    fn sweeps_keep_anchors_fixed() {
        let base = ScenarioConfig::default();
        let a = base.with_sweep_value(SweepVariable::CarrierFrequency, 1e10).unwrap().build_scenario_around(3, &base).unwrap();
        let b = base.with_sweep_value(SweepVariable::NumElements, 300.0).unwrap().build_scenario_around(3, &base).unwrap();
        assert_eq!(a.anchors, b.anchors);
    }

    #[test]
    fn pinned_config_rebuilds_the_scenario() {
        let c = ScenarioConfig::default();
        let s = c.build_scenario(9).unwrap();
        let text = c.pinned(&s).to_toml_string().unwrap();
        let p = ScenarioConfig::from_toml_str(&text).unwrap();
        let t = p.build_scenario(1234).unwrap();
        assert_eq!(s.anchors, t.anchors);
        assert_eq!(s.receiver, t.receiver);
        assert_eq!(s.array, t.array);
    }
}
