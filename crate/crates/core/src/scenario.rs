//! Anchors, receiver kinematics, array layout and the derived geometry table.
//!
//! Conventions:
//! - element `u` in slot `k` sits at `p0 + k*dt*v + (u - U)*d_a*s`;
//! - anchor `b` in slot `k` sits at `p_b0 + k*dt*v_bk`;
//! - `unit_dir[b,u,k]` points from the element towards the anchor, so
//!   `distance * unit_dir` is the anchor position minus the element position;
//! - `rel_velocity[b,u,k]` is the anchor velocity in slot `k` minus the
//!   receiver velocity.

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rng::{keyed_rng, STREAM_ANCHOR, STREAM_OFFSETS, STREAM_RECEIVER};
use crate::waveform::Waveform;
use crate::{Error, Result, Vec3};

/// Distances below this raise [`Error::DegenerateGeometry`].
pub const MIN_DISTANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Anchor {
    pub initial_position: Vec3,
    pub velocity_per_slot: Vec<Vec3>,
    pub clock_offset: f64,
    pub frequency_offset: f64,
}

impl Anchor {
    /// Anchor with the same velocity in every slot.
    pub fn constant(initial_position: Vec3, velocity: Vec3, num_slots: usize) -> Self {
        Self {
            initial_position,
            velocity_per_slot: vec![velocity; num_slots],
            clock_offset: 0.0,
            frequency_offset: 0.0,
        }
    }

    pub fn with_offsets(mut self, clock_offset: f64, frequency_offset: f64) -> Self {
        self.clock_offset = clock_offset;
        self.frequency_offset = frequency_offset;
        self
    }

    pub fn position(&self, k: usize, slot_spacing: f64) -> Vec3 {
        self.initial_position + (k as f64 * slot_spacing) * self.velocity_per_slot[k]
    }

    pub fn has_constant_velocity(&self) -> bool {
        self.velocity_per_slot.windows(2).all(|w| w[0] == w[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverTruth {
    pub position0: Vec3,
    pub velocity: Vec3,
    pub orientation: Vec3,
}

impl ReceiverTruth {
    pub fn new(position0: Vec3, velocity: Vec3, orientation: Vec3) -> Result<Self> {
        if (orientation.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::Contract(format!(
                "orientation must be a unit vector, norm is {}",
                orientation.norm()
            )));
        }
        Ok(Self { position0, velocity, orientation })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArraySpec {
    pub num_elements: usize,
    pub element_spacing: f64,
    /// Zero-based index `U` of the reference element.
    pub reference_index: usize,
}

impl ArraySpec {
    pub fn new(num_elements: usize, element_spacing: f64, reference_index: usize) -> Result<Self> {
        let a = Self { num_elements, element_spacing, reference_index };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_elements < 2 {
            return Err(Error::Contract("array needs at least two elements".into()));
        }
        if !(self.element_spacing > 0.0) {
            return Err(Error::Contract("element spacing must be positive".into()));
        }
        if self.reference_index >= self.num_elements {
            return Err(Error::Contract(format!(
                "reference index {} outside 0..{}",
                self.reference_index, self.num_elements
            )));
        }
        Ok(())
    }

    /// Signed offset of element `u` from the reference element along the array axis.
    pub fn offset(&self, u: usize) -> f64 {
        (u as f64 - self.reference_index as f64) * self.element_spacing
    }

    /// Array length `D = (N_U - 1) d_a`.
    pub fn aperture(&self) -> f64 {
        (self.num_elements - 1) as f64 * self.element_spacing
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotPlan {
    pub num_slots: usize,
    pub slot_spacing: f64,
}

impl SlotPlan {
    pub fn new(num_slots: usize, slot_spacing: f64) -> Result<Self> {
        let p = Self { num_slots, slot_spacing };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_slots < 1 {
            return Err(Error::Contract("need at least one slot".into()));
        }
        if !(self.slot_spacing > 0.0) {
            return Err(Error::Contract("slot spacing must be positive".into()));
        }
        Ok(())
    }

    /// Elapsed time of slot `k` relative to the first slot.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.slot_spacing
    }
}

/// How the element offset enters the Jacobian and the initializer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffsetConvention {
    /// `(u - U) * d_a`, the same offset the channel model uses.
    #[default]
    ReferenceIndex,
    /// `u * lambda / 2` counted from the first element (zero based).
    FirstElementHalfWavelength,
}

impl OffsetConvention {
    pub fn factor(&self, array: &ArraySpec, wavelength: f64, u: usize) -> f64 {
        match self {
            OffsetConvention::ReferenceIndex => array.offset(u),
            OffsetConvention::FirstElementHalfWavelength => u as f64 * wavelength / 2.0,
        }
    }
}

pub fn element_position(
    receiver: &ReceiverTruth,
    array: &ArraySpec,
    plan: &SlotPlan,
    u: usize,
    k: usize,
) -> Result<Vec3> {
    if u >= array.num_elements {
        return Err(Error::Contract(format!("element index {u} outside 0..{}", array.num_elements)));
    }
    if k >= plan.num_slots {
        return Err(Error::Contract(format!("slot index {k} outside 0..{}", plan.num_slots)));
    }
    Ok(receiver.position0 + plan.time(k) * receiver.velocity + array.offset(u) * receiver.orientation)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryTable {
    pub num_anchors: usize,
    pub num_elements: usize,
    pub num_slots: usize,
    /// Indexed by `k * N_U + u`.
    pub element_position: Vec<Vec3>,
    /// Indexed by [`GeometryTable::index`].
    pub distance: Vec<f64>,
    pub unit_dir: Vec<Vec3>,
    pub rel_velocity: Vec<Vec3>,
}

impl GeometryTable {
    /// Flat index of triple `(b, u, k)`: slot major, element minor, per anchor.
    #[inline]
    pub fn index(&self, b: usize, u: usize, k: usize) -> usize {
        (b * self.num_slots + k) * self.num_elements + u
    }

    pub fn len(&self) -> usize {
        self.distance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distance.is_empty()
    }

    pub fn element(&self, u: usize, k: usize) -> Vec3 {
        self.element_position[k * self.num_elements + u]
    }

    /// Triples per anchor, `N_U * N_K`.
    pub fn per_anchor(&self) -> usize {
        self.num_elements * self.num_slots
    }
}

pub fn build_geometry(
    anchors: &[Anchor],
    receiver: &ReceiverTruth,
    array: &ArraySpec,
    plan: &SlotPlan,
) -> Result<GeometryTable> {
    array.validate()?;
    plan.validate()?;
    for (b, a) in anchors.iter().enumerate() {
        if a.velocity_per_slot.len() != plan.num_slots {
            return Err(Error::Contract(format!(
                "anchor {b} has {} velocities, expected {}",
                a.velocity_per_slot.len(),
                plan.num_slots
            )));
        }
    }
    let (nb, nu, nk) = (anchors.len(), array.num_elements, plan.num_slots);
    let mut element_position = Vec::with_capacity(nu * nk);
    for k in 0..nk {
        for u in 0..nu {
            element_position.push(element_position_unchecked(receiver, array, plan, u, k));
        }
    }
    let n = nb * nu * nk;
    let mut distance = Vec::with_capacity(n);
    let mut unit_dir = Vec::with_capacity(n);
    let mut rel_velocity = Vec::with_capacity(n);
    for (b, a) in anchors.iter().enumerate() {
        for k in 0..nk {
            let pb = a.position(k, plan.slot_spacing);
            let vrel = a.velocity_per_slot[k] - receiver.velocity;
            for u in 0..nu {
                let disp = pb - element_position[k * nu + u];
                let d = disp.norm();
                if !(d >= MIN_DISTANCE) {
                    return Err(Error::DegenerateGeometry(format!(
                        "anchor {b} and element {u} coincide in slot {k} (distance {d:e} m)"
                    )));
                }
                distance.push(d);
                unit_dir.push(disp / d);
                rel_velocity.push(vrel);
            }
        }
    }
    Ok(GeometryTable { num_anchors: nb, num_elements: nu, num_slots: nk, element_position, distance, unit_dir, rel_velocity })
}

#[inline]
fn element_position_unchecked(r: &ReceiverTruth, a: &ArraySpec, p: &SlotPlan, u: usize, k: usize) -> Vec3 {
    r.position0 + p.time(k) * r.velocity + a.offset(u) * r.orientation
}

#[derive(Debug, Clone)]
pub struct FresnelReport {
    /// `0.62 sqrt(D^3 / lambda)`.
    pub lower_bound: f64,
    /// Fraunhofer distance `2 D^2 / lambda`.
    pub upper_bound: f64,
    /// Per triple, same indexing as the geometry table.
    pub inside: Vec<bool>,
    pub fraction_inside: f64,
}

pub fn fresnel_bounds(array: &ArraySpec, wavelength: f64) -> (f64, f64) {
    let d = array.aperture();
    (0.62 * (d.powi(3) / wavelength).sqrt(), 2.0 * d * d / wavelength)
}

pub fn in_fresnel_region(distance: f64, bounds: (f64, f64)) -> bool {
    bounds.0 < distance && distance < bounds.1
}

pub fn fresnel_check(array: &ArraySpec, wavelength: f64, geometry: &GeometryTable) -> FresnelReport {
    let bounds = fresnel_bounds(array, wavelength);
    let inside: Vec<bool> = geometry.distance.iter().map(|&d| in_fresnel_region(d, bounds)).collect();
    let count = inside.iter().filter(|&&x| x).count();
    let fraction_inside = if inside.is_empty() { 0.0 } else { count as f64 / inside.len() as f64 };
    FresnelReport { lower_bound: bounds.0, upper_bound: bounds.1, inside, fraction_inside }
}

/// Full simulation scenario: truth, layout and waveform.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub anchors: Vec<Anchor>,
    pub receiver: ReceiverTruth,
    pub array: ArraySpec,
    pub plan: SlotPlan,
    pub waveform: Waveform,
    pub pathloss_exponent: f64,
    pub offset_convention: OffsetConvention,
}

impl Scenario {
    pub fn geometry(&self) -> Result<GeometryTable> {
        build_geometry(&self.anchors, &self.receiver, &self.array, &self.plan)
    }

    pub fn num_anchors(&self) -> usize {
        self.anchors.len()
    }

    pub fn wavelength(&self) -> f64 {
        self.waveform.wavelength()
    }

    /// Centre of the array at the first slot.
    pub fn array_center(&self) -> Vec3 {
        array_center(&self.receiver, &self.array)
    }

    pub fn clock_offsets(&self) -> Vec<f64> {
        self.anchors.iter().map(|a| a.clock_offset).collect()
    }

    pub fn frequency_offsets(&self) -> Vec<f64> {
        self.anchors.iter().map(|a| a.frequency_offset).collect()
    }
}

pub fn array_center(receiver: &ReceiverTruth, array: &ArraySpec) -> Vec3 {
    let mid = (array.num_elements - 1) as f64 / 2.0 - array.reference_index as f64;
    receiver.position0 + mid * array.element_spacing * receiver.orientation
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityPattern {
    /// One random direction per anchor, reused in every slot.
    #[default]
    Constant,
    /// A fresh random direction in every slot.
    Distinct,
}

/// Random anchor layout parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchorLayout {
    pub count: usize,
    pub radius: f64,
    pub speed: f64,
    pub pattern: VelocityPattern,
    /// Anchors closer than this to the array segment are redrawn.
    pub min_clearance: f64,
    pub clock_offset_common: f64,
    pub clock_offset_spread: f64,
    pub frequency_offset_spread: f64,
}

impl Default for AnchorLayout {
    fn default() -> Self {
        Self {
            count: 5,
            radius: 50.0,
            speed: 10.0,
            pattern: VelocityPattern::Constant,
            min_clearance: 1.0,
            clock_offset_common: 1e-6,
            clock_offset_spread: 1e-9,
            frequency_offset_spread: 100.0,
        }
    }
}

pub fn random_unit<R: Rng>(rng: &mut R) -> Vec3 {
    loop {
        let v = Vector3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
        let n: f64 = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

fn distance_to_segment(x: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let t = ((x - a).dot(&ab) / ab.dot(&ab)).clamp(0.0, 1.0);
    (x - (a + t * ab)).norm()
}

/// Places anchors uniformly inside a ball around `center`.
///
/// Anchor `b` draws from its own stream keyed by `(seed, b)`, so the first
/// `n` anchors of a larger layout coincide with an `n`-anchor layout.
pub fn place_anchors(
    layout: &AnchorLayout,
    center: &Vec3,
    segment: (&Vec3, &Vec3),
    num_slots: usize,
    seed: u64,
) -> Vec<Anchor> {
    (0..layout.count)
        .map(|b| {
            let mut rng = keyed_rng(&[seed, STREAM_ANCHOR, b as u64]);
            let offset = loop {
                let x = Vector3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                );
                if x.norm() > 1.0 {
                    continue;
                }
                let pos = center + layout.radius * x;
                if distance_to_segment(&pos, segment.0, segment.1) >= layout.min_clearance {
                    break layout.radius * x;
                }
            };
            let base_dir = random_unit(&mut rng);
            let velocity_per_slot = (0..num_slots)
                .map(|k| match layout.pattern {
                    VelocityPattern::Constant => layout.speed * base_dir,
                    VelocityPattern::Distinct if k == 0 => layout.speed * base_dir,
                    VelocityPattern::Distinct => layout.speed * random_unit(&mut rng),
                })
                .collect();
            let mut orng = keyed_rng(&[seed, STREAM_OFFSETS, b as u64]);
            let clock_offset = layout.clock_offset_common
                + layout.clock_offset_spread * orng.random_range(-1.0..=1.0);
            let frequency_offset = layout.frequency_offset_spread * orng.random_range(-1.0..=1.0);
            Anchor { initial_position: center + offset, velocity_per_slot, clock_offset, frequency_offset }
        })
        .collect()
}

/// Receiver with a random orientation and a random velocity direction.
pub fn random_receiver(position0: Vec3, speed: f64, seed: u64) -> ReceiverTruth {
    let mut rng = keyed_rng(&[seed, STREAM_RECEIVER]);
    let orientation = random_unit(&mut rng);
    let velocity = speed * random_unit(&mut rng);
    ReceiverTruth { position0, velocity, orientation }
}

/// Random scenario in the style of the reference study: receiver at
/// `position0` with random orientation, anchors in a ball around the array
/// centre.
pub fn random_scenario(
    layout: &AnchorLayout,
    position0: Vec3,
    receiver_speed: f64,
    array_len: usize,
    plan: SlotPlan,
    waveform: Waveform,
    seed: u64,
) -> Result<Scenario> {
    let array = ArraySpec::new(array_len, waveform.wavelength() / 2.0, 0)?;
    plan.validate()?;
    let receiver = random_receiver(position0, receiver_speed, seed);
    let center = array_center(&receiver, &array);
    let last = receiver.position0 + array.offset(array.num_elements - 1) * receiver.orientation;
    let first = receiver.position0 + array.offset(0) * receiver.orientation;
    let anchors = place_anchors(layout, &center, (&first, &last), plan.num_slots, seed);
    Ok(Scenario {
        anchors,
        receiver,
        array,
        plan,
        waveform,
        pathloss_exponent: 1.0,
        offset_convention: OffsetConvention::ReferenceIndex,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rx() -> ReceiverTruth {
        ReceiverTruth::new(Vec3::zeros(), Vec3::new(5.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0)).unwrap()
    }

    #[test]
    fn element_position_examples() {
        let r = rx();
        let a = ArraySpec::new(10, 0.15, 0).unwrap();
        let p = SlotPlan::new(3, 0.5).unwrap();
        assert_eq!(element_position(&r, &a, &p, 0, 0).unwrap(), r.position0);
        let e = element_position(&r, &a, &p, 2, 0).unwrap();
        assert!((e - Vec3::new(0.30, 0.0, 0.0)).norm() < 1e-15);
        let e = element_position(&r, &a, &p, 0, 2).unwrap();
        assert_eq!(e, Vec3::new(5.0, 0.0, 0.0));
        assert!(element_position(&r, &a, &p, 10, 0).is_err());
        assert!(element_position(&r, &a, &p, 0, 3).is_err());
    }

    #[test]
    fn unit_dir_points_towards_anchor() {
        let r = ReceiverTruth::new(Vec3::zeros(), Vec3::new(5.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 1.0)).unwrap();
        let a = ArraySpec::new(2, 0.15, 0).unwrap();
        let p = SlotPlan::new(1, 0.5).unwrap();
        let anchor = Anchor::constant(Vec3::new(100.0, 0.0, 0.0), Vec3::new(10.0, 0.0, 0.0), 1);
        let g = build_geometry(&[anchor], &r, &a, &p).unwrap();
        let i = g.index(0, 0, 0);
        assert_eq!(g.distance[i], 100.0);
        assert_eq!(g.unit_dir[i], Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(g.rel_velocity[i], Vec3::new(5.0, 0.0, 0.0));
    }

    #[test]
    fn coincident_points_are_rejected() {
        let r = rx();
        let a = ArraySpec::new(2, 0.15, 0).unwrap();
        let p = SlotPlan::new(1, 0.5).unwrap();
        let anchor = Anchor::constant(Vec3::zeros(), Vec3::zeros(), 1);
        assert!(matches!(build_geometry(&[anchor], &r, &a, &p), Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn fresnel_examples() {
        let a = ArraySpec::new(101, 0.15, 0).unwrap();
        let (lo, hi) = fresnel_bounds(&a, 0.03);
        assert!((lo - 0.62 * (3375.0f64 / 0.03).sqrt()).abs() < 1e-9);
        assert!((lo - 207.95).abs() < 0.01);
        assert!(!in_fresnel_region(50.0, (lo, hi)));
        assert!(in_fresnel_region(1000.0, (lo, hi)));
        assert!(!in_fresnel_region(f64::INFINITY, (lo, hi)));
        assert!(!in_fresnel_region(lo, (lo, hi)));
    }

    #[test]
    fn anchor_layout_is_prefix_consistent() {
        let layout = AnchorLayout { count: 5, ..Default::default() };
        let small = AnchorLayout { count: 3, ..layout };
        let c = Vec3::zeros();
        let s = (&Vec3::new(-1.0, 0.0, 0.0), &Vec3::new(1.0, 0.0, 0.0));
        let big = place_anchors(&layout, &c, s, 2, 9);
        let few = place_anchors(&small, &c, s, 2, 9);
        assert_eq!(&big[..3], &few[..]);
        for a in &big {
            assert!(a.initial_position.norm() <= 50.0);
            assert!(a.has_constant_velocity());
            assert!((a.velocity_per_slot[0].norm() - 10.0).abs() < 1e-12);
        }
    }
}
