//! Near-field localization of a moving receiver that carries a uniform linear
//! extra-large aperture array.
//!
//! The crate computes constrained Cramér-Rao bounds on position, velocity and
//! array orientation from delay and Doppler observations, and runs a
//! maximum-likelihood estimator (geometric initializer followed by block
//! coordinate descent with a Riemannian orientation step) against synthetic
//! measurements.
//!
//! Module map:
//! - [`scenario`]: anchors, receiver kinematics, array layout, geometry tables.
//! - [`waveform`]: raised-cosine pulse and its spectral/temporal statistics.
//! - [`channel`]: per-(anchor, element, slot) delay, Doppler and gain.
//! - [`fisher`]: channel FIM, transform Jacobian, EFIM, C-CRB, localizability.
//! - [`measurement`]: Gaussian delay/Doppler observations.
//! - [`initializer`]: TDoA based geometric initializer.
//! - [`estimator`]: ML refinement.
//! - [`harness`]: configs, sweeps, campaigns, CSV output.
//!
//! Indices are zero based throughout: anchors `b`, elements `u`, slots `k`.
//! Slot `k` sits `k * slot_spacing` seconds after the first slot.

pub mod channel;
pub mod error;
pub mod estimator;
pub mod fisher;
pub mod harness;
pub mod initializer;
pub mod linalg;
pub mod measurement;
pub mod rng;
pub mod scenario;
pub mod waveform;

pub use error::{Error, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub type Vec3 = nalgebra::Vector3<f64>;
