//! Fisher information: per-triple channel FIM, the channel-to-motion Jacobian,
//! the equivalent FIM after nuisance marginalization and the constrained CRB.
//!
//! Parameter orders used throughout:
//! - motion state `kappa_1 = [p (3), v (3), s (3)]`;
//! - channel block of anchor `b`: `[tau (n), f_d (n), beta (n), delta_b, epsilon_b]`
//!   with `n = N_U N_K` and local index `k * N_U + u`.

mod bounds;
mod entries;
mod jacobian;

pub use bounds::*;
pub use entries::*;
pub use jacobian::*;

use serde::{Deserialize, Serialize};

/// Which measurement families contribute information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementSelection {
    #[default]
    Joint,
    DelayOnly,
    DopplerOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FimOptions {
    /// Multiply the Doppler entry by `E_S`. Off by default, leaving the entry
    /// as `8 pi^2 |beta|^2 sigma^2 / N_o`.
    pub doppler_fim_includes_energy: bool,
    pub selection: MeasurementSelection,
}

/// Parameters treated as unknown nuisances. Known ones are dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NuisanceSet {
    pub gains: bool,
    pub clock_offsets: bool,
    pub frequency_offsets: bool,
}

impl NuisanceSet {
    pub const ALL: NuisanceSet = NuisanceSet { gains: true, clock_offsets: true, frequency_offsets: true };
    pub const NONE: NuisanceSet = NuisanceSet { gains: false, clock_offsets: false, frequency_offsets: false };
    /// Unknown gains and frequency offsets; the clock offsets are not
    /// observable without delay measurements.
    pub const DOPPLER_ONLY: NuisanceSet = NuisanceSet { gains: true, clock_offsets: false, frequency_offsets: true };
}

impl Default for NuisanceSet {
    fn default() -> Self {
        Self::ALL
    }
}
