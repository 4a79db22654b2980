use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Prediction-state layout. The variants share a common prefix, so a
/// variant's state is the first `nx()` entries of the full vector.
pub mod sx {
    pub const VX: usize = 0;
    pub const VY: usize = 1;
    pub const YAW_RATE: usize = 2;
    pub const S: usize = 3;
    pub const EY: usize = 4;
    pub const EPSI: usize = 5;
    pub const DELTA_F: usize = 6;
    pub const FX_F: usize = 7;
    pub const MZ: usize = 8;
    pub const DELTA_R: usize = 9;
    pub const LEN: usize = 10;
}

/// Control-input layout, same prefix property as [`sx`].
pub mod ux {
    pub const DDELTA_F: usize = 0;
    pub const DFX_F: usize = 1;
    pub const P_B: usize = 2;
    pub const DMZ: usize = 3;
    pub const EPS_MZ: usize = 4;
    pub const DDELTA_R: usize = 5;
    pub const LEN: usize = 6;
}

/// The three path-tracking controller formulations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    /// Front steering and front longitudinal force only.
    #[serde(rename = "bas")]
    Bas,
    /// Adds the braking split and the direct yaw moment.
    #[serde(rename = "mz")]
    Mz,
    /// Adds rear-wheel steering.
    #[serde(rename = "mz-dr")]
    MzDr,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Bas, Variant::Mz, Variant::MzDr];

    pub fn nx(self) -> usize {
        match self {
            Variant::Bas => 8,
            Variant::Mz => 9,
            Variant::MzDr => 10,
        }
    }

    pub fn nu(self) -> usize {
        match self {
            Variant::Bas => 2,
            Variant::Mz => 5,
            Variant::MzDr => 6,
        }
    }

    /// Number of tracked outputs.
    pub fn ny(self) -> usize {
        match self {
            Variant::Bas => 5,
            Variant::Mz => 6,
            Variant::MzDr => 7,
        }
    }

    pub fn has_yaw_moment(self) -> bool {
        self != Variant::Bas
    }

    pub fn has_rear_steer(self) -> bool {
        self == Variant::MzDr
    }

    /// Whether the stability controller runs with relaxed thresholds.
    pub fn relaxed_vsc(self) -> bool {
        self.has_yaw_moment()
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Bas => "bas",
            Variant::Mz => "mz",
            Variant::MzDr => "mz-dr",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "bas" => Ok(Variant::Bas),
            "mz" => Ok(Variant::Mz),
            "mz-dr" | "mzdr" => Ok(Variant::MzDr),
            _ => Err(Error::UnknownVariant(s.to_string())),
        }
    }
}
