//! Types shared by the long-file and short-file models.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::markov::MarkovError;
use crate::params::{ParamError, PerState, RadioState};
use crate::saturation::SaturationError;
use crate::scalar::Real;

/// Power management mode of the stations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Constantly awake.
    Cam,
    /// Static power save: doze between beacons, fetch with PS-POLL.
    Psm,
}

impl Mode {
    pub const ALL: [Mode; 2] = [Mode::Cam, Mode::Psm];

    pub fn label(self) -> &'static str {
        match self {
            Mode::Cam => "cam",
            Mode::Psm => "psm",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown mode `{0}` (expected cam or psm)")]
pub struct UnknownMode(pub String);

impl FromStr for Mode {
    type Err = UnknownMode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cam" => Ok(Mode::Cam),
            "psm" => Ok(Mode::Psm),
            _ => Err(UnknownMode(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("station count must be at least {min}, got {got}")]
    TooFewStations { min: usize, got: usize },
    #[error("attempt probability table has {got} entries, need {needed}")]
    TableTooShort { needed: usize, got: usize },
    #[error("invalid parameter: {0}")]
    Param(#[from] ParamError),
    #[error(transparent)]
    Saturation(#[from] SaturationError),
    #[error(transparent)]
    Markov(#[from] MarkovError),
    #[error("{0}")]
    Invalid(String),
}

/// Throughput and energy figures of a long-download scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct LongFileResult<T> {
    pub mode: Mode,
    pub stations: usize,
    /// Data rate, Mb/s.
    pub data_rate: T,
    /// AP packet successes per µs.
    pub throughput: T,
    /// Aggregate goodput, Mb/s.
    pub throughput_mbps: T,
    /// Fraction of time a station spends in each radio state.
    pub fractions: PerState<T>,
    /// Average station current, mA.
    pub average_current: T,
    /// Per-station goodput over average current, Mb per coulomb.
    pub efficiency: T,
    /// Modelling caveats that apply to this result.
    pub caveats: Vec<String>,
}

impl<T: Real> LongFileResult<T> {
    pub fn fraction(&self, r: RadioState) -> T {
        self.fractions[r]
    }

    /// Mb/s per station divided by A.
    pub(crate) fn efficiency_of(throughput_mbps: T, stations: usize, current_ma: T) -> T {
        throughput_mbps / T::count(stations) / (current_ma / T::lit(1000.0))
    }
}
