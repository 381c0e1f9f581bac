use serde::{Deserialize, Serialize};

use wlan_energy::{CurrentProfile, Mode, PhyMacParams};

use crate::SimError;

/// Traffic offered to each station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Workload {
    /// One endless TCP download per station.
    Long,
    /// Exponential think times, then a request for a file whose size in
    /// packets is geometric with mean `mean_file_bits / payload bits`.
    Short { think_rate: f64, mean_file_bits: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub mode: Mode,
    pub workload: Workload,
    pub stations: usize,
    pub params: PhyMacParams,
    pub currents: CurrentProfile,
    /// Simulated time, s.
    pub duration: f64,
    /// Initial period excluded from all statistics, s.
    pub warmup: f64,
    pub seed: u64,
    /// Send beacon frames and keep dozing stations awake for the listen
    /// window after each beacon.
    pub beacons: bool,
    /// Beacon frame size, bytes, sent at the control rate.
    pub beacon_bytes: u32,
    /// A station that polled gives up waiting after this long, ms.
    pub poll_timeout: f64,
    /// Number of batches for batch-means standard errors.
    pub batches: usize,
    /// Record an event trace.
    pub trace: bool,
}

impl SimConfig {
    /// Long downloads at `rate` Mb/s: 60 s with 5 s warm-up, no beacons.
    pub fn long(mode: Mode, stations: usize, rate: f64, seed: u64) -> Self {
        Self {
            mode,
            workload: Workload::Long,
            stations,
            params: PhyMacParams::with_data_rate(rate),
            currents: CurrentProfile::default(),
            duration: 60.0,
            warmup: 5.0,
            seed,
            beacons: false,
            beacon_bytes: 80,
            poll_timeout: 50.0,
            batches: 10,
            trace: false,
        }
    }

    /// Short downloads; beacons are on in PSM.
    pub fn short(mode: Mode, stations: usize, mean_think_time: f64, mean_file_bits: f64, seed: u64) -> Self {
        Self {
            workload: Workload::Short {
                think_rate: 1.0 / mean_think_time,
                mean_file_bits,
            },
            beacons: mode == Mode::Psm,
            duration: 600.0,
            warmup: 20.0,
            ..Self::long(mode, stations, 11.0, seed)
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        if self.stations == 0 {
            return bad("at least one station is required");
        }
        if !(self.warmup >= 0.0 && self.duration > self.warmup && self.duration.is_finite()) {
            return bad("duration must exceed warm-up, and warm-up must be non-negative");
        }
        if self.batches < 2 {
            return bad("at least two batches are needed for standard errors");
        }
        if !(self.poll_timeout > 0.0) {
            return bad("poll timeout must be positive");
        }
        if let Some(e) = wlan_energy::validate_params(&self.params, &self.currents).into_iter().next() {
            return Err(SimError::InvalidConfig(e.to_string()));
        }
        if let Workload::Short {
            think_rate,
            mean_file_bits,
        } = self.workload
        {
            if !(think_rate > 0.0 && think_rate.is_finite()) {
                return bad("think rate must be positive");
            }
            if !(mean_file_bits >= self.params.payload_bits()) {
                return bad("mean file size must be at least one packet");
            }
        }
        Ok(())
    }
}
