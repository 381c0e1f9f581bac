//! Discrete-event simulator for an 802.11b cell of TCP download stations
//! in CAM or static PSM, with per-station radio-state energy accounting.
//!
//! ```
//! use wlan_energy::Mode;
//! use wlan_sim::{estimate_metrics, run_sim, SimConfig};
//!
//! let mut cfg = SimConfig::long(Mode::Cam, 2, 11.0, 7);
//! cfg.duration = 2.0;
//! cfg.warmup = 0.5;
//! let res = run_sim(&cfg).unwrap();
//! let m = estimate_metrics(&res, &cfg).unwrap();
//! assert!(m.throughput_mbps.value > 3.0 && m.throughput_mbps.value < 4.5);
//! ```

mod config;
mod engine;
mod metrics;
mod trace;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{SimConfig, Workload};
pub use engine::run_sim;
pub use metrics::{estimate_metrics, Estimate, SimMetrics};
pub use trace::{write_trace, TraceRecord};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// A conservation rule was violated; always a simulator bug.
    #[error("simulator invariant violated: {0}")]
    Invariant(String),
    #[error("no file completed inside the measurement window")]
    NoCompletedFiles,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    /// Transmission attempts, including those that collided.
    pub attempts: u64,
    pub collisions: u64,
    pub data_frames: u64,
    pub beacons: u64,
    pub polls: u64,
    pub tcp_acks: u64,
    pub requests: u64,
    /// Airtime of HTTP request exchanges, which the analytic models omit.
    pub request_airtime_ns: u64,
    /// Polls that were never answered before the timer fired.
    pub poll_timeouts: u64,
    /// Frames pulled back from the NIC because the receiver dozed.
    pub returned_to_buffer: u64,
}

/// Raw output of one replication. Times are in nanoseconds inside the
/// measurement window (after warm-up).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub stations: usize,
    pub measured_ns: u64,
    pub batch_ns: Vec<u64>,
    /// `state_ns[i][r]`: time of station `i` in radio state `r`.
    pub state_ns: Vec<[u64; 5]>,
    pub batch_state_ns: Vec<Vec<[u64; 5]>>,
    pub ap_data_successes: u64,
    pub batch_ap_successes: Vec<u64>,
    pub files_completed: Vec<u64>,
    /// Sojourn times in seconds, per station.
    pub sojourn_samples: Vec<Vec<f64>>,
    pub batch_files: Vec<u64>,
    pub batch_sojourn_sum: Vec<f64>,
    /// Charge drawn per station, C.
    pub charge: Vec<f64>,
    pub counters: Counters,
    pub trace: Vec<TraceRecord>,
}

impl SimResult {
    /// Stations that had a poll time out; zero when no frame got stuck.
    pub fn stuck_detections(&self) -> u64 {
        self.counters.poll_timeouts
    }
}
