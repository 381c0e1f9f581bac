//! Analytical throughput and energy models for 802.11b stations that
//! download over TCP in constantly-awake (CAM) or static power-save (PSM)
//! mode.
//!
//! Models are generic over the scalar ([`Real`], `f32` or `f64`). The
//! `f64` aliases below are what most callers want.

pub mod cam_long;
pub mod contention;
mod linalg;
pub mod markov;
pub mod model;
pub mod params;
pub mod psm_long;
pub mod saturation;
pub mod scalar;
pub mod short_files;

pub use cam_long::{
    build_cam_chain, cam_average_current, cam_cycle_length, cam_state_times, cam_throughput, passive_current,
};
pub use psm_long::{
    build_psm_chain, psm_average_current, psm_cycle_length, psm_n1_model, psm_state_times, psm_throughput,
    PsmChainState,
};
pub use short_files::{
    beacon_dtmc, cam_short_model, psm_short_model, q_departures, short_model, time_in_state, ShortFileSetup,
    WakeCorrection,
};
pub use markov::{birth_death_stationary, mrgp_ratio, FiniteCtmc, FiniteDtmc, MarkovError};
pub use model::{Mode, ModelError};
pub use params::{
    frame_time, validate_params, FrameKind, FrameTimes, ParamError, PerState, RadioState,
};
pub use saturation::{attempt_rate, build_table, solve_attempt_prob, SaturationError};
pub use scalar::Real;

pub type PhyMacParams = params::PhyMacParams<f64>;
pub type CurrentProfile = params::CurrentProfile<f64>;
pub type AttemptProbTable = saturation::AttemptProbTable<f64>;
pub type CamLongScenario = cam_long::CamLongScenario<f64>;
pub type PsmLongScenario = psm_long::PsmLongScenario<f64>;
pub type ShortFileScenario = short_files::ShortFileScenario<f64>;
pub type ShortFileResult = short_files::ShortFileResult<f64>;
pub type LongFileResult = model::LongFileResult<f64>;
