//! Sweeps of the analytic models and the simulator over mode, station
//! count and data rate, written out as plot-ready CSV.

pub mod config;
pub mod output;
pub mod sweep;

pub use config::{parse_n_range, SweepConfig};
pub use output::{write_outputs, OUTPUT_FILES, RECONCILIATION_HEADER};
pub use sweep::{run_sweep, LongRow, ReconRow, ShortRow, Source, SweepOutput};
