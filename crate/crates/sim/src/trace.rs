use std::io::{self, Write};

use serde::{Deserialize, Serialize};

/// One line of the event trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub time_us: f64,
    /// `ap` or `sta<i>`.
    pub entity: String,
    pub event: String,
    pub detail: String,
}

/// Writes records as tab-separated lines: time (µs), entity, event, detail.
pub fn write_trace<W: Write>(records: &[TraceRecord], mut out: W) -> io::Result<()> {
    for r in records {
        writeln!(out, "{:.3}\t{}\t{}\t{}", r.time_us, r.entity, r.event, r.detail)?;
    }
    Ok(())
}
