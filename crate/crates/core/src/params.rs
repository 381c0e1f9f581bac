//! Physical/MAC constants, current profiles, radio states and frame airtimes.
//!
//! Durations are in microseconds and rates in Mb/s, so `bits / rate` is
//! directly an airtime in microseconds.

use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

/// 802.11b timing, frame sizes and DCF backoff parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct PhyMacParams<T> {
    pub slot_time: T,
    pub sifs: T,
    pub difs: T,
    pub eifs: T,
    /// PLCP preamble airtime, sent on every frame regardless of rate.
    pub preamble_time: T,
    /// PLCP header airtime.
    pub plcp_header_time: T,
    /// Rate for control frames (RTS, CTS, ACK, PS-POLL), Mb/s.
    pub control_rate: T,
    /// Rate for data-bearing frames (TCP data, TCP ACK), Mb/s.
    pub data_rate: T,
    pub rts_bytes: u32,
    pub cts_bytes: u32,
    pub mac_ack_bytes: u32,
    pub ps_poll_bytes: u32,
    pub mac_header_bytes: u32,
    pub ip_header_bytes: u32,
    pub tcp_header_bytes: u32,
    /// TCP segment carried by an ACK (header only, no payload).
    pub tcp_ack_bytes: u32,
    pub tcp_payload_bytes: u32,
    pub cw_min: u32,
    /// Number of backoff doublings `K`; `cw_max = 2^K * cw_min`.
    pub backoff_stages: u32,
    /// Frames strictly longer than this (bytes) use RTS/CTS.
    pub rts_threshold: u32,
    /// Beacon interval, ms.
    pub beacon_interval: T,
    /// Time a dozing station stays awake around each beacon, ms.
    pub beacon_listen_time: T,
    /// Receiver-advertised TCP window, packets.
    pub tcp_window: u32,
}

impl<T: Real> Default for PhyMacParams<T> {
    fn default() -> Self {
        Self {
            slot_time: T::lit(20.0),
            sifs: T::lit(10.0),
            difs: T::lit(50.0),
            eifs: T::lit(364.0),
            preamble_time: T::lit(144.0),
            plcp_header_time: T::lit(48.0),
            control_rate: T::lit(2.0),
            data_rate: T::lit(11.0),
            rts_bytes: 20,
            cts_bytes: 14,
            mac_ack_bytes: 14,
            ps_poll_bytes: 20,
            mac_header_bytes: 34,
            ip_header_bytes: 20,
            tcp_header_bytes: 20,
            tcp_ack_bytes: 20,
            tcp_payload_bytes: 1500,
            cw_min: 32,
            backoff_stages: 5,
            rts_threshold: 300,
            beacon_interval: T::lit(100.0),
            beacon_listen_time: T::lit(5.0),
            tcp_window: 20,
        }
    }
}

impl<T: Real> PhyMacParams<T> {
    /// Defaults with a different data rate (Mb/s).
    pub fn with_data_rate(rate: T) -> Self {
        Self {
            data_rate: rate,
            ..Self::default()
        }
    }

    /// Size in bytes of the MAC frame for `kind`.
    pub fn frame_bytes(&self, kind: FrameKind) -> u32 {
        match kind {
            FrameKind::TcpData => {
                self.mac_header_bytes + self.ip_header_bytes + self.tcp_header_bytes + self.tcp_payload_bytes
            }
            FrameKind::TcpAck => self.mac_header_bytes + self.ip_header_bytes + self.tcp_ack_bytes,
            FrameKind::MacAck => self.mac_ack_bytes,
            FrameKind::Rts => self.rts_bytes,
            FrameKind::Cts => self.cts_bytes,
            FrameKind::PsPoll => self.ps_poll_bytes,
        }
    }

    /// Airtime of one frame: fixed PLCP overhead plus payload bits at the
    /// rate that applies to the frame kind.
    pub fn frame_time(&self, kind: FrameKind) -> T {
        let rate = if kind.is_control() {
            self.control_rate
        } else {
            self.data_rate
        };
        let bits = T::lit(8.0 * f64::from(self.frame_bytes(kind)));
        self.preamble_time + self.plcp_header_time + bits / rate
    }

    pub fn frame_times(&self) -> FrameTimes<T> {
        FrameTimes {
            data: self.frame_time(FrameKind::TcpData),
            tcp_ack: self.frame_time(FrameKind::TcpAck),
            mac_ack: self.frame_time(FrameKind::MacAck),
            rts: self.frame_time(FrameKind::Rts),
            cts: self.frame_time(FrameKind::Cts),
            ps_poll: self.frame_time(FrameKind::PsPoll),
        }
    }

    /// TCP payload bits per data packet; converts packets/µs into Mb/s.
    pub fn payload_bits(&self) -> T {
        T::lit(8.0 * f64::from(self.tcp_payload_bytes))
    }

    /// Largest contention window, `2^K * cw_min`.
    pub fn cw_max(&self) -> u32 {
        self.cw_min << self.backoff_stages
    }

    /// Whether a frame of `kind` is sent with an RTS/CTS handshake.
    pub fn uses_rts(&self, kind: FrameKind) -> bool {
        !kind.is_control() && self.frame_bytes(kind) > self.rts_threshold
    }
}

/// Current draw (mA) in each radio state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct CurrentProfile<T> {
    pub transmit: T,
    pub receive_decode: T,
    pub receive_listen: T,
    pub idle: T,
    pub sleep: T,
}

impl<T: Real> Default for CurrentProfile<T> {
    fn default() -> Self {
        Self {
            transmit: T::lit(300.0),
            receive_decode: T::lit(170.0),
            receive_listen: T::lit(170.0),
            idle: T::lit(170.0),
            sleep: T::lit(10.0),
        }
    }
}

impl<T: Real> CurrentProfile<T> {
    pub fn current(&self, state: RadioState) -> T {
        match state {
            RadioState::Tx => self.transmit,
            RadioState::RxD => self.receive_decode,
            RadioState::RxLs => self.receive_listen,
            RadioState::Id => self.idle,
            RadioState::Sl => self.sleep,
        }
    }

    /// Average current for a vector of time fractions.
    pub fn average(&self, fractions: &PerState<T>) -> T {
        RadioState::ALL
            .iter()
            .map(|&s| self.current(s) * fractions[s])
            .sum()
    }
}

/// Radio states of a station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RadioState {
    /// Transmitting.
    Tx,
    /// Receiving and decoding.
    RxD,
    /// Receiving without decoding (medium reserved for someone else).
    RxLs,
    /// Awake, medium idle.
    Id,
    /// Dozing.
    Sl,
}

impl RadioState {
    pub const ALL: [RadioState; 5] = [
        RadioState::Tx,
        RadioState::RxD,
        RadioState::RxLs,
        RadioState::Id,
        RadioState::Sl,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            RadioState::Tx => "Tx",
            RadioState::RxD => "RxD",
            RadioState::RxLs => "RxLs",
            RadioState::Id => "Id",
            RadioState::Sl => "Sl",
        }
    }
}

impl fmt::Display for RadioState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One value per radio state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerState<T>(pub [T; 5]);

impl<T: Real> PerState<T> {
    pub fn zero() -> Self {
        Self([T::zero(); 5])
    }

    pub fn total(&self) -> T {
        self.0.iter().copied().sum()
    }

    pub fn scaled(&self, k: T) -> Self {
        Self(self.0.map(|v| v * k))
    }

    pub fn add_scaled(&mut self, other: &Self, k: T) {
        for (a, b) in self.0.iter_mut().zip(other.0.iter()) {
            *a += *b * k;
        }
    }
}

impl<T> Index<RadioState> for PerState<T> {
    type Output = T;
    fn index(&self, s: RadioState) -> &T {
        &self.0[s.index()]
    }
}

impl<T> IndexMut<RadioState> for PerState<T> {
    fn index_mut(&mut self, s: RadioState) -> &mut T {
        &mut self.0[s.index()]
    }
}

/// Frame types exchanged in the download scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FrameKind {
    TcpData,
    TcpAck,
    MacAck,
    Rts,
    Cts,
    PsPoll,
}

impl FrameKind {
    pub const ALL: [FrameKind; 6] = [
        FrameKind::TcpData,
        FrameKind::TcpAck,
        FrameKind::MacAck,
        FrameKind::Rts,
        FrameKind::Cts,
        FrameKind::PsPoll,
    ];

    pub fn is_control(self) -> bool {
        matches!(
            self,
            FrameKind::MacAck | FrameKind::Rts | FrameKind::Cts | FrameKind::PsPoll
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown frame kind `{0}`")]
pub struct UnknownFrameKind(pub String);

impl FromStr for FrameKind {
    type Err = UnknownFrameKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "data" | "tcpdata" => Ok(FrameKind::TcpData),
            "tack" | "tcpack" => Ok(FrameKind::TcpAck),
            "ack" | "macack" => Ok(FrameKind::MacAck),
            "rts" => Ok(FrameKind::Rts),
            "cts" => Ok(FrameKind::Cts),
            "pspoll" | "pspl" => Ok(FrameKind::PsPoll),
            _ => Err(UnknownFrameKind(s.to_string())),
        }
    }
}

/// Frame airtime lookup by name; fails for names that are not a frame kind.
pub fn frame_time<T: Real>(kind: &str, params: &PhyMacParams<T>) -> Result<T, UnknownFrameKind> {
    Ok(params.frame_time(kind.parse()?))
}

/// On-air durations (µs) of every frame kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameTimes<T> {
    pub data: T,
    pub tcp_ack: T,
    pub mac_ack: T,
    pub rts: T,
    pub cts: T,
    pub ps_poll: T,
}

/// A violated parameter invariant.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamError {
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("control rate must not exceed data rate")]
    ControlRateAboveDataRate,
    #[error("rts threshold must send data frames with RTS/CTS and TCP ACK frames with basic access")]
    RtsThresholdOutOfRange,
    #[error("contention window minimum must be at least 2")]
    ContentionWindowTooSmall,
    #[error("tcp window must be at least one packet")]
    EmptyWindow,
    #[error("beacon listen time must be shorter than the beacon interval")]
    ListenLongerThanBeacon,
    #[error("transmit current must be at least the receive-decode current")]
    TransmitBelowReceive,
    #[error("receive-decode current must be at least the sleep current")]
    ReceiveBelowSleep,
    #[error("sleep current must be smallest")]
    SleepNotSmallest,
}

/// Checks every invariant and returns all violations (empty when valid).
pub fn validate_params<T: Real>(p: &PhyMacParams<T>, c: &CurrentProfile<T>) -> Vec<ParamError> {
    let mut errors = Vec::new();
    let durations = [
        ("slot_time", p.slot_time),
        ("sifs", p.sifs),
        ("difs", p.difs),
        ("eifs", p.eifs),
        ("preamble_time", p.preamble_time),
        ("plcp_header_time", p.plcp_header_time),
        ("control_rate", p.control_rate),
        ("data_rate", p.data_rate),
        ("beacon_interval", p.beacon_interval),
        ("beacon_listen_time", p.beacon_listen_time),
    ];
    for (name, v) in durations {
        if !(v > T::zero()) || !v.is_finite() {
            errors.push(ParamError::NotPositive(name));
        }
    }
    let sizes = [
        ("rts_bytes", p.rts_bytes),
        ("cts_bytes", p.cts_bytes),
        ("mac_ack_bytes", p.mac_ack_bytes),
        ("ps_poll_bytes", p.ps_poll_bytes),
        ("mac_header_bytes", p.mac_header_bytes),
        ("tcp_payload_bytes", p.tcp_payload_bytes),
    ];
    for (name, v) in sizes {
        if v == 0 {
            errors.push(ParamError::NotPositive(name));
        }
    }
    if p.control_rate > p.data_rate {
        errors.push(ParamError::ControlRateAboveDataRate);
    }
    if !p.uses_rts(FrameKind::TcpData) || p.uses_rts(FrameKind::TcpAck) {
        errors.push(ParamError::RtsThresholdOutOfRange);
    }
    if p.cw_min < 2 {
        errors.push(ParamError::ContentionWindowTooSmall);
    }
    if p.tcp_window == 0 {
        errors.push(ParamError::EmptyWindow);
    }
    if p.beacon_listen_time >= p.beacon_interval {
        errors.push(ParamError::ListenLongerThanBeacon);
    }

    let currents = [
        ("transmit current", c.transmit),
        ("receive-decode current", c.receive_decode),
        ("receive-listen current", c.receive_listen),
        ("idle current", c.idle),
        ("sleep current", c.sleep),
    ];
    for (name, v) in currents {
        if !(v > T::zero()) || !v.is_finite() {
            errors.push(ParamError::NotPositive(name));
        }
    }
    if c.transmit < c.receive_decode {
        errors.push(ParamError::TransmitBelowReceive);
    }
    if c.receive_decode < c.sleep {
        errors.push(ParamError::ReceiveBelowSleep);
    }
    if [c.transmit, c.receive_decode, c.receive_listen, c.idle]
        .iter()
        .any(|&v| v <= c.sleep)
    {
        errors.push(ParamError::SleepNotSmallest);
    }
    errors
}
