//! One contention round of the p-persistent slotted model.
//!
//! Every contender attempts independently in a slot with the same
//! probability. A round ends with an idle slot, a single successful
//! exchange or a collision. For each outcome this module gives its
//! probability, its duration and the radio-state time it adds up over the
//! stations of the cell, which the CAM and PSM chains then average over
//! their embedded states.

use crate::params::{FrameTimes, PerState, PhyMacParams, RadioState};
use crate::scalar::{binomial, powu, Real};

/// Durations (µs) of the exchanges that can follow a contention slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExchangeTimes<T> {
    pub frames: FrameTimes<T>,
    pub slot: T,
    pub sifs: T,
    pub difs: T,
    pub eifs: T,
}

impl<T: Real> ExchangeTimes<T> {
    pub fn new(p: &PhyMacParams<T>) -> Self {
        Self {
            frames: p.frame_times(),
            slot: p.slot_time,
            sifs: p.sifs,
            difs: p.difs,
            eifs: p.eifs,
        }
    }

    /// DIFS + RTS + CTS + DATA + ACK with three SIFS gaps.
    pub fn ap_success(&self) -> T {
        let f = &self.frames;
        self.difs + f.rts + f.cts + f.data + f.mac_ack + T::lit(3.0) * self.sifs
    }

    /// Basic-access TCP ACK: DIFS + TACK + SIFS + ACK.
    pub fn ack_success(&self) -> T {
        self.difs + self.frames.tcp_ack + self.sifs + self.frames.mac_ack
    }

    /// PS-POLL acknowledged by the AP: DIFS + PSPL + SIFS + ACK.
    pub fn poll_success(&self) -> T {
        self.difs + self.frames.ps_poll + self.sifs + self.frames.mac_ack
    }

    /// Airtime of the longest frame in a collision (without EIFS).
    pub fn collision_airtime(&self, polls: usize, acks: usize, ap: bool) -> T {
        let mut longest = T::zero();
        if polls > 0 {
            longest = longest.max(self.frames.ps_poll);
        }
        if acks > 0 {
            longest = longest.max(self.frames.tcp_ack);
        }
        if ap {
            longest = longest.max(self.frames.rts);
        }
        longest
    }

    pub fn collision(&self, polls: usize, acks: usize, ap: bool) -> T {
        self.collision_airtime(polls, acks, ap) + self.eifs
    }
}

/// Who holds a frame at the start of a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Contenders {
    /// Stations with a PS-POLL at the head of their queue.
    pub polls: usize,
    /// Stations with a TCP ACK at the head of their queue.
    pub acks: usize,
    /// Whether the AP contends with a data frame (sent with RTS/CTS).
    pub ap: bool,
}

impl Contenders {
    pub fn total(&self) -> usize {
        self.polls + self.acks + usize::from(self.ap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeKind {
    Idle,
    ApSuccess,
    AckSuccess,
    PollSuccess,
    Collision { polls: usize, acks: usize, ap: bool },
}

impl OutcomeKind {
    pub fn is_success(self) -> bool {
        matches!(
            self,
            OutcomeKind::ApSuccess | OutcomeKind::AckSuccess | OutcomeKind::PollSuccess
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome<T> {
    pub kind: OutcomeKind,
    pub probability: T,
    pub duration: T,
    /// Time spent in each radio state, summed over the `stations` awake
    /// stations of the cell.
    pub station_time: PerState<T>,
}

/// Radio-state time of an outcome, summed over `n` awake stations that all
/// overhear the medium.
pub fn station_time<T: Real>(kind: OutcomeKind, n: usize, t: &ExchangeTimes<T>) -> PerState<T> {
    let nf = T::count(n);
    let others = T::count(n.saturating_sub(1));
    let f = &t.frames;
    let mut s = PerState::zero();
    match kind {
        OutcomeKind::Idle => {
            s[RadioState::Id] = nf * t.slot;
        }
        OutcomeKind::ApSuccess => {
            // Receiver answers with CTS and ACK; everyone decodes the RTS,
            // third parties decode CTS/ACK and only listen to the data.
            s[RadioState::Id] = nf * (T::lit(3.0) * t.sifs + t.difs);
            s[RadioState::Tx] = f.mac_ack + f.cts;
            s[RadioState::RxD] = others * (f.mac_ack + f.cts) + nf * f.rts + f.data;
            s[RadioState::RxLs] = others * f.data;
        }
        OutcomeKind::AckSuccess => {
            s[RadioState::Id] = nf * (t.sifs + t.difs);
            s[RadioState::Tx] = f.tcp_ack;
            s[RadioState::RxD] = others * f.tcp_ack + nf * f.mac_ack;
        }
        OutcomeKind::PollSuccess => {
            s[RadioState::Id] = nf * (t.sifs + t.difs);
            s[RadioState::Tx] = f.ps_poll;
            s[RadioState::RxD] = others * f.ps_poll + nf * f.mac_ack;
        }
        OutcomeKind::Collision { polls, acks, ap } => {
            let busy = t.collision_airtime(polls, acks, ap);
            let (l, m) = (T::count(polls), T::count(acks));
            let bystanders = T::count(n - polls - acks);
            s[RadioState::Id] = nf * t.eifs;
            s[RadioState::Tx] = l * f.ps_poll + m * f.tcp_ack;
            s[RadioState::RxD] =
                l * (busy - f.ps_poll) + m * (busy - f.tcp_ack) + bystanders * busy;
        }
    }
    s
}

/// Radio-state time of one station that holds nothing and only overhears.
pub fn listener_time<T: Real>(kind: OutcomeKind, t: &ExchangeTimes<T>) -> PerState<T> {
    let f = &t.frames;
    let mut s = PerState::zero();
    match kind {
        OutcomeKind::Idle => s[RadioState::Id] = t.slot,
        OutcomeKind::ApSuccess => {
            s[RadioState::Id] = T::lit(3.0) * t.sifs + t.difs;
            s[RadioState::RxD] = f.rts + f.cts + f.mac_ack;
            s[RadioState::RxLs] = f.data;
        }
        OutcomeKind::AckSuccess => {
            s[RadioState::Id] = t.sifs + t.difs;
            s[RadioState::RxD] = f.tcp_ack + f.mac_ack;
        }
        OutcomeKind::PollSuccess => {
            s[RadioState::Id] = t.sifs + t.difs;
            s[RadioState::RxD] = f.ps_poll + f.mac_ack;
        }
        OutcomeKind::Collision { polls, acks, ap } => {
            s[RadioState::Id] = t.eifs;
            s[RadioState::RxD] = t.collision_airtime(polls, acks, ap);
        }
    }
    s
}

pub fn duration<T: Real>(kind: OutcomeKind, t: &ExchangeTimes<T>) -> T {
    match kind {
        OutcomeKind::Idle => t.slot,
        OutcomeKind::ApSuccess => t.ap_success(),
        OutcomeKind::AckSuccess => t.ack_success(),
        OutcomeKind::PollSuccess => t.poll_success(),
        OutcomeKind::Collision { polls, acks, ap } => t.collision(polls, acks, ap),
    }
}

/// All outcomes of one slot, resolved by how many PS-POLLs, TCP ACKs and
/// whether the AP's RTS take part.
pub fn outcomes<T: Real>(c: Contenders, beta: T, stations: usize, t: &ExchangeTimes<T>) -> Vec<Outcome<T>> {
    assert!(c.polls + c.acks <= stations, "more station contenders than stations");
    let total = c.total();
    let stay = T::one() - beta;
    let mut out = Vec::new();
    for l in 0..=c.polls {
        for m in 0..=c.acks {
            for a in 0..=usize::from(c.ap) {
                let attempts = l + m + a;
                let probability = binomial::<T>(c.polls, l)
                    * binomial::<T>(c.acks, m)
                    * powu(beta, attempts)
                    * powu(stay, total - attempts);
                let kind = match (l, m, a) {
                    (0, 0, 0) => OutcomeKind::Idle,
                    (0, 0, 1) => OutcomeKind::ApSuccess,
                    (0, 1, 0) => OutcomeKind::AckSuccess,
                    (1, 0, 0) => OutcomeKind::PollSuccess,
                    _ => OutcomeKind::Collision {
                        polls: l,
                        acks: m,
                        ap: a == 1,
                    },
                };
                out.push(Outcome {
                    kind,
                    probability,
                    duration: duration(kind, t),
                    station_time: station_time(kind, stations, t),
                });
            }
        }
    }
    out
}

/// Expectations over one cycle, i.e. the rounds up to and including the
/// next successful exchange.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleStats<T> {
    pub success_prob: T,
    /// Probability that the success ending the cycle is the AP's.
    pub ap_share: T,
    pub poll_share: T,
    pub ack_share: T,
    pub mean_length: T,
    /// Expected station-summed time per radio state.
    pub station_time: PerState<T>,
    /// Expected time per radio state of one passive listener.
    pub listener_time: PerState<T>,
}

pub fn cycle_stats<T: Real>(c: Contenders, beta: T, stations: usize, t: &ExchangeTimes<T>) -> CycleStats<T> {
    let outs = outcomes(c, beta, stations, t);
    let mut success = T::zero();
    let (mut ap, mut poll, mut ack) = (T::zero(), T::zero(), T::zero());
    let mut length = T::zero();
    let mut st = PerState::zero();
    let mut lt = PerState::zero();
    for o in &outs {
        match o.kind {
            OutcomeKind::ApSuccess => ap += o.probability,
            OutcomeKind::PollSuccess => poll += o.probability,
            OutcomeKind::AckSuccess => ack += o.probability,
            _ => {}
        }
        if o.kind.is_success() {
            success += o.probability;
        }
        length += o.probability * o.duration;
        st.add_scaled(&o.station_time, o.probability);
        lt.add_scaled(&listener_time(o.kind, t), o.probability);
    }
    assert!(success > T::zero(), "no contender can succeed");
    let inv = T::one() / success;
    CycleStats {
        success_prob: success,
        ap_share: ap * inv,
        poll_share: poll * inv,
        ack_share: ack * inv,
        mean_length: length * inv,
        station_time: st.scaled(inv),
        listener_time: lt.scaled(inv),
    }
}
