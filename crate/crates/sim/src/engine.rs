//! Slot-synchronous DCF simulator.
//!
//! Time is kept in integer nanoseconds so per-station state times add up to
//! the measured span exactly. Contention runs on a slot grid that restarts
//! after every busy period: a success is followed by DIFS and a collision
//! by EIFS before the next slot. Stretches with no contender jump straight
//! to the next timed event.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Geometric};

use wlan_energy::{FrameKind, Mode, RadioState};

use crate::config::{SimConfig, Workload};
use crate::trace::TraceRecord;
use crate::{Counters, SimError, SimResult};

/// Microseconds to nanoseconds, rounding fractional airtimes up.
fn ns(us: f64) -> u64 {
    let v = us * 1000.0;
    let r = v.round();
    if (v - r).abs() < 1e-6 {
        r as u64
    } else {
        v.ceil() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StaFrame {
    PsPoll,
    TcpAck,
    Request,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ApFrame {
    Data { sta: usize },
    Beacon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Entity {
    Ap,
    Sta(usize),
}

#[derive(Debug, Default, Clone)]
struct Dcf {
    backoff: Option<u32>,
    stage: u32,
}

#[derive(Debug, Default, Clone)]
struct Sta {
    queue: VecDeque<StaFrame>,
    dcf: Dcf,
    awake: bool,
    waiting_unicast: bool,
    poll_deadline: Option<u64>,
    listen_until: u64,
    released: u64,
    delivered: u64,
    acked: u64,
    think_end: Option<u64>,
    request_time: Option<u64>,
    to_release: u64,
    to_receive: u64,
}

struct Airtimes {
    slot: u64,
    sifs: u64,
    difs: u64,
    eifs: u64,
    data: u64,
    tcp_ack: u64,
    mac_ack: u64,
    rts: u64,
    cts: u64,
    ps_poll: u64,
    beacon: u64,
}

struct Sim<'a> {
    cfg: &'a SimConfig,
    rng: ChaCha8Rng,
    t: Airtimes,
    now: u64,
    start: u64,
    end: u64,
    batch_len: u64,
    beacon_interval: u64,
    listen_window: u64,
    poll_timeout: u64,
    next_tbtt: u64,
    stas: Vec<Sta>,
    nic: VecDeque<ApFrame>,
    ps_buffer: Vec<u64>,
    ap_dcf: Dcf,
    think: Option<Exp<f64>>,
    file_packets: Option<Geometric>,
    res: SimResult,
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a SimConfig) -> Result<Self, SimError> {
        let p = &cfg.params;
        let ft = |k| ns(p.frame_time(k));
        let t = Airtimes {
            slot: ns(p.slot_time),
            sifs: ns(p.sifs),
            difs: ns(p.difs),
            eifs: ns(p.eifs),
            data: ft(FrameKind::TcpData),
            tcp_ack: ft(FrameKind::TcpAck),
            mac_ack: ft(FrameKind::MacAck),
            rts: ft(FrameKind::Rts),
            cts: ft(FrameKind::Cts),
            ps_poll: ft(FrameKind::PsPoll),
            beacon: ns(p.preamble_time + p.plcp_header_time + 8.0 * f64::from(cfg.beacon_bytes) / p.control_rate),
        };
        let start = ns(cfg.warmup * 1e6);
        let end = ns(cfg.duration * 1e6);
        let batches = cfg.batches;
        let batch_len = (end - start).div_ceil(batches as u64);
        let (think, file_packets) = match cfg.workload {
            Workload::Long => (None, None),
            Workload::Short {
                think_rate,
                mean_file_bits,
            } => {
                let mean_packets = mean_file_bits / p.payload_bits();
                let think = Exp::new(think_rate).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
                let geo = Geometric::new(1.0 / mean_packets).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
                (Some(think), Some(geo))
            }
        };
        let n = cfg.stations;
        let batch_ns = (0..batches as u64)
            .map(|b| (start + (b + 1) * batch_len).min(end) - (start + b * batch_len).min(end))
            .collect();
        let res = SimResult {
            stations: n,
            measured_ns: end - start,
            batch_ns,
            state_ns: vec![[0; 5]; n],
            batch_state_ns: vec![vec![[0; 5]; n]; batches],
            ap_data_successes: 0,
            batch_ap_successes: vec![0; batches],
            files_completed: vec![0; n],
            sojourn_samples: vec![Vec::new(); n],
            batch_files: vec![0; batches],
            batch_sojourn_sum: vec![0.0; batches],
            charge: vec![0.0; n],
            counters: Counters::default(),
            trace: Vec::new(),
        };
        Ok(Self {
            cfg,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            t,
            now: 0,
            start,
            end,
            batch_len,
            beacon_interval: ns(p.beacon_interval * 1000.0),
            listen_window: ns(p.beacon_listen_time * 1000.0),
            poll_timeout: ns(cfg.poll_timeout * 1000.0),
            next_tbtt: 0,
            stas: vec![Sta::default(); n],
            nic: VecDeque::new(),
            ps_buffer: vec![0; n],
            ap_dcf: Dcf::default(),
            think,
            file_packets,
            res,
        })
    }

    fn psm(&self) -> bool {
        self.cfg.mode == Mode::Psm
    }

    fn trace(&mut self, at: u64, entity: Entity, event: &str, detail: String) {
        if !self.cfg.trace {
            return;
        }
        let entity = match entity {
            Entity::Ap => "ap".to_string(),
            Entity::Sta(i) => format!("sta{i}"),
        };
        self.res.trace.push(TraceRecord {
            time_us: at as f64 / 1000.0,
            entity,
            event: event.to_string(),
            detail,
        });
    }

    fn batch_of(&self, at: u64) -> Option<usize> {
        if at < self.start || at >= self.end {
            return None;
        }
        Some((((at - self.start) / self.batch_len) as usize).min(self.cfg.batches - 1))
    }

    /// Charges `[t0, t1)` to station `i` in state `r`, clipped to the
    /// measurement window and split across batches.
    fn add(&mut self, i: usize, r: RadioState, t0: u64, t1: u64) {
        let mut a = t0.max(self.start);
        let b = t1.min(self.end);
        while a < b {
            let batch = (((a - self.start) / self.batch_len) as usize).min(self.cfg.batches - 1);
            let batch_end = if batch + 1 == self.cfg.batches {
                b
            } else {
                (self.start + (batch as u64 + 1) * self.batch_len).min(b)
            };
            self.res.batch_state_ns[batch][i][r.index()] += batch_end - a;
            a = batch_end;
        }
    }

    /// Interframe space or idle medium: awake stations idle, others sleep.
    fn gap(&mut self, t0: u64, d: u64) {
        for i in 0..self.stas.len() {
            let r = if self.stas[i].awake { RadioState::Id } else { RadioState::Sl };
            self.add(i, r, t0, t0 + d);
        }
    }

    /// One frame on the air. Overheard downlink data is listened to,
    /// every other overheard frame is decoded.
    fn frame(&mut self, t0: u64, d: u64, from: Entity, to: Option<usize>, downlink_data: bool) {
        for i in 0..self.stas.len() {
            let r = if !self.stas[i].awake {
                RadioState::Sl
            } else if from == Entity::Sta(i) {
                RadioState::Tx
            } else if downlink_data && to != Some(i) {
                RadioState::RxLs
            } else {
                RadioState::RxD
            };
            self.add(i, r, t0, t0 + d);
        }
    }

    fn draw_backoff(&mut self, stage: u32) -> u32 {
        let p = &self.cfg.params;
        let cw = (p.cw_min << stage.min(p.backoff_stages)).min(p.cw_max());
        self.rng.random_range(0..cw)
    }

    fn release(&mut self, sta: usize) {
        self.stas[sta].released += 1;
        if self.psm() {
            self.ps_buffer[sta] += 1;
        } else {
            self.nic.push_back(ApFrame::Data { sta });
        }
    }

    fn wake(&mut self, i: usize, why: &str) {
        if !self.stas[i].awake {
            self.stas[i].awake = true;
            self.trace(self.now, Entity::Sta(i), "wake", why.to_string());
        }
    }

    fn start_think(&mut self, i: usize, from: u64) {
        if let Some(think) = self.think {
            let secs = think.sample(&mut self.rng);
            self.stas[i].think_end = Some(from + ns(secs * 1e6));
        }
    }

    fn start(&mut self) {
        let n = self.stas.len();
        match self.cfg.workload {
            Workload::Long => {
                let w = self.cfg.params.tcp_window;
                for _ in 0..w {
                    for i in 0..n {
                        self.release(i);
                    }
                }
            }
            Workload::Short { .. } => {
                for i in 0..n {
                    self.start_think(i, 0);
                }
            }
        }
        let awake = !self.psm();
        for s in &mut self.stas {
            s.awake = awake;
        }
    }

    fn tbtt(&mut self, at: u64) {
        self.trace(at, Entity::Ap, "tbtt", String::new());
        if self.cfg.beacons {
            self.nic.push_front(ApFrame::Beacon);
        }
        if !self.psm() {
            return;
        }
        for i in 0..self.stas.len() {
            if self.cfg.beacons {
                self.stas[i].listen_until = at + self.listen_window;
                self.wake(i, "beacon");
            }
            let s = &self.stas[i];
            if self.ps_buffer[i] > 0 && !s.waiting_unicast && !s.queue.contains(&StaFrame::PsPoll) {
                self.stas[i].queue.push_front(StaFrame::PsPoll);
                self.wake(i, "tim");
            }
        }
    }

    fn next_event(&self) -> u64 {
        let mut t = self.end;
        if self.psm() || self.cfg.beacons {
            t = t.min(self.next_tbtt);
        }
        for s in &self.stas {
            for e in [s.poll_deadline, s.think_end].into_iter().flatten() {
                t = t.min(e);
            }
            if s.awake && s.listen_until > self.now {
                t = t.min(s.listen_until);
            }
        }
        t
    }

    fn process_due(&mut self) {
        while (self.psm() || self.cfg.beacons) && self.next_tbtt <= self.now {
            let at = self.next_tbtt;
            self.tbtt(at);
            self.next_tbtt += self.beacon_interval;
        }
        for i in 0..self.stas.len() {
            if self.stas[i].poll_deadline.is_some_and(|d| d <= self.now) {
                let s = &mut self.stas[i];
                s.poll_deadline = None;
                s.waiting_unicast = false;
                self.res.counters.poll_timeouts += 1;
                self.trace(self.now, Entity::Sta(i), "poll_timeout", String::new());
            }
            if self.stas[i].think_end.is_some_and(|d| d <= self.now) {
                let s = &mut self.stas[i];
                s.think_end = None;
                s.request_time = Some(self.now);
                s.queue.push_back(StaFrame::Request);
                self.wake(i, "request");
                self.trace(self.now, Entity::Sta(i), "request", String::new());
            }
        }
        self.update_sleep();
    }

    fn update_sleep(&mut self) {
        if !self.psm() {
            return;
        }
        for i in 0..self.stas.len() {
            let s = &self.stas[i];
            if s.awake && s.queue.is_empty() && !s.waiting_unicast && s.listen_until <= self.now {
                self.stas[i].awake = false;
                self.trace(self.now, Entity::Sta(i), "sleep", String::new());
            }
        }
    }

    /// Never sends to a dozing station: its frame goes back to the buffer.
    fn sanitize_nic(&mut self) {
        while let Some(&ApFrame::Data { sta }) = self.nic.front() {
            if self.stas[sta].awake {
                break;
            }
            self.nic.pop_front();
            self.ps_buffer[sta] += 1;
            self.res.counters.returned_to_buffer += 1;
        }
    }

    fn contenders(&mut self) -> Vec<Entity> {
        let mut out = Vec::new();
        if !self.nic.is_empty() {
            if self.ap_dcf.backoff.is_none() {
                let b = self.draw_backoff(self.ap_dcf.stage);
                self.ap_dcf.backoff = Some(b);
            }
            out.push(Entity::Ap);
        }
        for i in 0..self.stas.len() {
            if self.stas[i].awake && !self.stas[i].queue.is_empty() {
                if self.stas[i].dcf.backoff.is_none() {
                    let b = self.draw_backoff(self.stas[i].dcf.stage);
                    self.stas[i].dcf.backoff = Some(b);
                }
                out.push(Entity::Sta(i));
            }
        }
        out
    }

    fn dcf(&mut self, e: Entity) -> &mut Dcf {
        match e {
            Entity::Ap => &mut self.ap_dcf,
            Entity::Sta(i) => &mut self.stas[i].dcf,
        }
    }

    fn airtime(&self, e: Entity) -> u64 {
        match e {
            Entity::Ap => match self.nic.front() {
                Some(ApFrame::Beacon) => self.t.beacon,
                _ => self.t.rts,
            },
            Entity::Sta(i) => match self.stas[i].queue.front() {
                Some(StaFrame::PsPoll) => self.t.ps_poll,
                _ => self.t.tcp_ack,
            },
        }
    }

    fn run(&mut self) -> Result<(), SimError> {
        self.start();
        loop {
            self.process_due();
            if self.now >= self.end {
                break;
            }
            self.sanitize_nic();
            let contenders = self.contenders();
            let next = self.next_event();
            if contenders.is_empty() {
                self.gap(self.now, next - self.now);
                self.now = next;
                continue;
            }
            let kmin = contenders
                .iter()
                .map(|&e| self.dcf(e).backoff.unwrap())
                .min()
                .unwrap();
            if kmin > 0 {
                let to_event = (next - self.now).div_ceil(self.t.slot).max(1);
                let skip = u64::from(kmin).min(to_event);
                self.gap(self.now, skip * self.t.slot);
                self.now += skip * self.t.slot;
                for &e in &contenders {
                    let d = self.dcf(e);
                    d.backoff = Some(d.backoff.unwrap() - skip as u32);
                }
                continue;
            }
            let tx: Vec<Entity> = contenders
                .into_iter()
                .filter(|&e| self.dcf(e).backoff == Some(0))
                .collect();
            self.res.counters.attempts += tx.len() as u64;
            if tx.len() == 1 {
                self.success(tx[0])?;
            } else {
                self.collision(&tx);
            }
            self.update_sleep();
        }
        Ok(())
    }

    fn collision(&mut self, tx: &[Entity]) {
        let t0 = self.now;
        let busy = tx.iter().map(|&e| self.airtime(e)).max().unwrap();
        let own: Vec<(usize, u64)> = tx
            .iter()
            .filter_map(|&e| match e {
                Entity::Sta(i) => Some((i, self.airtime(e))),
                Entity::Ap => None,
            })
            .collect();
        for i in 0..self.stas.len() {
            if !self.stas[i].awake {
                self.add(i, RadioState::Sl, t0, t0 + busy);
            } else if let Some(&(_, d)) = own.iter().find(|(j, _)| *j == i) {
                self.add(i, RadioState::Tx, t0, t0 + d);
                self.add(i, RadioState::RxD, t0 + d, t0 + busy);
            } else {
                self.add(i, RadioState::RxD, t0, t0 + busy);
            }
        }
        self.gap(t0 + busy, self.t.eifs);
        self.now = t0 + busy + self.t.eifs;
        let k = self.cfg.params.backoff_stages;
        for &e in tx {
            let d = self.dcf(e);
            d.stage = (d.stage + 1).min(k);
            d.backoff = None;
        }
        self.res.counters.collisions += 1;
        self.trace(t0, Entity::Ap, "collision", format!("{} frames", tx.len()));
    }

    fn success(&mut self, e: Entity) -> Result<(), SimError> {
        let t0 = self.now;
        let t = &self.t;
        let (sifs, difs) = (t.sifs, t.difs);
        *self.dcf(e) = Dcf::default();
        match e {
            Entity::Ap => match self.nic.pop_front().expect("AP contends with a frame") {
                ApFrame::Beacon => {
                    let d = self.t.beacon;
                    self.frame(t0, d, Entity::Ap, None, false);
                    self.gap(t0 + d, difs);
                    self.now = t0 + d + difs;
                    self.res.counters.beacons += 1;
                    self.trace(t0, Entity::Ap, "beacon", String::new());
                }
                ApFrame::Data { sta } => {
                    let (rts, cts, data, ack) = (self.t.rts, self.t.cts, self.t.data, self.t.mac_ack);
                    let mut at = t0;
                    self.frame(at, rts, Entity::Ap, Some(sta), false);
                    at += rts;
                    self.gap(at, sifs);
                    at += sifs;
                    self.frame(at, cts, Entity::Sta(sta), None, false);
                    at += cts;
                    self.gap(at, sifs);
                    at += sifs;
                    self.frame(at, data, Entity::Ap, Some(sta), true);
                    at += data;
                    self.gap(at, sifs);
                    at += sifs;
                    self.frame(at, ack, Entity::Sta(sta), None, false);
                    at += ack;
                    self.gap(at, difs);
                    self.now = at + difs;
                    let more = self.psm() && self.ps_buffer[sta] > 0;
                    self.res.counters.data_frames += 1;
                    if let Some(b) = self.batch_of(at) {
                        self.res.ap_data_successes += 1;
                        self.res.batch_ap_successes[b] += 1;
                    }
                    self.trace(t0, Entity::Ap, "data", format!("sta{sta} more={more}"));
                    self.deliver(sta, more, at)?;
                }
            },
            Entity::Sta(i) => {
                let f = self.stas[i].queue.pop_front().expect("station contends with a frame");
                let d = if f == StaFrame::PsPoll { self.t.ps_poll } else { self.t.tcp_ack };
                let ack = self.t.mac_ack;
                self.frame(t0, d, Entity::Sta(i), None, false);
                self.gap(t0 + d, sifs);
                self.frame(t0 + d + sifs, ack, Entity::Ap, Some(i), false);
                let done = t0 + d + sifs + ack;
                self.gap(done, difs);
                self.now = done + difs;
                match f {
                    StaFrame::PsPoll => {
                        self.res.counters.polls += 1;
                        self.trace(t0, Entity::Sta(i), "ps_poll", String::new());
                        if self.ps_buffer[i] > 0 {
                            self.ps_buffer[i] -= 1;
                            self.nic.push_back(ApFrame::Data { sta: i });
                            let s = &mut self.stas[i];
                            s.waiting_unicast = true;
                            s.poll_deadline = Some(done + self.poll_timeout);
                        }
                    }
                    StaFrame::TcpAck => {
                        self.res.counters.tcp_acks += 1;
                        self.trace(t0, Entity::Sta(i), "tcp_ack", String::new());
                        self.stas[i].acked += 1;
                        if self.stas[i].acked > self.stas[i].delivered {
                            return Err(SimError::Invariant(format!("sta{i} acknowledged undelivered data")));
                        }
                        match self.cfg.workload {
                            Workload::Long => self.release(i),
                            Workload::Short { .. } => {
                                if self.stas[i].to_release > 0 {
                                    self.stas[i].to_release -= 1;
                                    self.release(i);
                                }
                            }
                        }
                    }
                    StaFrame::Request => {
                        self.res.counters.requests += 1;
                        self.res.counters.request_airtime_ns += d + sifs + ack;
                        self.trace(t0, Entity::Sta(i), "http_request", String::new());
                        let packets = self.file_packets.expect("short workload").sample(&mut self.rng) + 1;
                        let first = packets.min(u64::from(self.cfg.params.tcp_window));
                        let s = &mut self.stas[i];
                        s.to_receive = packets;
                        s.to_release = packets - first;
                        for _ in 0..first {
                            self.release(i);
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Downlink data received by station `i` at time `at`.
    fn deliver(&mut self, i: usize, more: bool, at: u64) -> Result<(), SimError> {
        let w = u64::from(self.cfg.params.tcp_window);
        let s = &mut self.stas[i];
        s.delivered += 1;
        s.waiting_unicast = false;
        s.poll_deadline = None;
        s.queue.push_back(StaFrame::TcpAck);
        if more && !s.queue.contains(&StaFrame::PsPoll) {
            s.queue.push_front(StaFrame::PsPoll);
        }
        if s.released - s.acked > w || s.delivered > s.released {
            return Err(SimError::Invariant(format!("sta{i} window accounting broken")));
        }
        if matches!(self.cfg.workload, Workload::Short { .. }) {
            if s.to_receive == 0 {
                return Err(SimError::Invariant(format!("sta{i} received data outside a file")));
            }
            s.to_receive -= 1;
            if s.to_receive == 0 {
                let begun = s.request_time.take().expect("file had a request");
                let sojourn = (at - begun) as f64 * 1e-9;
                if let Some(b) = self.batch_of(at) {
                    self.res.files_completed[i] += 1;
                    self.res.sojourn_samples[i].push(sojourn);
                    self.res.batch_files[b] += 1;
                    self.res.batch_sojourn_sum[b] += sojourn;
                }
                self.trace(at, Entity::Sta(i), "file_done", format!("{sojourn:.6}"));
                self.start_think(i, at);
            }
        }
        Ok(())
    }

    fn finish(mut self) -> SimResult {
        let n = self.stas.len();
        for batch in &self.res.batch_state_ns {
            for i in 0..n {
                for r in 0..5 {
                    self.res.state_ns[i][r] += batch[i][r];
                }
            }
        }
        let c = &self.cfg.currents;
        for i in 0..n {
            self.res.charge[i] = RadioState::ALL
                .iter()
                .map(|&r| c.current(r) * self.res.state_ns[i][r.index()] as f64 * 1e-9)
                .sum::<f64>()
                / 1000.0;
        }
        self.res
    }
}

/// Runs one replication. Deterministic for a given configuration.
pub fn run_sim(cfg: &SimConfig) -> Result<SimResult, SimError> {
    cfg.validate()?;
    let mut sim = Sim::new(cfg)?;
    sim.run()?;
    Ok(sim.finish())
}
