//! Slot-by-slot Monte-Carlo of the p-persistent contention models.
//!
//! Each contender flips its own coin in every slot, frames are put on the
//! air one by one, and every station's radio state is charged per frame.
//! Nothing here depends on the analytic crate, so its estimates can be
//! used as an independent reference in tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TX: usize = 0;
pub const RXD: usize = 1;
pub const RXLS: usize = 2;
pub const ID: usize = 3;
pub const SL: usize = 4;

/// Frame airtimes and gaps, µs.
#[derive(Debug, Clone, Copy)]
pub struct Timing {
    pub slot: f64,
    pub sifs: f64,
    pub difs: f64,
    pub eifs: f64,
    pub data: f64,
    pub tcp_ack: f64,
    pub mac_ack: f64,
    pub rts: f64,
    pub cts: f64,
    pub ps_poll: f64,
}

impl Timing {
    /// 802.11b long preamble, 2 Mb/s control frames, 1574-byte data and
    /// 74-byte TCP ACK frames at `rate` Mb/s.
    pub fn dot11b(rate: f64) -> Self {
        let plcp = 192.0;
        Self {
            slot: 20.0,
            sifs: 10.0,
            difs: 50.0,
            eifs: 364.0,
            data: plcp + 1574.0 * 8.0 / rate,
            tcp_ack: plcp + 74.0 * 8.0 / rate,
            mac_ack: plcp + 14.0 * 8.0 / 2.0,
            rts: plcp + 20.0 * 8.0 / 2.0,
            cts: plcp + 14.0 * 8.0 / 2.0,
            ps_poll: plcp + 20.0 * 8.0 / 2.0,
        }
    }
}

/// Who transmitted the frame that ended a cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Winner {
    Ap,
    Poll,
    Ack,
}

#[derive(Debug, Clone)]
pub struct CycleSample {
    pub length: f64,
    pub winner: Winner,
    /// Time per radio state summed over stations.
    pub station_time: [f64; 5],
}

struct Cell<'a> {
    t: &'a Timing,
    time: Vec<[f64; 5]>,
}

impl Cell<'_> {
    fn all(&mut self, state: usize, d: f64) {
        for s in self.time.iter_mut() {
            s[state] += d;
        }
    }

    /// A frame on the air. `from` is a station index or `None` for the AP.
    /// Overheard downlink data is listened to, everything else decoded.
    fn frame(&mut self, d: f64, from: Option<usize>, to: Option<usize>, downlink_data: bool) {
        for (i, s) in self.time.iter_mut().enumerate() {
            if Some(i) == from {
                s[TX] += d;
            } else if downlink_data && Some(i) != to {
                s[RXLS] += d;
            } else {
                s[RXD] += d;
            }
        }
    }
}

/// Runs slots until one success; `polls` and `acks` list the stations
/// holding each frame type.
pub fn one_cycle<R: Rng>(
    rng: &mut R,
    t: &Timing,
    stations: usize,
    polls: &[usize],
    acks: &[usize],
    ap: bool,
    beta: f64,
) -> CycleSample {
    let mut cell = Cell {
        t,
        time: vec![[0.0; 5]; stations],
    };
    let mut length = 0.0;
    loop {
        let p: Vec<usize> = polls.iter().copied().filter(|_| rng.random::<f64>() < beta).collect();
        let a: Vec<usize> = acks.iter().copied().filter(|_| rng.random::<f64>() < beta).collect();
        let ap_tx = ap && rng.random::<f64>() < beta;
        let attempts = p.len() + a.len() + usize::from(ap_tx);
        let t = cell.t;
        if attempts == 0 {
            cell.all(ID, t.slot);
            length += t.slot;
            continue;
        }
        if attempts > 1 {
            let mut busy: f64 = 0.0;
            if !p.is_empty() {
                busy = busy.max(t.ps_poll);
            }
            if !a.is_empty() {
                busy = busy.max(t.tcp_ack);
            }
            if ap_tx {
                busy = busy.max(t.rts);
            }
            for (i, s) in cell.time.iter_mut().enumerate() {
                let own = if p.contains(&i) {
                    t.ps_poll
                } else if a.contains(&i) {
                    t.tcp_ack
                } else {
                    0.0
                };
                s[TX] += own;
                s[RXD] += busy - own;
                s[ID] += t.eifs;
            }
            length += busy + t.eifs;
            continue;
        }
        cell.all(ID, t.difs);
        length += t.difs;
        let winner = if ap_tx {
            let dest = rng.random_range(0..stations);
            cell.frame(t.rts, None, Some(dest), false);
            cell.all(ID, t.sifs);
            cell.frame(t.cts, Some(dest), None, false);
            cell.all(ID, t.sifs);
            cell.frame(t.data, None, Some(dest), true);
            cell.all(ID, t.sifs);
            cell.frame(t.mac_ack, Some(dest), None, false);
            length += t.rts + t.cts + t.data + t.mac_ack + 3.0 * t.sifs;
            Winner::Ap
        } else {
            let (who, d, w) = if let Some(&s) = p.first() {
                (s, t.ps_poll, Winner::Poll)
            } else {
                (a[0], t.tcp_ack, Winner::Ack)
            };
            cell.frame(d, Some(who), None, false);
            cell.all(ID, t.sifs);
            cell.frame(t.mac_ack, None, Some(who), false);
            length += d + t.sifs + t.mac_ack;
            w
        };
        let mut station_time = [0.0; 5];
        for s in &cell.time {
            for (acc, v) in station_time.iter_mut().zip(s) {
                *acc += v;
            }
        }
        return CycleSample {
            length,
            winner,
            station_time,
        };
    }
}

/// Ratio estimates with batch-means standard errors.
#[derive(Debug, Clone)]
pub struct ChainEstimate {
    /// AP successes per µs.
    pub throughput: f64,
    pub throughput_se: f64,
    pub fractions: [f64; 5],
    pub fractions_se: [f64; 5],
    pub cycles: usize,
}

#[derive(Default, Clone)]
struct Batch {
    ap: f64,
    length: f64,
    time: [f64; 5],
}

fn estimate(batches: &[Batch], stations: usize, cycles: usize) -> ChainEstimate {
    let total = batches.iter().fold(Batch::default(), |mut acc, b| {
        acc.ap += b.ap;
        acc.length += b.length;
        for (x, y) in acc.time.iter_mut().zip(b.time) {
            *x += y;
        }
        acc
    });
    let nb = batches.len() as f64;
    let se = |f: &dyn Fn(&Batch) -> f64| {
        let vals: Vec<f64> = batches.iter().map(f).collect();
        let mean = vals.iter().sum::<f64>() / nb;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nb - 1.0);
        (var / nb).sqrt()
    };
    let n = stations as f64;
    let mut fractions = [0.0; 5];
    let mut fractions_se = [0.0; 5];
    for r in 0..5 {
        fractions[r] = total.time[r] / (n * total.length);
        fractions_se[r] = se(&|b: &Batch| b.time[r] / (n * b.length));
    }
    ChainEstimate {
        throughput: total.ap / total.length,
        throughput_se: se(&|b: &Batch| b.ap / b.length),
        fractions,
        fractions_se,
        cycles,
    }
}

const BATCHES: usize = 50;

fn run_chain<S, F>(
    stations: usize,
    cycles: usize,
    seed: u64,
    mut state: S,
    mut step: F,
) -> ChainEstimate
where
    F: FnMut(&mut ChaCha8Rng, &mut S) -> CycleSample,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_batch = cycles.div_ceil(BATCHES);
    let mut batches = vec![Batch::default(); BATCHES];
    // Short burn-in so the start state does not bias the first batch.
    for _ in 0..cycles / 100 {
        step(&mut rng, &mut state);
    }
    for c in 0..per_batch * BATCHES {
        let s = step(&mut rng, &mut state);
        let b = &mut batches[c / per_batch];
        if s.winner == Winner::Ap {
            b.ap += 1.0;
        }
        b.length += s.length;
        for (x, y) in b.time.iter_mut().zip(s.station_time) {
            *x += y;
        }
    }
    estimate(&batches, stations, per_batch * BATCHES)
}

/// CAM long downloads: `k` queued TCP ACKs spread over `min(k, N)`
/// stations, AP active while `k < N W`. `betas[n - 1]` is the attempt
/// probability with `n` contenders.
pub fn cam_chain_mc(t: &Timing, stations: usize, window: usize, betas: &[f64], cycles: usize, seed: u64) -> ChainEstimate {
    let full = stations * window;
    let ids: Vec<usize> = (0..stations).collect();
    run_chain(stations, cycles, seed, 0usize, |rng, k| {
        let holders = (*k).min(stations);
        let ap = *k < full;
        let beta = betas[holders + usize::from(ap) - 1];
        let s = one_cycle(rng, t, stations, &[], &ids[..holders], ap, beta);
        match s.winner {
            Winner::Ap => *k += 1,
            _ => *k -= 1,
        }
        s
    })
}

/// PSM long downloads with `x` PS-POLL holders and `y` TCP ACK holders.
/// The AP is silent only in `(N, 0)`; an AP success with `x + y = N`
/// turns an ACK holder into a PS-POLL holder.
pub fn psm_chain_mc(t: &Timing, stations: usize, betas: &[f64], cycles: usize, seed: u64) -> ChainEstimate {
    let ids: Vec<usize> = (0..stations).collect();
    run_chain(stations, cycles, seed, (0usize, 0usize), |rng, st| {
        let (x, y) = *st;
        let ap = !(x == stations && y == 0);
        let beta = betas[x + y + usize::from(ap) - 1];
        let s = one_cycle(rng, t, stations, &ids[..x], &ids[x..x + y], ap, beta);
        *st = match s.winner {
            Winner::Ap if x + y < stations => (x + 1, y),
            Winner::Ap => (x + 1, y - 1),
            Winner::Poll => (x - 1, y + 1),
            Winner::Ack => (x, y - 1),
        };
        s
    })
}

/// Mean cycle length and station time from a fixed contention state, with
/// standard errors, over `cycles` independent cycles.
#[derive(Debug, Clone)]
pub struct CycleEstimate {
    pub mean_length: f64,
    pub length_se: f64,
    pub station_time: [f64; 5],
    pub station_time_se: [f64; 5],
    pub ap_share: f64,
}

pub fn cycle_mc(
    t: &Timing,
    stations: usize,
    polls: usize,
    acks: usize,
    ap: bool,
    beta: f64,
    cycles: usize,
    seed: u64,
) -> CycleEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<usize> = (0..stations).collect();
    let (mut s1, mut s2, mut ap_wins) = (0.0, 0.0, 0.0);
    let mut t1 = [0.0; 5];
    let mut t2 = [0.0; 5];
    for _ in 0..cycles {
        let s = one_cycle(&mut rng, t, stations, &ids[..polls], &ids[polls..polls + acks], ap, beta);
        s1 += s.length;
        s2 += s.length * s.length;
        if s.winner == Winner::Ap {
            ap_wins += 1.0;
        }
        for r in 0..5 {
            t1[r] += s.station_time[r];
            t2[r] += s.station_time[r] * s.station_time[r];
        }
    }
    let n = cycles as f64;
    let se = |a: f64, b: f64| ((b / n - (a / n).powi(2)).max(0.0) / n).sqrt();
    let mut station_time = [0.0; 5];
    let mut station_time_se = [0.0; 5];
    for r in 0..5 {
        station_time[r] = t1[r] / n;
        station_time_se[r] = se(t1[r], t2[r]);
    }
    CycleEstimate {
        mean_length: s1 / n,
        length_se: se(s1, s2),
        station_time,
        station_time_se,
        ap_share: ap_wins / n,
    }
}
