//! Short downloads separated by exponential think times.
//!
//! The AP is a processor-sharing server whose aggregate rate is the
//! long-download goodput, so a file of mean size `L` bits leaves at rate
//! `mu = Theta / L` whatever the number of active users. CAM users are
//! always awake; PSM users sleep while thinking, wake for beacons, and
//! only start their download at the beacon after their request.
//!
//! Times are in seconds, rates in 1/s, currents in mA and charges in C.

use serde::{Deserialize, Serialize};

use crate::cam_long::{cam_average_current, passive_current, CamLongScenario};
use crate::markov::{birth_death_stationary, FiniteCtmc, FiniteDtmc};
use crate::model::{Mode, ModelError};
use crate::params::{CurrentProfile, PhyMacParams};
use crate::psm_long::{psm_average_current, PsmLongScenario};
use crate::saturation::{default_tolerance, AttemptProbTable};
use crate::scalar::{binomial, powu, Real};

/// How the charge of beacon wake-ups during think time is added.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WakeCorrection {
    /// `(J_Id - J_Sl) * T_Lb / (lambda b)`: one listen window per beacon
    /// of the mean think time.
    #[default]
    PerThinkBeacon,
    /// `J_Id T_Lb / (b mu) - J_Sl (1/lambda - 1/(b mu))`, kept for
    /// comparison with reference figures.
    Printed,
}

/// Inputs shared by both modes before the long-file figures are derived.
#[derive(Debug, Clone, PartialEq)]
pub struct ShortFileSetup<T> {
    pub stations: usize,
    /// Mean think time, s.
    pub mean_think_time: T,
    /// Mean file size, bits.
    pub file_bits: T,
    /// Charge budget for the files-per-budget figure, C.
    pub budget: T,
    /// Aggregate server rate in bits/s; derived from the long-file model
    /// when absent.
    pub throughput_override: Option<T>,
    pub wake_correction: WakeCorrection,
}

impl<T: Real> Default for ShortFileSetup<T> {
    fn default() -> Self {
        Self {
            stations: 8,
            mean_think_time: T::lit(5.0),
            file_bits: T::lit(400.0 * 1024.0 * 8.0),
            budget: T::lit(100.0),
            throughput_override: None,
            wake_correction: WakeCorrection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShortFileScenario<T> {
    pub mode: Mode,
    pub stations: usize,
    /// Think rate, 1/s.
    pub think_rate: T,
    pub file_bits: T,
    /// Beacon interval, s.
    pub beacon_interval: T,
    /// Awake time around each beacon while thinking, s.
    pub listen_time: T,
    /// Aggregate server rate, bits/s.
    pub throughput: T,
    pub currents: CurrentProfile<T>,
    /// `active_currents[k - 1]`: current of a downloading station while `k`
    /// stations download.
    pub active_currents: Vec<T>,
    /// `passive_currents[k]`: current of a thinking station while `k`
    /// stations download.
    pub passive_currents: Vec<T>,
    pub wake_correction: WakeCorrection,
    pub budget: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShortFileResult<T> {
    pub mode: Mode,
    pub stations: usize,
    pub think_rate: T,
    pub file_bits: T,
    pub beacon_interval: T,
    /// `pi[k]`: long-run fraction of time with `k` active downloads.
    pub occupancy: Vec<T>,
    /// Files completed per second over the whole cell.
    pub completion_rate: T,
    /// Mean sojourn time, s.
    pub sojourn: T,
    /// Mean charge per file, C.
    pub charge_per_file: T,
    pub budget: T,
    pub files_per_budget: T,
}

impl<T: Real> ShortFileScenario<T> {
    /// Derives the server rate and current tables from the long-file model
    /// of `mode`.
    pub fn derive(
        mode: Mode,
        setup: &ShortFileSetup<T>,
        params: &PhyMacParams<T>,
        currents: &CurrentProfile<T>,
    ) -> Result<Self, ModelError> {
        let n = setup.stations;
        if n == 0 {
            return Err(ModelError::TooFewStations { min: 1, got: 0 });
        }
        let table = AttemptProbTable::build(n + 1, params, default_tolerance())?;
        let mbps = T::lit(1e6);
        let (full_throughput, active, passive) = match mode {
            Mode::Cam => {
                let mut active = Vec::with_capacity(n);
                let mut full = T::zero();
                for k in 1..=n {
                    let s = CamLongScenario::with_table(k, params.clone(), currents.clone(), table.clone())?;
                    let r = cam_average_current(&s)?;
                    active.push(r.average_current);
                    full = r.throughput_mbps;
                }
                let s = CamLongScenario::with_table(n, params.clone(), currents.clone(), table.clone())?;
                let passive = (0..n).map(|k| passive_current(k, &s)).collect::<Result<Vec<_>, _>>()?;
                (full * mbps, active, passive)
            }
            Mode::Psm => {
                let mut active = Vec::with_capacity(n);
                let mut full = T::zero();
                for k in 1..=n {
                    let s = PsmLongScenario::with_table(k, params.clone(), currents.clone(), table.clone())?;
                    let r = psm_average_current(&s)?;
                    active.push(r.average_current);
                    full = r.throughput_mbps;
                }
                (full * mbps, active, vec![currents.sleep; n])
            }
        };
        let ms = T::lit(1e-3);
        let s = Self {
            mode,
            stations: n,
            think_rate: T::one() / setup.mean_think_time,
            file_bits: setup.file_bits,
            beacon_interval: params.beacon_interval * ms,
            listen_time: params.beacon_listen_time * ms,
            throughput: setup.throughput_override.unwrap_or(full_throughput),
            currents: currents.clone(),
            active_currents: active,
            passive_currents: passive,
            wake_correction: setup.wake_correction,
            budget: setup.budget,
        };
        s.validate()?;
        Ok(s)
    }

    /// File completion rate of the server, `mu = Theta / L`.
    pub fn service_rate(&self) -> T {
        self.throughput / self.file_bits
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.stations == 0 {
            return Err(ModelError::TooFewStations { min: 1, got: 0 });
        }
        let positive = [
            ("think rate", self.think_rate),
            ("file size", self.file_bits),
            ("beacon interval", self.beacon_interval),
            ("beacon listen time", self.listen_time),
            ("server rate", self.throughput),
            ("budget", self.budget),
        ];
        for (name, v) in positive {
            if !(v > T::zero() && v.is_finite()) {
                return Err(ModelError::Invalid(format!("{name} must be positive and finite")));
            }
        }
        if self.listen_time >= self.beacon_interval {
            return Err(ModelError::Invalid(
                "beacon listen time must be shorter than the beacon interval".into(),
            ));
        }
        if self.active_currents.len() != self.stations || self.passive_currents.len() != self.stations {
            return Err(ModelError::Invalid(format!(
                "current tables must have {} entries (active {}, passive {})",
                self.stations,
                self.active_currents.len(),
                self.passive_currents.len()
            )));
        }
        Ok(())
    }
}

/// Occupancy CTMC of the CAM model: `k -> k+1` at `(N-k) lambda`,
/// `k -> k-1` at `mu`.
pub fn cam_short_ctmc<T: Real>(s: &ShortFileScenario<T>) -> Result<FiniteCtmc<T>, ModelError> {
    s.validate()?;
    let n = s.stations;
    let mu = s.service_rate();
    let mut rates = vec![vec![T::zero(); n + 1]; n + 1];
    for k in 0..=n {
        if k < n {
            rates[k][k + 1] = T::count(n - k) * s.think_rate;
        }
        if k > 0 {
            rates[k][k - 1] = mu;
        }
    }
    let labels = (0..=n).map(|k| k.to_string()).collect();
    Ok(FiniteCtmc::from_rates(labels, rates)?)
}

pub fn cam_short_model<T: Real>(s: &ShortFileScenario<T>) -> Result<ShortFileResult<T>, ModelError> {
    s.validate()?;
    let n = s.stations;
    let mu = s.service_rate();
    let up: Vec<T> = (0..n).map(|k| T::count(n - k) * s.think_rate).collect();
    let down = vec![mu; n];
    let pi = birth_death_stationary(&up, &down);

    let mut busy = T::zero();
    let mut rate = T::zero();
    let mut current = T::zero();
    for (k, &p) in pi.iter().enumerate() {
        busy += T::count(k) * p;
        rate += T::count(n - k) * s.think_rate * p;
        let active = if k > 0 { T::count(k) * s.active_currents[k - 1] } else { T::zero() };
        let passive = if k < n { T::count(n - k) * s.passive_currents[k] } else { T::zero() };
        current += p * (active + passive);
    }
    let charge = current / rate / T::lit(1000.0);
    Ok(finish(s, pi, rate, busy / rate, charge))
}

fn finish<T: Real>(s: &ShortFileScenario<T>, occupancy: Vec<T>, rate: T, sojourn: T, charge: T) -> ShortFileResult<T> {
    ShortFileResult {
        mode: s.mode,
        stations: s.stations,
        think_rate: s.think_rate,
        file_bits: s.file_bits,
        beacon_interval: s.beacon_interval,
        occupancy,
        completion_rate: rate,
        sojourn,
        charge_per_file: charge,
        budget: s.budget,
        files_per_budget: s.budget / charge,
    }
}

/// Poisson probabilities `P(K = s)` for `s < n` with mean `m`.
fn poisson_head<T: Real>(m: T, n: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(n);
    let mut p = (-m).exp();
    for s in 0..n {
        out.push(p);
        p = p * m / T::count(s + 1);
    }
    out
}

/// `P(K >= i)` for a Poisson `K` with mean `m`, summed upwards so that
/// small tails keep their relative accuracy.
fn poisson_tail<T: Real>(m: T, i: usize) -> T {
    if i == 0 {
        return T::one();
    }
    let below: T = poisson_head(m, i).into_iter().sum();
    if below < T::lit(0.5) {
        return T::one() - below;
    }
    let mut term = poisson_head(m, i + 1)[i];
    let mut sum = T::zero();
    let mut s = i;
    while term > T::zero() {
        sum += term;
        s += 1;
        term = term * m / T::count(s);
        if T::count(s) > m && term <= sum * T::epsilon() {
            break;
        }
    }
    sum
}

/// Probability that `m` of `i` active downloads finish within `b` seconds
/// when the server completes files at rate `mu`.
pub fn q_departures<T: Real>(i: usize, m: usize, b: T, mu: T) -> Result<T, ModelError> {
    if m > i {
        return Err(ModelError::Invalid(format!("{m} departures out of {i} active users")));
    }
    if m < i {
        Ok(poisson_head(mu * b, m + 1)[m])
    } else {
        Ok(poisson_tail(mu * b, m))
    }
}

/// Chain of the number of active users seen at beacon instants.
pub fn beacon_dtmc<T: Real>(s: &ShortFileScenario<T>) -> Result<FiniteDtmc<T>, ModelError> {
    s.validate()?;
    let n = s.stations;
    let b = s.beacon_interval;
    let mu = s.service_rate();
    let arrive = T::one() - (-s.think_rate * b).exp();
    let stay = T::one() - arrive;
    let arrivals = |free: usize, a: usize| binomial::<T>(free, a) * powu(arrive, a) * powu(stay, free - a);
    let mut p = vec![vec![T::zero(); n + 1]; n + 1];
    for (i, row) in p.iter_mut().enumerate() {
        let q: Vec<T> = (0..=i).map(|m| q_departures(i, m, b, mu)).collect::<Result<_, _>>()?;
        for (j, cell) in row.iter_mut().enumerate() {
            let lo = i.saturating_sub(j);
            let hi = i.min(n - j);
            let mut acc = T::zero();
            for (m, &qm) in q.iter().enumerate().take(hi + 1).skip(lo) {
                acc += qm * arrivals(n - i, j + m - i);
            }
            *cell = acc;
        }
    }
    let labels = (0..=n).map(|k| k.to_string()).collect();
    Ok(FiniteDtmc::new(labels, p)?)
}

/// Expected time (s) a beacon interval that starts with `j` active users
/// spends with exactly `k` active users.
pub fn time_in_state<T: Real>(j: usize, k: usize, b: T, mu: T) -> T {
    if k > j {
        return T::zero();
    }
    if j == 0 {
        return b;
    }
    // tail[i - 1] = P(K >= i) for i = 1..=j.
    let tail: Vec<T> = (1..=j).map(|i| poisson_tail(mu * b, i)).collect();
    if k == 0 {
        let served: T = tail.iter().copied().sum();
        let idle = b - served / mu;
        if idle > b / T::lit(2.0) {
            idle
        } else {
            // Same quantity as (1/mu) E[(K - j)^+], without the cancellation.
            let m = mu * b;
            let mut term = poisson_head(m, j + 2)[j + 1];
            let mut acc = T::zero();
            let mut s = j + 1;
            while term > T::zero() {
                acc += T::count(s - j) * term;
                s += 1;
                term = term * m / T::count(s);
                if T::count(s) > m && T::count(s - j) * term <= acc * T::epsilon() {
                    break;
                }
            }
            acc / mu
        }
    } else {
        // The (j-k+1)-th departure ends the stay in k.
        tail[j - k] / mu
    }
}

pub fn psm_short_model<T: Real>(s: &ShortFileScenario<T>) -> Result<ShortFileResult<T>, ModelError> {
    let chain = beacon_dtmc(s)?;
    let u = chain.stationary()?;
    let n = s.stations;
    let b = s.beacon_interval;
    let mu = s.service_rate();

    let pi: Vec<T> = (0..=n)
        .map(|k| (k..=n).map(|j| u[j] * time_in_state(j, k, b, mu)).sum::<T>() / b)
        .collect();
    let arrive = T::one() - (-s.think_rate * b).exp();
    let rate: T = u
        .iter()
        .enumerate()
        .map(|(k, &w)| w * T::count(n - k) * arrive)
        .sum::<T>()
        / b;

    let mut busy = T::zero();
    let mut current = T::zero();
    for (k, &p) in pi.iter().enumerate() {
        busy += T::count(k) * p;
        let active = if k > 0 { T::count(k) * s.active_currents[k - 1] } else { T::zero() };
        current += p * (active + T::count(n - k) * s.currents.sleep);
    }
    let c = &s.currents;
    let correction = match s.wake_correction {
        WakeCorrection::PerThinkBeacon => (c.idle - c.sleep) * s.listen_time / (s.think_rate * b),
        WakeCorrection::Printed => {
            let per = T::one() / (b * mu);
            c.idle * s.listen_time * per - c.sleep * (T::one() / s.think_rate - per)
        }
    };
    let charge = (current / rate + correction) / T::lit(1000.0);
    let sojourn = busy / rate + b / T::lit(2.0);
    Ok(finish(s, pi, rate, sojourn, charge))
}

pub fn short_model<T: Real>(s: &ShortFileScenario<T>) -> Result<ShortFileResult<T>, ModelError> {
    match s.mode {
        Mode::Cam => cam_short_model(s),
        Mode::Psm => psm_short_model(s),
    }
}
