//! N PSM stations downloading long files.
//!
//! A PSM station fetches each buffered packet with a PS-POLL and then
//! acknowledges it at the TCP level, so a station can hold a PS-POLL, a
//! TCP ACK, or nothing. The chain state `(x, y)` counts stations with a
//! PS-POLL at the head of the queue (`x`) and those with only a TCP ACK
//! (`y`). A single station is modelled separately because it alternates
//! strictly between the AP's data and its own PS-POLL/ACK pair.

use std::fmt;

use crate::contention::{cycle_stats, Contenders, CycleStats, ExchangeTimes};
use crate::markov::FiniteDtmc;
use crate::model::{LongFileResult, Mode, ModelError};
use crate::params::{validate_params, CurrentProfile, PerState, PhyMacParams, RadioState};
use crate::saturation::{default_tolerance, AttemptProbTable};
use crate::scalar::Real;

/// Below this size the two-dimensional chain is an extrapolation.
pub const CHAIN_VALIDATED_FROM: usize = 6;

pub const CAVEAT_SMALL_N: &str = "two-dimensional PSM chain extended to fewer than six stations";
pub const CAVEAT_BOUNDARY: &str = "AP success at x+y=N moves (x,y) to (x+1,y-1) (interpreted boundary rule)";

#[derive(Debug, Clone, PartialEq)]
pub struct PsmLongScenario<T> {
    pub stations: usize,
    pub params: PhyMacParams<T>,
    pub currents: CurrentProfile<T>,
    pub betas: AttemptProbTable<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PsmChainState {
    pub x: usize,
    pub y: usize,
}

impl fmt::Display for PsmChainState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

impl<T: Real> PsmLongScenario<T> {
    pub fn new(stations: usize, params: PhyMacParams<T>, currents: CurrentProfile<T>) -> Result<Self, ModelError> {
        let betas = AttemptProbTable::build(stations + 1, &params, default_tolerance())?;
        Self::with_table(stations, params, currents, betas)
    }

    pub fn with_table(
        stations: usize,
        params: PhyMacParams<T>,
        currents: CurrentProfile<T>,
        betas: AttemptProbTable<T>,
    ) -> Result<Self, ModelError> {
        let s = Self {
            stations,
            params,
            currents,
            betas,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.stations == 0 {
            return Err(ModelError::TooFewStations { min: 1, got: 0 });
        }
        if let Some(e) = validate_params(&self.params, &self.currents).into_iter().next() {
            return Err(e.into());
        }
        if self.betas.len() < self.stations + 1 {
            return Err(ModelError::TableTooShort {
                needed: self.stations + 1,
                got: self.betas.len(),
            });
        }
        Ok(())
    }

    pub fn times(&self) -> ExchangeTimes<T> {
        ExchangeTimes::new(&self.params)
    }

    /// All states with `x + y <= N`, ordered by `x` then `y`.
    pub fn states(&self) -> Vec<PsmChainState> {
        let n = self.stations;
        (0..=n)
            .flat_map(|x| (0..=n - x).map(move |y| PsmChainState { x, y }))
            .collect()
    }

    fn index(&self, st: PsmChainState) -> usize {
        // Rows x' < x contribute N - x' + 1 states each.
        let n = self.stations;
        (0..st.x).map(|xp| n - xp + 1).sum::<usize>() + st.y
    }

    /// The AP is silent only when every station waits to poll.
    pub fn ap_contends(&self, st: PsmChainState) -> bool {
        !(st.x == self.stations && st.y == 0)
    }

    pub fn contenders(&self, st: PsmChainState) -> (Contenders, T) {
        assert!(st.x + st.y <= self.stations, "state {st} outside the simplex");
        let c = Contenders {
            polls: st.x,
            acks: st.y,
            ap: self.ap_contends(st),
        };
        (c, self.betas.beta(c.total()))
    }

    pub fn cycle(&self, st: PsmChainState) -> CycleStats<T> {
        let (c, beta) = self.contenders(st);
        cycle_stats(c, beta, self.stations, &self.times())
    }

    /// Successor states with their probabilities.
    pub fn transitions(&self, st: PsmChainState) -> Vec<(PsmChainState, T)> {
        let (c, _) = self.contenders(st);
        let r = T::count(c.total());
        let PsmChainState { x, y } = st;
        let mut out = Vec::with_capacity(3);
        if c.ap {
            let next = if x + y < self.stations {
                PsmChainState { x: x + 1, y }
            } else {
                PsmChainState { x: x + 1, y: y - 1 }
            };
            out.push((next, T::one() / r));
        }
        if x > 0 {
            out.push((PsmChainState { x: x - 1, y: y + 1 }, T::count(x) / r));
        }
        if y > 0 {
            out.push((PsmChainState { x, y: y - 1 }, T::count(y) / r));
        }
        out
    }

    fn ap_share(&self, st: PsmChainState) -> T {
        let (c, _) = self.contenders(st);
        if c.ap {
            T::one() / T::count(c.total())
        } else {
            T::zero()
        }
    }
}

/// Embedded chain over `(x, y)`, for `N >= 2`.
pub fn build_psm_chain<T: Real>(s: &PsmLongScenario<T>) -> Result<FiniteDtmc<T>, ModelError> {
    s.validate()?;
    if s.stations < 2 {
        return Err(ModelError::TooFewStations {
            min: 2,
            got: s.stations,
        });
    }
    let states = s.states();
    let mut p = vec![vec![T::zero(); states.len()]; states.len()];
    for (i, &st) in states.iter().enumerate() {
        for (next, prob) in s.transitions(st) {
            p[i][s.index(next)] += prob;
        }
    }
    let labels = states.iter().map(|st| st.to_string()).collect();
    Ok(FiniteDtmc::new(labels, p)?)
}

/// Mean cycle length `E_{i,j}[T]` in µs.
pub fn psm_cycle_length<T: Real>(i: usize, j: usize, s: &PsmLongScenario<T>) -> T {
    s.cycle(PsmChainState { x: i, y: j }).mean_length
}

/// Expected station-summed time in `r` during one cycle from `(i, j)`.
pub fn psm_state_times<T: Real>(i: usize, j: usize, r: RadioState, s: &PsmLongScenario<T>) -> T {
    s.cycle(PsmChainState { x: i, y: j }).station_time[r]
}

struct ChainSummary<T> {
    throughput: T,
    fractions: PerState<T>,
}

fn solve_chain<T: Real>(s: &PsmLongScenario<T>) -> Result<ChainSummary<T>, ModelError> {
    let chain = build_psm_chain(s)?;
    let pi = chain.stationary()?;
    let mut num = T::zero();
    let mut den = T::zero();
    let mut st = PerState::zero();
    for (state, &w) in s.states().into_iter().zip(&pi) {
        let c = s.cycle(state);
        num += w * s.ap_share(state);
        den += w * c.mean_length;
        st.add_scaled(&c.station_time, w);
    }
    Ok(ChainSummary {
        throughput: num / den,
        fractions: st.scaled(T::one() / (den * T::count(s.stations))),
    })
}

/// Single-station PSM figures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsmSingleStation<T> {
    /// Mean time between successful exchanges, µs.
    pub mean_cycle: T,
    /// Mean time from the AP's data until the PS-POLL is acknowledged, µs.
    pub poll_delay: T,
    /// AP packet successes per µs.
    pub throughput: T,
    pub fractions: PerState<T>,
    pub average_current: T,
}

/// One station alternating between the AP's data and its own frames.
///
/// Both sides contend with `beta_2`. After the AP's data the station first
/// sends its PS-POLL alone, then the TCP ACK contends with the next RTS.
pub fn psm_n1_model<T: Real>(s: &PsmLongScenario<T>) -> Result<PsmSingleStation<T>, ModelError> {
    s.validate()?;
    if s.stations != 1 {
        return Err(ModelError::Invalid(format!(
            "single-station model needs N = 1, got {}",
            s.stations
        )));
    }
    let t = s.times();
    let f = t.frames;
    let beta = s.betas.beta(2);
    let stay = T::one() - beta;
    let p_idle = stay * stay;
    let p_single = beta * stay;
    let p_coll = beta * beta;
    let wait = t.slot * stay / beta;
    let poll_delay = t.poll_success() + wait;
    let success = T::one() - p_idle - p_coll;
    let mean_cycle = (p_idle * t.slot
        + p_single * (t.ap_success() + poll_delay)
        + p_single * t.ack_success()
        + p_coll * t.collision(0, 1, true))
        / success;
    let throughput = T::lit(0.5) / mean_cycle;

    let two = T::lit(2.0);
    let mut per = PerState::zero();
    per[RadioState::Id] = (p_idle * t.slot
        + p_coll * t.eifs
        + p_single * (t.sifs + t.difs)
        + p_single * (T::lit(4.0) * t.sifs + two * t.difs + wait))
        / success;
    per[RadioState::RxD] = (p_coll * (f.rts - f.tcp_ack).max(T::zero())
        + p_single * f.mac_ack
        + p_single * (f.rts + f.data + f.mac_ack))
        / success;
    per[RadioState::Tx] =
        (p_coll * f.tcp_ack + p_single * f.tcp_ack + p_single * (f.cts + f.mac_ack + f.ps_poll)) / success;
    let fractions = per.scaled(T::one() / mean_cycle);
    Ok(PsmSingleStation {
        mean_cycle,
        poll_delay,
        throughput,
        fractions,
        average_current: s.currents.average(&fractions),
    })
}

/// AP packet successes per µs.
pub fn psm_throughput<T: Real>(s: &PsmLongScenario<T>) -> Result<T, ModelError> {
    if s.stations == 1 {
        Ok(psm_n1_model(s)?.throughput)
    } else {
        Ok(solve_chain(s)?.throughput)
    }
}

pub fn psm_average_current<T: Real>(s: &PsmLongScenario<T>) -> Result<LongFileResult<T>, ModelError> {
    let (throughput, fractions, caveats) = if s.stations == 1 {
        let m = psm_n1_model(s)?;
        (m.throughput, m.fractions, Vec::new())
    } else {
        let c = solve_chain(s)?;
        let mut caveats = vec![CAVEAT_BOUNDARY.to_string()];
        if s.stations < CHAIN_VALIDATED_FROM {
            caveats.insert(0, CAVEAT_SMALL_N.to_string());
        }
        (c.throughput, c.fractions, caveats)
    };
    let throughput_mbps = throughput * s.params.payload_bits();
    let average_current = s.currents.average(&fractions);
    Ok(LongFileResult {
        mode: Mode::Psm,
        stations: s.stations,
        data_rate: s.params.data_rate,
        throughput,
        throughput_mbps,
        fractions,
        average_current,
        efficiency: LongFileResult::efficiency_of(throughput_mbps, s.stations, average_current),
        caveats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(n: usize, rate: f64) -> PsmLongScenario<f64> {
        PsmLongScenario::new(n, PhyMacParams::with_data_rate(rate), CurrentProfile::default()).unwrap()
    }

    #[test]
    fn corner_transitions() {
        let s = scenario(4, 11.0);
        let c = build_psm_chain(&s).unwrap();
        let idx = |x, y| s.index(PsmChainState { x, y });
        assert_eq!(c.prob(idx(0, 0), idx(1, 0)), 1.0);
        assert_eq!(c.prob(idx(4, 0), idx(3, 1)), 1.0);
        assert!((c.prob(idx(1, 3), idx(2, 2)) - 0.2).abs() < 1e-15);
        for row in c.matrix() {
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn index_is_dense() {
        let s = scenario(5, 11.0);
        for (i, st) in s.states().into_iter().enumerate() {
            assert_eq!(s.index(st), i);
        }
    }

    #[test]
    fn chain_needs_two_stations() {
        assert!(matches!(
            build_psm_chain(&scenario(1, 11.0)),
            Err(ModelError::TooFewStations { min: 2, got: 1 })
        ));
    }

    #[test]
    fn silent_ap_corner() {
        let s = scenario(3, 11.0);
        let c = s.cycle(PsmChainState { x: 3, y: 0 });
        assert_eq!(c.ap_share, 0.0);
        assert_eq!(c.station_time[RadioState::RxLs], 0.0);
    }

    #[test]
    fn empty_state_cycle() {
        let s = scenario(6, 11.0);
        let beta = s.betas.beta(1);
        let idle = 1.0 - beta;
        let expected = (idle * 20.0 + beta * s.times().ap_success()) / beta;
        assert!((psm_cycle_length(0, 0, &s) - expected).abs() < 1e-9);
    }

    #[test]
    fn poll_wait_with_even_odds() {
        let mut s = scenario(1, 11.0);
        s.betas = AttemptProbTable::from_values(vec![0.5, 0.5]);
        let m = psm_n1_model(&s).unwrap();
        assert!((m.poll_delay - (s.times().poll_success() + 20.0)).abs() < 1e-12);
    }

    #[test]
    fn single_station_fractions() {
        for rate in [2.0, 5.5, 11.0] {
            let m = psm_n1_model(&scenario(1, rate)).unwrap();
            assert!((m.fractions.total() - 1.0).abs() < 1e-9);
            assert_eq!(m.fractions[RadioState::RxLs], 0.0);
        }
    }

    #[test]
    fn caveats_for_small_populations() {
        let r = psm_average_current(&scenario(3, 11.0)).unwrap();
        assert_eq!(r.caveats.len(), 2);
        let r = psm_average_current(&scenario(7, 11.0)).unwrap();
        assert_eq!(r.caveats, vec![CAVEAT_BOUNDARY.to_string()]);
    }
}
