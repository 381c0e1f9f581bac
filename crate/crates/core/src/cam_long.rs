//! N CAM stations, each running one long TCP download through the AP.
//!
//! The chain is embedded at successful transmissions and counts the TCP
//! ACKs waiting at the stations. With a window of `W` packets per flow and
//! `N` flows there are `N*W` packets in flight, so the AP holds data
//! whenever fewer than `N*W` ACKs are queued upstream.

use crate::contention::{cycle_stats, Contenders, CycleStats, ExchangeTimes};
use crate::markov::{birth_death_stationary, FiniteDtmc};
use crate::model::{LongFileResult, Mode, ModelError};
use crate::params::{validate_params, CurrentProfile, PerState, PhyMacParams, RadioState};
use crate::saturation::{default_tolerance, AttemptProbTable};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct CamLongScenario<T> {
    pub stations: usize,
    pub window: usize,
    pub params: PhyMacParams<T>,
    pub currents: CurrentProfile<T>,
    pub betas: AttemptProbTable<T>,
}

impl<T: Real> CamLongScenario<T> {
    /// Scenario with the attempt probabilities solved from `params`.
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
            window: params.tcp_window as usize,
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

    /// Largest chain state, `N * W`.
    pub fn max_state(&self) -> usize {
        self.stations * self.window
    }

    pub fn times(&self) -> ExchangeTimes<T> {
        ExchangeTimes::new(&self.params)
    }

    /// Contenders and their attempt probability in state `k`.
    pub fn contenders(&self, k: usize) -> (Contenders, T) {
        assert!(k <= self.max_state(), "state {k} outside 0..={}", self.max_state());
        let c = Contenders {
            polls: 0,
            acks: k.min(self.stations),
            ap: k < self.max_state(),
        };
        (c, self.betas.beta(c.total()))
    }

    pub fn cycle(&self, k: usize) -> CycleStats<T> {
        let (c, beta) = self.contenders(k);
        cycle_stats(c, beta, self.stations, &self.times())
    }

    /// Probability that the next success is the AP's (chain moves up).
    pub fn up_probability(&self, k: usize) -> T {
        if k == self.max_state() {
            T::zero()
        } else {
            T::one() / T::count(k.min(self.stations) + 1)
        }
    }

    /// Stationary law of the embedded chain from its product form.
    pub fn stationary(&self) -> Vec<T> {
        let n = self.max_state();
        let up: Vec<T> = (0..n).map(|k| self.up_probability(k)).collect();
        let down: Vec<T> = (1..=n).map(|k| T::one() - self.up_probability(k)).collect();
        birth_death_stationary(&up, &down)
    }
}

/// Embedded chain over `0..=N*W` ACKs queued at the stations.
pub fn build_cam_chain<T: Real>(s: &CamLongScenario<T>) -> Result<FiniteDtmc<T>, ModelError> {
    s.validate()?;
    let n = s.max_state();
    let mut p = vec![vec![T::zero(); n + 1]; n + 1];
    for k in 0..=n {
        let up = s.up_probability(k);
        if k < n {
            p[k][k + 1] = up;
        }
        if k > 0 {
            p[k][k - 1] = T::one() - up;
        }
    }
    let labels = (0..=n).map(|k| k.to_string()).collect();
    Ok(FiniteDtmc::new(labels, p)?)
}

/// Mean cycle length `E_k[T]` in µs.
pub fn cam_cycle_length<T: Real>(k: usize, s: &CamLongScenario<T>) -> T {
    s.cycle(k).mean_length
}

/// Expected time in state `r` during one cycle from `k`, summed over the
/// `N` stations.
pub fn cam_state_times<T: Real>(k: usize, r: RadioState, s: &CamLongScenario<T>) -> T {
    s.cycle(k).station_time[r]
}

/// AP packet successes per µs.
pub fn cam_throughput<T: Real>(s: &CamLongScenario<T>) -> Result<T, ModelError> {
    s.validate()?;
    let pi = s.stationary();
    let mut num = T::zero();
    let mut den = T::zero();
    for (k, &w) in pi.iter().enumerate() {
        num += w * s.up_probability(k);
        den += w * cam_cycle_length(k, s);
    }
    Ok(num / den)
}

pub fn cam_average_current<T: Real>(s: &CamLongScenario<T>) -> Result<LongFileResult<T>, ModelError> {
    s.validate()?;
    let pi = s.stationary();
    let mut num = T::zero();
    let mut den = T::zero();
    let mut st = PerState::zero();
    for (k, &w) in pi.iter().enumerate() {
        let c = s.cycle(k);
        num += w * s.up_probability(k);
        den += w * c.mean_length;
        st.add_scaled(&c.station_time, w);
    }
    let throughput = num / den;
    let throughput_mbps = throughput * s.params.payload_bits();
    let fractions = st.scaled(T::one() / (den * T::count(s.stations)));
    let average_current = s.currents.average(&fractions);
    Ok(LongFileResult {
        mode: Mode::Cam,
        stations: s.stations,
        data_rate: s.params.data_rate,
        throughput,
        throughput_mbps,
        fractions,
        average_current,
        efficiency: LongFileResult::efficiency_of(throughput_mbps, s.stations, average_current),
        caveats: Vec::new(),
    })
}

/// Current (mA) of an idle CAM station that overhears `k` active
/// downloads. It decodes headers and control frames, listens to data
/// addressed elsewhere and idles otherwise.
pub fn passive_current<T: Real>(k: usize, s: &CamLongScenario<T>) -> Result<T, ModelError> {
    if k == 0 {
        return Ok(s.currents.idle);
    }
    let active = CamLongScenario::with_table(k, s.params.clone(), s.currents.clone(), s.betas.clone())?;
    let pi = active.stationary();
    let mut lt = PerState::zero();
    let mut den = T::zero();
    for (state, &w) in pi.iter().enumerate() {
        let c = active.cycle(state);
        lt.add_scaled(&c.listener_time, w);
        den += w * c.mean_length;
    }
    Ok(s.currents.average(&lt.scaled(T::one() / den)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(n: usize, w: u32) -> CamLongScenario<f64> {
        let params = PhyMacParams {
            tcp_window: w,
            ..PhyMacParams::default()
        };
        CamLongScenario::new(n, params, CurrentProfile::default()).unwrap()
    }

    #[test]
    fn two_state_chain() {
        let c = build_cam_chain(&scenario(1, 1)).unwrap();
        assert_eq!(c.matrix(), &[vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn three_state_chain() {
        let c = build_cam_chain(&scenario(1, 2)).unwrap();
        assert_eq!(c.prob(0, 1), 1.0);
        assert_eq!(c.prob(1, 2), 0.5);
        assert_eq!(c.prob(1, 0), 0.5);
        assert_eq!(c.prob(2, 1), 1.0);
    }

    #[test]
    fn product_form_matches_solver() {
        let s = scenario(3, 4);
        let pi = build_cam_chain(&s).unwrap().stationary().unwrap();
        for (a, b) in pi.iter().zip(s.stationary()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_state_cycle() {
        let s = scenario(4, 20);
        let beta = s.betas.beta(1);
        let idle = 1.0 - beta;
        let expected = (idle * 20.0 + beta * s.times().ap_success()) / (1.0 - idle);
        assert!((cam_cycle_length(0, &s) - expected).abs() < 1e-9);
        let tx = cam_state_times(0, RadioState::Tx, &s);
        let f = s.params.frame_times();
        assert!((tx - (f.mac_ack + f.cts)).abs() < 1e-9);
    }

    #[test]
    fn full_state_has_no_ap_terms() {
        let s = scenario(2, 3);
        let c = s.cycle(s.max_state());
        assert_eq!(c.ap_share, 0.0);
        assert_eq!(c.station_time[RadioState::RxLs], 0.0);
    }

    #[test]
    fn single_packet_window_throughput() {
        let s = scenario(1, 1);
        let th = cam_throughput(&s).unwrap();
        let mean = (cam_cycle_length(0, &s) + cam_cycle_length(1, &s)) / 2.0;
        assert!((th - 0.5 / mean).abs() < 1e-15);
    }

    #[test]
    fn fractions_sum_to_one() {
        for n in 1..=8 {
            let r = cam_average_current(&scenario(n, 20)).unwrap();
            assert!((r.fractions.total() - 1.0).abs() < 1e-9);
            assert_eq!(r.fractions[RadioState::Sl], 0.0);
            assert!(r.average_current > 10.0 && r.average_current < 300.0);
        }
    }

    #[test]
    fn passive_current_default_profile_is_idle() {
        let s = scenario(8, 20);
        for k in 0..=8 {
            assert!((passive_current(k, &s).unwrap() - 170.0).abs() < 1e-9);
        }
    }
}
