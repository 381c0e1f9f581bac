use proptest::prelude::*;

use wlan_energy::contention::{listener_time, outcomes, Contenders, ExchangeTimes};
use wlan_energy::short_files::{ShortFileScenario as Scenario, WakeCorrection};
use wlan_energy::{
    beacon_dtmc, build_cam_chain, build_psm_chain, cam_average_current, passive_current, psm_average_current,
    q_departures, short_model, time_in_state, CamLongScenario, CurrentProfile, Mode, PhyMacParams,
    PsmLongScenario, RadioState,
};

fn rate() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(2.0), Just(5.5), Just(11.0)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_outcome_accounts_for_all_station_time(
        n in 1usize..12, polls in 0usize..12, acks in 0usize..12, ap: bool,
        beta in 0.001f64..0.5, r in rate(),
    ) {
        let polls = polls.min(n);
        let acks = acks.min(n - polls);
        prop_assume!(polls + acks + usize::from(ap) > 0);
        let t = ExchangeTimes::new(&PhyMacParams::with_data_rate(r));
        let c = Contenders { polls, acks, ap };
        let mut total = 0.0;
        for o in outcomes(c, beta, n, &t) {
            let expected = n as f64 * o.duration;
            prop_assert!((o.station_time.total() - expected).abs() <= 1e-12 * expected);
            prop_assert!(o.station_time.0.iter().all(|v| *v >= 0.0));
            prop_assert!((listener_time(o.kind, &t).total() - o.duration).abs() <= 1e-12 * o.duration);
            total += o.probability;
        }
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partition_of_the_beacon_interval(j in 0usize..=16, b in 0.01f64..1.0, mu in 0.05f64..40.0) {
        let sum: f64 = (0..=j).map(|k| time_in_state(j, k, b, mu)).sum();
        prop_assert!((sum - b).abs() <= 1e-9 * b);
        for k in 0..=j {
            prop_assert!(time_in_state(j, k, b, mu) >= 0.0);
        }
        prop_assert_eq!(time_in_state(j, j + 1, b, mu), 0.0);
    }

    #[test]
    fn departures_normalize(i in 0usize..20, b in 0.01f64..1.0, mu in 0.05f64..40.0) {
        let sum: f64 = (0..=i).map(|m| q_departures(i, m, b, mu).unwrap()).sum();
        prop_assert!((sum - 1.0).abs() <= 1e-15 * (i + 1) as f64);
    }

    #[test]
    fn beacon_rows_are_stochastic(n in 1usize..=16, lambda in 0.01f64..5.0, mu in 0.1f64..20.0) {
        let s = Scenario {
            mode: Mode::Psm,
            stations: n,
            think_rate: lambda,
            file_bits: 1.0,
            beacon_interval: 0.1,
            listen_time: 0.005,
            throughput: mu,
            currents: CurrentProfile::default(),
            active_currents: vec![180.0; n],
            passive_currents: vec![10.0; n],
            wake_correction: WakeCorrection::default(),
            budget: 100.0,
        };
        let c = beacon_dtmc(&s).unwrap();
        for row in c.matrix() {
            let sum: f64 = row.iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
        }
        let pi = c.stationary().unwrap();
        prop_assert!(c.residual(&pi) <= 1e-10);
        let r = short_model(&s).unwrap();
        prop_assert!((r.occupancy.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        prop_assert!(r.occupancy.iter().all(|p| *p >= 0.0));
        prop_assert!(r.sojourn >= 0.05);
        prop_assert!(r.charge_per_file > 0.0);
    }
}

#[test]
fn long_file_fractions_and_residuals() {
    for rate in [2.0, 5.5, 11.0] {
        let p = PhyMacParams::with_data_rate(rate);
        for n in 1..=10 {
            let cam = CamLongScenario::new(n, p.clone(), CurrentProfile::default()).unwrap();
            let chain = build_cam_chain(&cam).unwrap();
            let pi = chain.stationary().unwrap();
            assert!(chain.residual(&pi) <= 1e-10);
            let r = cam_average_current(&cam).unwrap();
            assert!((r.fractions.total() - 1.0).abs() <= 1e-9);
            assert_eq!(r.fractions[RadioState::Sl], 0.0);

            let psm = PsmLongScenario::new(n, p.clone(), CurrentProfile::default()).unwrap();
            if n >= 2 {
                let chain = build_psm_chain(&psm).unwrap();
                let pi = chain.stationary().unwrap();
                assert!(chain.residual(&pi) <= 1e-10, "n={n}");
            }
            let r = psm_average_current(&psm).unwrap();
            assert!((r.fractions.total() - 1.0).abs() <= 1e-9);
            assert_eq!(r.fractions[RadioState::Sl], 0.0);
            assert!(r.average_current > 10.0 && r.average_current < 300.0);
        }
    }
}

#[test]
fn psm_chain_has_one_recurrent_class_up_to_thirty() {
    let p = PhyMacParams::default();
    for n in 2..=30 {
        let s = PsmLongScenario::new(n, p.clone(), CurrentProfile::default()).unwrap();
        build_psm_chain(&s).unwrap().check_single_recurrent_class().unwrap();
    }
}

#[test]
fn cam_throughput_is_flat_in_n() {
    for rate in [2.0, 11.0] {
        let p = PhyMacParams::with_data_rate(rate);
        let th: Vec<f64> = (2..=8)
            .map(|n| {
                let s = CamLongScenario::new(n, p.clone(), CurrentProfile::default()).unwrap();
                cam_average_current(&s).unwrap().throughput_mbps
            })
            .collect();
        let max = th.iter().cloned().fold(f64::MIN, f64::max);
        let min = th.iter().cloned().fold(f64::MAX, f64::min);
        assert!((max - min) / min < 0.10, "{th:?}");
    }
    let at = |r: f64| {
        let s = CamLongScenario::new(4, PhyMacParams::with_data_rate(r), CurrentProfile::default()).unwrap();
        cam_average_current(&s).unwrap().throughput_mbps
    };
    assert!(at(11.0) > at(2.0));
}

#[test]
fn cam_efficiency_falls_like_one_over_n() {
    let p = PhyMacParams::default();
    let eff = |n| {
        let s = CamLongScenario::new(n, p.clone(), CurrentProfile::default()).unwrap();
        cam_average_current(&s).unwrap().efficiency
    };
    let ratio = eff(8) / eff(4);
    assert!((0.4..=0.6).contains(&ratio), "{ratio}");
}

#[test]
fn passive_current_rises_above_idle_and_levels_off() {
    let currents = CurrentProfile {
        receive_decode: 230.0,
        receive_listen: 200.0,
        ..CurrentProfile::default()
    };
    let s = CamLongScenario::new(8, PhyMacParams::default(), currents).unwrap();
    assert_eq!(passive_current(0, &s).unwrap(), 170.0);
    let j: Vec<f64> = (1..=8).map(|k| passive_current(k, &s).unwrap()).collect();
    assert!(j.iter().all(|&v| v > 170.0 && v < 230.0), "{j:?}");
    // Past two active stations the overheard mix barely changes.
    for w in j[1..].windows(2) {
        assert!((w[1] - w[0]).abs() / w[0] < 1e-3, "{j:?}");
    }
}
