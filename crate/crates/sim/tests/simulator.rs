use wlan_energy::{
    cam_average_current, CamLongScenario, CurrentProfile, Mode, PhyMacParams, RadioState,
};
use wlan_sim::{estimate_metrics, run_sim, write_trace, Counters, SimConfig, SimError, SimResult, Workload};

fn long(mode: Mode, n: usize, rate: f64, seed: u64, secs: f64) -> SimConfig {
    let mut cfg = SimConfig::long(mode, n, rate, seed);
    cfg.duration = secs;
    cfg.warmup = secs / 10.0;
    cfg
}

#[test]
fn same_seed_is_bit_identical() {
    for mode in Mode::ALL {
        let cfg = long(mode, 3, 11.0, 42, 5.0);
        let a = run_sim(&cfg).unwrap();
        let b = run_sim(&cfg).unwrap();
        assert_eq!(a, b);
        let other = run_sim(&SimConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.state_ns, other.state_ns);
    }
}

#[test]
fn state_times_cover_the_window_exactly() {
    for mode in Mode::ALL {
        let cfg = long(mode, 4, 11.0, 1, 10.0);
        let res = run_sim(&cfg).unwrap();
        for t in &res.state_ns {
            assert_eq!(t.iter().sum::<u64>(), res.measured_ns);
        }
        assert_eq!(res.batch_ns.iter().sum::<u64>(), res.measured_ns);
        for (i, t) in res.state_ns.iter().enumerate() {
            let expect: f64 = RadioState::ALL
                .iter()
                .map(|&r| cfg.currents.current(r) * t[r.index()] as f64 * 1e-9)
                .sum::<f64>()
                / 1000.0;
            assert!((res.charge[i] - expect).abs() <= 1e-12 * expect);
        }
        let m = estimate_metrics(&res, &cfg).unwrap();
        let total: f64 = m.fractions.iter().map(|e| e.value).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(res.stuck_detections(), 0);
    }
}

#[test]
fn single_psm_station_at_2mbps_lands_in_reference_band() {
    let cfg = SimConfig::long(Mode::Psm, 1, 2.0, 5);
    let m = estimate_metrics(&run_sim(&cfg).unwrap(), &cfg).unwrap();
    let th = m.throughput_mbps.value;
    assert!((1.1..=1.35).contains(&th), "throughput {th}");
}

#[test]
fn cam_two_stations_fractions_track_the_chain() {
    let cfg = SimConfig::long(Mode::Cam, 2, 11.0, 9);
    let res = run_sim(&cfg).unwrap();
    let m = estimate_metrics(&res, &cfg).unwrap();
    let s = CamLongScenario::new(2, PhyMacParams::with_data_rate(11.0), CurrentProfile::default()).unwrap();
    let a = cam_average_current(&s).unwrap();
    for r in RadioState::ALL {
        let d = (a.fraction(r) - m.fraction(r)).abs();
        assert!(d <= 0.05, "{r:?}: analytic {} sim {}", a.fraction(r), m.fraction(r));
    }
}

#[test]
fn all_sleep_gives_sleep_current() {
    let cfg = SimConfig::long(Mode::Psm, 2, 11.0, 0);
    let span = 1_000_000_000u64;
    let all_sleep = [0, 0, 0, 0, span];
    let res = SimResult {
        stations: 2,
        measured_ns: span,
        batch_ns: vec![span / 2; 2],
        state_ns: vec![all_sleep; 2],
        batch_state_ns: vec![vec![[0, 0, 0, 0, span / 2]; 2]; 2],
        ap_data_successes: 0,
        batch_ap_successes: vec![0; 2],
        files_completed: vec![0; 2],
        sojourn_samples: vec![Vec::new(); 2],
        batch_files: vec![0; 2],
        batch_sojourn_sum: vec![0.0; 2],
        charge: vec![0.0; 2],
        counters: Counters::default(),
        trace: Vec::new(),
    };
    let m = estimate_metrics(&res, &cfg).unwrap();
    assert_eq!(m.average_current.value, cfg.currents.sleep);
    assert_eq!(m.average_current.se, 0.0);
}

#[test]
fn idle_psm_stations_doze() {
    // Think times far longer than the run: nobody ever requests a file.
    let mut cfg = SimConfig::short(Mode::Psm, 3, 1e9, 400.0 * 8192.0, 2);
    cfg.beacons = false;
    cfg.duration = 5.0;
    cfg.warmup = 1.0;
    let res = run_sim(&cfg).unwrap();
    for t in &res.state_ns {
        assert_eq!(t[RadioState::Sl.index()], res.measured_ns);
    }
    assert_eq!(estimate_metrics(&res, &cfg), Err(SimError::NoCompletedFiles));
}

#[test]
fn short_psm_sojourn_exceeds_half_a_beacon() {
    let mut cfg = SimConfig::short(Mode::Psm, 4, 5.0, 400.0 * 8192.0, 11);
    cfg.duration = 200.0;
    let res = run_sim(&cfg).unwrap();
    let m = estimate_metrics(&res, &cfg).unwrap();
    let b = cfg.params.beacon_interval / 1000.0;
    assert!(m.sojourn.unwrap().value >= b / 2.0);
    assert!(res.counters.beacons > 0 && res.counters.requests > 0);
    assert_eq!(res.stuck_detections(), 0);
}

#[test]
fn short_cam_flow_balance() {
    // Files completed per station track think + sojourn cycles.
    let mut cfg = SimConfig::short(Mode::Cam, 4, 5.0, 400.0 * 8192.0, 3);
    cfg.duration = 400.0;
    let res = run_sim(&cfg).unwrap();
    let m = estimate_metrics(&res, &cfg).unwrap();
    let span = res.measured_ns as f64 * 1e-9;
    let expect = 4.0 * span / (5.0 + m.sojourn.unwrap().value);
    let got = m.files_completed as f64;
    assert!((got - expect).abs() / expect < 0.1, "files {got} expected {expect}");
}

#[test]
fn trace_lines_are_tab_separated() {
    let mut cfg = long(Mode::Psm, 2, 11.0, 4, 0.2);
    cfg.warmup = 0.0;
    cfg.trace = true;
    let res = run_sim(&cfg).unwrap();
    assert!(!res.trace.is_empty());
    let mut buf = Vec::new();
    write_trace(&res.trace, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), res.trace.len());
    assert!(text.lines().all(|l| l.split('\t').count() == 4));
    assert!(text.contains("sta0") && text.contains("ap"));
}

#[test]
fn invalid_configs_are_rejected() {
    let base = long(Mode::Cam, 2, 11.0, 1, 1.0);
    let bad = [
        SimConfig { stations: 0, ..base.clone() },
        SimConfig { warmup: 2.0, ..base.clone() },
        SimConfig { warmup: -1.0, ..base.clone() },
        SimConfig { batches: 1, ..base.clone() },
        SimConfig {
            workload: Workload::Short {
                think_rate: 0.0,
                mean_file_bits: 1e6,
            },
            ..base.clone()
        },
    ];
    for cfg in bad {
        assert!(matches!(run_sim(&cfg), Err(SimError::InvalidConfig(_))), "{cfg:?}");
    }
}
