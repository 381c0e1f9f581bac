//! Single-station PSM figures against reference values.

use wlan_energy::{psm_n1_model, CurrentProfile, PhyMacParams, PsmLongScenario};

#[test]
fn table_values_within_five_percent() {
    let cases = [(2.0, 1.28, 187.86), (5.5, 2.33, 197.37), (11.0, 3.04, 203.78)];
    for (rate, mbps, ma) in cases {
        let p = PhyMacParams::with_data_rate(rate);
        let s = PsmLongScenario::new(1, p.clone(), CurrentProfile::default()).unwrap();
        let m = psm_n1_model(&s).unwrap();
        let th = m.throughput * p.payload_bits();
        assert!((th - mbps).abs() / mbps <= 0.05, "{rate}: {th}");
        assert!((m.average_current - ma).abs() / ma <= 0.05, "{rate}: {}", m.average_current);
    }
}

#[test]
fn two_contender_attempt_probability() {
    // Frozen from the bisection oracle in the saturation unit tests.
    let s = PsmLongScenario::new(1, PhyMacParams::default(), CurrentProfile::default()).unwrap();
    assert!((s.betas.beta(1) - 2.0 / 31.0).abs() < 1e-12);
    assert!((s.betas.beta(2) - 0.060255).abs() < 1e-6);
}
