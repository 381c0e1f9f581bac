use serde::{Deserialize, Serialize};

use wlan_energy::RadioState;

use crate::config::{SimConfig, Workload};
use crate::{SimError, SimResult};

/// Point estimate with a batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

fn batch_se(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    if values.len() < 2 {
        return f64::NAN;
    }
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    /// AP goodput, Mb/s.
    pub throughput_mbps: Estimate,
    /// Station-averaged fraction of time per radio state.
    pub fractions: [Estimate; 5],
    /// Station-averaged current, mA.
    pub average_current: Estimate,
    /// Mean sojourn per file, s (short workloads).
    pub sojourn: Option<Estimate>,
    /// Mean charge per completed file, C (short workloads).
    pub charge_per_file: Option<Estimate>,
    pub files_completed: u64,
}

impl SimMetrics {
    pub fn fraction(&self, r: RadioState) -> f64 {
        self.fractions[r.index()].value
    }
}

/// Estimates from one replication.
pub fn estimate_metrics(res: &SimResult, cfg: &SimConfig) -> Result<SimMetrics, SimError> {
    let n = res.stations as f64;
    let bits = cfg.params.payload_bits();
    let c = &cfg.currents;
    let batches = res.batch_ns.len();

    let fraction_of = |times: &[[u64; 5]], span: u64, r: usize| {
        times.iter().map(|t| t[r] as f64).sum::<f64>() / (n * span as f64)
    };
    let current_of = |times: &[[u64; 5]], span: u64| {
        RadioState::ALL
            .iter()
            .map(|&r| c.current(r) * fraction_of(times, span, r.index()))
            .sum::<f64>()
    };
    let charge_of = |times: &[[u64; 5]]| {
        times
            .iter()
            .map(|t| {
                RadioState::ALL
                    .iter()
                    .map(|&r| c.current(r) * t[r.index()] as f64 * 1e-9)
                    .sum::<f64>()
            })
            .sum::<f64>()
            / 1000.0
    };

    let th = |succ: u64, span: u64| succ as f64 * bits / (span as f64 / 1000.0);
    let throughput_mbps = Estimate {
        value: th(res.ap_data_successes, res.measured_ns),
        se: batch_se(
            &(0..batches)
                .map(|b| th(res.batch_ap_successes[b], res.batch_ns[b]))
                .collect::<Vec<_>>(),
        ),
    };
    let fractions = std::array::from_fn(|r| Estimate {
        value: fraction_of(&res.state_ns, res.measured_ns, r),
        se: batch_se(
            &(0..batches)
                .map(|b| fraction_of(&res.batch_state_ns[b], res.batch_ns[b], r))
                .collect::<Vec<_>>(),
        ),
    });
    let average_current = Estimate {
        value: current_of(&res.state_ns, res.measured_ns),
        se: batch_se(
            &(0..batches)
                .map(|b| current_of(&res.batch_state_ns[b], res.batch_ns[b]))
                .collect::<Vec<_>>(),
        ),
    };

    let files: u64 = res.files_completed.iter().sum();
    let (sojourn, charge_per_file) = match cfg.workload {
        Workload::Long => (None, None),
        Workload::Short { .. } => {
            if files == 0 {
                return Err(SimError::NoCompletedFiles);
            }
            let total: f64 = res.sojourn_samples.iter().flatten().sum();
            let full: Vec<usize> = (0..batches).filter(|&b| res.batch_files[b] > 0).collect();
            let sojourn = Estimate {
                value: total / files as f64,
                se: batch_se(
                    &full
                        .iter()
                        .map(|&b| res.batch_sojourn_sum[b] / res.batch_files[b] as f64)
                        .collect::<Vec<_>>(),
                ),
            };
            let charge = Estimate {
                value: charge_of(&res.state_ns) / files as f64,
                se: batch_se(
                    &full
                        .iter()
                        .map(|&b| charge_of(&res.batch_state_ns[b]) / res.batch_files[b] as f64)
                        .collect::<Vec<_>>(),
                ),
            };
            (Some(sojourn), Some(charge))
        }
    };
    Ok(SimMetrics {
        throughput_mbps,
        fractions,
        average_current,
        sojourn,
        charge_per_file,
        files_completed: files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_standard_error() {
        assert_eq!(batch_se(&[2.0, 2.0, 2.0]), 0.0);
        // sample variance 1, four batches
        let se = batch_se(&[1.0, 2.0, 3.0, 2.0]);
        assert!((se - (2.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert!(batch_se(&[1.0]).is_nan());
    }
}
