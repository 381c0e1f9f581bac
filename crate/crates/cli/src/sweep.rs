use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use wlan_energy::{
    cam_average_current, psm_average_current, short_model, AttemptProbTable, CamLongScenario, LongFileResult, Mode,
    PsmLongScenario, RadioState, ShortFileScenario, ShortFileSetup,
};
use wlan_sim::{estimate_metrics, run_sim, Estimate, SimConfig};

use crate::config::SweepConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Analytic,
    Sim,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LongRow {
    pub mode: Mode,
    pub rate_mbps: f64,
    pub stations: usize,
    pub source: Source,
    pub throughput_mbps: f64,
    pub throughput_se: Option<f64>,
    pub tx: f64,
    pub rxd: f64,
    pub rxls: f64,
    pub idle: f64,
    pub sleep: f64,
    pub current_ma: f64,
    pub current_se: Option<f64>,
    pub efficiency_mb_per_c: f64,
    /// Semicolon-separated modelling caveats.
    pub caveats: String,
}

impl LongRow {
    pub fn fractions(&self) -> [f64; 5] {
        [self.tx, self.rxd, self.rxls, self.idle, self.sleep]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShortRow {
    pub mode: Mode,
    pub rate_mbps: f64,
    pub stations: usize,
    pub source: Source,
    pub sojourn_s: f64,
    pub sojourn_se: Option<f64>,
    pub charge_per_file_c: f64,
    pub charge_se: Option<f64>,
    pub budget_c: f64,
    pub files_per_budget: f64,
    /// Files completed per second over the cell.
    pub completion_rate: f64,
    /// Share of measured time spent on HTTP request exchanges, which the
    /// analytic model leaves out.
    pub request_airtime_share: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconRow {
    pub workload: &'static str,
    pub mode: Mode,
    pub rate_mbps: f64,
    pub stations: usize,
    pub metric: &'static str,
    pub analytic: f64,
    pub simulated: f64,
    pub simulated_se: f64,
    pub abs_error: f64,
    /// `(analytic - simulated) / simulated`; empty when the simulated value
    /// is zero.
    pub relative_error: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepOutput {
    pub long: Vec<LongRow>,
    pub short: Vec<ShortRow>,
    pub reconciliation: Vec<ReconRow>,
}

#[derive(Debug, Clone, Copy)]
struct Point {
    index: usize,
    mode: Mode,
    rate: f64,
    stations: usize,
}

struct PointOutput {
    long: Vec<LongRow>,
    short: Vec<ShortRow>,
    reconciliation: Vec<ReconRow>,
}

/// Seed of replication `rep` of workload `w` at sweep point `p`.
fn sim_seed(base: u64, p: usize, w: u64, rep: usize) -> u64 {
    base.wrapping_mul(1_000_003)
        .wrapping_add(p as u64 * 10_007)
        .wrapping_add(w * 101)
        .wrapping_add(rep as u64)
}

/// Mean over replications; the standard error is the batch-means one for a
/// single replication and the spread of replication means otherwise.
fn combine(es: &[Estimate]) -> (f64, f64) {
    let n = es.len() as f64;
    let mean = es.iter().map(|e| e.value).sum::<f64>() / n;
    if es.len() == 1 {
        return (mean, es[0].se);
    }
    let var = es.iter().map(|e| (e.value - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn long_analytic(cfg: &SweepConfig, p: Point, table: &AttemptProbTable) -> Result<LongFileResult> {
    let params = cfg.params_at(p.rate);
    let r = match p.mode {
        Mode::Cam => cam_average_current(&CamLongScenario::with_table(
            p.stations,
            params,
            cfg.currents.clone(),
            table.clone(),
        )?)?,
        Mode::Psm => psm_average_current(&PsmLongScenario::with_table(
            p.stations,
            params,
            cfg.currents.clone(),
            table.clone(),
        )?)?,
    };
    Ok(r)
}

fn recon(
    workload: &'static str,
    p: Point,
    metric: &'static str,
    analytic: f64,
    (simulated, simulated_se): (f64, f64),
) -> ReconRow {
    ReconRow {
        workload,
        mode: p.mode,
        rate_mbps: p.rate,
        stations: p.stations,
        metric,
        analytic,
        simulated,
        simulated_se,
        abs_error: (analytic - simulated).abs(),
        relative_error: (simulated != 0.0).then(|| (analytic - simulated) / simulated),
    }
}

const FRACTION_METRICS: [&str; 5] = ["fraction_tx", "fraction_rxd", "fraction_rxls", "fraction_idle", "fraction_sleep"];

fn run_point(cfg: &SweepConfig, p: Point, table: &AttemptProbTable) -> Result<PointOutput> {
    let ctx = || format!("{} N={} at {} Mb/s", p.mode, p.stations, p.rate);
    let mut out = PointOutput {
        long: Vec::new(),
        short: Vec::new(),
        reconciliation: Vec::new(),
    };

    let a = long_analytic(cfg, p, table).with_context(ctx)?;
    let f = a.fractions.0;
    let analytic_long = LongRow {
        mode: p.mode,
        rate_mbps: p.rate,
        stations: p.stations,
        source: Source::Analytic,
        throughput_mbps: a.throughput_mbps,
        throughput_se: None,
        tx: f[0],
        rxd: f[1],
        rxls: f[2],
        idle: f[3],
        sleep: f[4],
        current_ma: a.average_current,
        current_se: None,
        efficiency_mb_per_c: a.efficiency,
        caveats: a.caveats.join("; "),
    };

    let setup = ShortFileSetup {
        stations: p.stations,
        mean_think_time: cfg.mean_think_time,
        file_bits: cfg.file_bits(),
        budget: cfg.budget,
        ..Default::default()
    };
    let scenario = ShortFileScenario::derive(p.mode, &setup, &cfg.params_at(p.rate), &cfg.currents).with_context(ctx)?;
    let s = short_model(&scenario).with_context(ctx)?;
    let analytic_short = ShortRow {
        mode: p.mode,
        rate_mbps: p.rate,
        stations: p.stations,
        source: Source::Analytic,
        sojourn_s: s.sojourn,
        sojourn_se: None,
        charge_per_file_c: s.charge_per_file,
        charge_se: None,
        budget_c: s.budget,
        files_per_budget: s.files_per_budget,
        completion_rate: s.completion_rate,
        request_airtime_share: None,
    };

    out.long.push(analytic_long.clone());
    out.short.push(analytic_short.clone());
    if cfg.analytic_only {
        return Ok(out);
    }

    let mut long_metrics = Vec::with_capacity(cfg.sim_reps);
    let mut short_metrics = Vec::with_capacity(cfg.sim_reps);
    let mut request_share = 0.0;
    let mut short_span = 0.0;
    for rep in 0..cfg.sim_reps {
        let mut sc = SimConfig::long(p.mode, p.stations, p.rate, sim_seed(cfg.seed, p.index, 0, rep));
        sc.params = cfg.params_at(p.rate);
        sc.currents = cfg.currents.clone();
        sc.duration = cfg.long_duration;
        sc.warmup = cfg.long_warmup;
        let res = run_sim(&sc).with_context(ctx)?;
        long_metrics.push(estimate_metrics(&res, &sc).with_context(ctx)?);

        let mut sc = SimConfig::short(
            p.mode,
            p.stations,
            cfg.mean_think_time,
            cfg.file_bits(),
            sim_seed(cfg.seed, p.index, 1, rep),
        );
        sc.params = cfg.params_at(p.rate);
        sc.currents = cfg.currents.clone();
        sc.duration = cfg.short_duration;
        sc.warmup = cfg.short_warmup;
        let res = run_sim(&sc).with_context(ctx)?;
        request_share += res.counters.request_airtime_ns as f64;
        short_span += res.measured_ns as f64;
        short_metrics.push(estimate_metrics(&res, &sc).with_context(ctx)?);
    }

    let pick = |f: &dyn Fn(&wlan_sim::SimMetrics) -> Estimate| combine(&long_metrics.iter().map(f).collect::<Vec<_>>());
    let th = pick(&|m| m.throughput_mbps);
    let cur = pick(&|m| m.average_current);
    let fr: Vec<(f64, f64)> = RadioState::ALL.iter().map(|&r| pick(&|m| m.fractions[r.index()])).collect();
    let sim_long = LongRow {
        source: Source::Sim,
        throughput_mbps: th.0,
        throughput_se: Some(th.1),
        tx: fr[0].0,
        rxd: fr[1].0,
        rxls: fr[2].0,
        idle: fr[3].0,
        sleep: fr[4].0,
        current_ma: cur.0,
        current_se: Some(cur.1),
        efficiency_mb_per_c: th.0 / p.stations as f64 / (cur.0 / 1000.0),
        caveats: String::new(),
        ..analytic_long.clone()
    };
    out.reconciliation.push(recon("long", p, "throughput_mbps", a.throughput_mbps, th));
    out.reconciliation.push(recon("long", p, "current_ma", a.average_current, cur));
    for (i, name) in FRACTION_METRICS.iter().enumerate() {
        out.reconciliation.push(recon("long", p, name, f[i], fr[i]));
    }
    out.long.push(sim_long);

    let pick = |f: &dyn Fn(&wlan_sim::SimMetrics) -> Option<Estimate>| {
        combine(&short_metrics.iter().map(|m| f(m).expect("short workload")).collect::<Vec<_>>())
    };
    let soj = pick(&|m| m.sojourn);
    let charge = pick(&|m| m.charge_per_file);
    let files: u64 = short_metrics.iter().map(|m| m.files_completed).sum();
    out.short.push(ShortRow {
        source: Source::Sim,
        sojourn_s: soj.0,
        sojourn_se: Some(soj.1),
        charge_per_file_c: charge.0,
        charge_se: Some(charge.1),
        files_per_budget: cfg.budget / charge.0,
        completion_rate: files as f64 / (short_span * 1e-9),
        request_airtime_share: Some(request_share / short_span),
        ..analytic_short
    });
    out.reconciliation.push(recon("short", p, "sojourn_s", s.sojourn, soj));
    out.reconciliation.push(recon("short", p, "charge_per_file_c", s.charge_per_file, charge));
    Ok(out)
}

/// Runs every point of the sweep. Points run in parallel; rows come back in
/// mode, rate, station order regardless of scheduling.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let stations = cfg.stations()?;
    let n_max = *stations.last().expect("validated non-empty");
    let tables: Vec<AttemptProbTable> = cfg
        .rates
        .iter()
        .map(|&r| AttemptProbTable::build(n_max + 1, &cfg.params_at(r), wlan_energy::saturation::default_tolerance()))
        .collect::<Result<_, _>>()?;

    let mut points = Vec::new();
    for &mode in &cfg.modes {
        for (ri, &rate) in cfg.rates.iter().enumerate() {
            for &n in &stations {
                points.push((
                    Point {
                        index: points.len(),
                        mode,
                        rate,
                        stations: n,
                    },
                    ri,
                ));
            }
        }
    }
    let results: Vec<Result<PointOutput>> = points
        .par_iter()
        .map(|&(p, ri)| run_point(cfg, p, &tables[ri]))
        .collect();

    let mut out = SweepOutput::default();
    for r in results {
        let r = r?;
        out.long.extend(r.long);
        out.short.extend(r.short);
        out.reconciliation.extend(r.reconciliation);
    }
    Ok(out)
}
