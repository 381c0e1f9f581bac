use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use wlan_energy::Mode;

use crate::sweep::{LongRow, ShortRow, Source, SweepOutput};

/// Files written by [`write_outputs`], in write order.
pub const OUTPUT_FILES: [&str; 9] = [
    "fractions_vs_n.csv",
    "current_vs_n.csv",
    "efficiency_vs_n.csv",
    "throughput_vs_n.csv",
    "sojourn_vs_n.csv",
    "files_per_budget_vs_n.csv",
    "reconciliation.csv",
    "long_results.csv",
    "short_results.csv",
];

type Column<R> = (&'static str, fn(&R) -> Option<f64>);

const KEY_HEADER: [&str; 4] = ["mode", "rate_mbps", "stations", "source"];

fn key(mode: Mode, rate: f64, stations: usize, source: Source) -> [String; 4] {
    let source = match source {
        Source::Analytic => "analytic",
        Source::Sim => "sim",
    };
    [mode.to_string(), format!("{rate:?}"), stations.to_string(), source.to_string()]
}

fn long_key(r: &LongRow) -> [String; 4] {
    key(r.mode, r.rate_mbps, r.stations, r.source)
}

fn short_key(r: &ShortRow) -> [String; 4] {
    key(r.mode, r.rate_mbps, r.stations, r.source)
}

/// Writes `rows` as the four key columns followed by `columns`; `None`
/// becomes an empty field.
fn write_figure<R>(dir: &Path, name: &str, rows: &[R], key: fn(&R) -> [String; 4], columns: &[Column<R>]) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(KEY_HEADER.iter().copied().chain(columns.iter().map(|c| c.0)))?;
    for r in rows {
        let values = columns.iter().map(|c| c.1(r).map(|v| format!("{v:?}")).unwrap_or_default());
        w.write_record(key(r).into_iter().chain(values))?;
    }
    w.flush()?;
    Ok(path)
}

/// Header of `reconciliation.csv`, also written when there are no rows.
pub const RECONCILIATION_HEADER: [&str; 10] = [
    "workload",
    "mode",
    "rate_mbps",
    "stations",
    "metric",
    "analytic",
    "simulated",
    "simulated_se",
    "abs_error",
    "relative_error",
];

fn write_csv<S: Serialize>(dir: &Path, name: &str, rows: &[S], empty_header: &[&str]) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
    if rows.is_empty() {
        w.write_record(empty_header)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(path)
}

/// Writes one CSV per figure family plus the reconciliation and full
/// result tables into `dir`, creating it if needed.
pub fn write_outputs(out: &SweepOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let long = out.long.as_slice();
    let short = out.short.as_slice();
    let [fr, cur, eff, th, soj, fb, rec, long_all, short_all] = OUTPUT_FILES;
    Ok(vec![
        write_figure(
            dir,
            fr,
            long,
            long_key,
            &[
                ("tx", |r| Some(r.tx)),
                ("rxd", |r| Some(r.rxd)),
                ("rxls", |r| Some(r.rxls)),
                ("idle", |r| Some(r.idle)),
                ("sleep", |r| Some(r.sleep)),
            ],
        )?,
        write_figure(
            dir,
            cur,
            long,
            long_key,
            &[("current_ma", |r| Some(r.current_ma)), ("current_se", |r| r.current_se)],
        )?,
        write_figure(dir, eff, long, long_key, &[("efficiency_mb_per_c", |r| Some(r.efficiency_mb_per_c))])?,
        write_figure(
            dir,
            th,
            long,
            long_key,
            &[("throughput_mbps", |r| Some(r.throughput_mbps)), ("throughput_se", |r| r.throughput_se)],
        )?,
        write_figure(
            dir,
            soj,
            short,
            short_key,
            &[("sojourn_s", |r| Some(r.sojourn_s)), ("sojourn_se", |r| r.sojourn_se)],
        )?,
        write_figure(
            dir,
            fb,
            short,
            short_key,
            &[
                ("charge_per_file_c", |r| Some(r.charge_per_file_c)),
                ("budget_c", |r| Some(r.budget_c)),
                ("files_per_budget", |r| Some(r.files_per_budget)),
            ],
        )?,
        write_csv(dir, rec, &out.reconciliation, &RECONCILIATION_HEADER)?,
        write_csv(dir, long_all, long, &[])?,
        write_csv(dir, short_all, short, &[])?,
    ])
}
