use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;
use wlan_energy::Mode;
use wlan_energy_cli::{run_sweep, write_outputs, SweepConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum ModeArg {
    Cam,
    Psm,
    Both,
}

/// Analytic and simulated throughput/energy sweeps for 802.11 TCP
/// downloads in CAM and PSM. Flags override the config file.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// TOML sweep configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Station counts, e.g. "1-8" or "1,2,4,8".
    #[arg(long)]
    n_range: Option<String>,
    /// Comma-separated data rates, Mb/s.
    #[arg(long, value_delimiter = ',')]
    rates: Option<Vec<f64>>,
    /// Skip the simulator.
    #[arg(long)]
    analytic_only: bool,
    /// Simulation replications per point.
    #[arg(long)]
    sim_reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Charge budget, C.
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn run(args: Args) -> Result<()> {
    let mut cfg = match &args.config {
        Some(p) => SweepConfig::load(p)?,
        None => SweepConfig::default(),
    };
    if let Some(m) = args.mode {
        cfg.modes = match m {
            ModeArg::Cam => vec![Mode::Cam],
            ModeArg::Psm => vec![Mode::Psm],
            ModeArg::Both => Mode::ALL.to_vec(),
        };
    }
    if let Some(n) = args.n_range {
        cfg.n_range = n;
    }
    if let Some(r) = args.rates {
        cfg.rates = r;
    }
    cfg.analytic_only |= args.analytic_only;
    if let Some(r) = args.sim_reps {
        cfg.sim_reps = r;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(b) = args.budget {
        cfg.budget = b;
    }
    if let Some(d) = args.out_dir {
        cfg.out_dir = d;
    }

    log::info!("sweeping {} modes, stations {}, rates {:?}", cfg.modes.len(), cfg.n_range, cfg.rates);
    let out = run_sweep(&cfg)?;
    for path in write_outputs(&out, &cfg.out_dir)? {
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
