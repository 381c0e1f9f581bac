use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use wlan_energy::{validate_params, CurrentProfile, Mode, PhyMacParams};

/// A sweep over mode x stations x data rate, read from TOML. Every key is
/// optional.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub modes: Vec<Mode>,
    /// Station counts, e.g. `"1-8"` or `"1,2,4,8"`.
    pub n_range: String,
    /// Data rates, Mb/s.
    pub rates: Vec<f64>,
    pub analytic_only: bool,
    /// Simulation replications per point.
    pub sim_reps: usize,
    pub seed: u64,
    /// Charge budget, C.
    pub budget: f64,
    /// Mean think time between short downloads, s.
    pub mean_think_time: f64,
    /// Mean short file size, KB (1024 bytes).
    pub file_kb: f64,
    /// Simulated seconds and warm-up for long downloads.
    pub long_duration: f64,
    pub long_warmup: f64,
    /// Simulated seconds and warm-up for short downloads.
    pub short_duration: f64,
    pub short_warmup: f64,
    pub out_dir: PathBuf,
    /// `data_rate` is replaced by each entry of `rates`.
    pub params: PhyMacParams,
    pub currents: CurrentProfile,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            modes: Mode::ALL.to_vec(),
            n_range: "1-8".to_string(),
            rates: vec![2.0, 5.5, 11.0],
            analytic_only: false,
            sim_reps: 1,
            seed: 1,
            budget: 100.0,
            mean_think_time: 5.0,
            file_kb: 400.0,
            long_duration: 60.0,
            long_warmup: 5.0,
            short_duration: 600.0,
            short_warmup: 20.0,
            out_dir: PathBuf::from("out"),
            params: PhyMacParams::default(),
            currents: CurrentProfile::default(),
        }
    }
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).context("parsing sweep config")?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn stations(&self) -> Result<Vec<usize>> {
        parse_n_range(&self.n_range)
    }

    pub fn params_at(&self, rate: f64) -> PhyMacParams {
        PhyMacParams {
            data_rate: rate,
            ..self.params.clone()
        }
    }

    pub fn file_bits(&self) -> f64 {
        self.file_kb * 1024.0 * 8.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() {
            bail!("no modes selected");
        }
        self.stations()?;
        if self.rates.is_empty() {
            bail!("no data rates selected");
        }
        for &r in &self.rates {
            if !(r > 0.0 && r.is_finite()) {
                bail!("data rate {r} must be positive");
            }
            if let Some(e) = validate_params(&self.params_at(r), &self.currents).into_iter().next() {
                bail!("invalid parameters at {r} Mb/s: {e}");
            }
        }
        if !(self.budget > 0.0) {
            bail!("budget must be positive");
        }
        if !(self.mean_think_time > 0.0) {
            bail!("mean think time must be positive");
        }
        if !(self.file_kb * 1024.0 >= f64::from(self.params.tcp_payload_bytes)) {
            bail!("mean file must hold at least one packet");
        }
        if !self.analytic_only {
            if self.sim_reps == 0 {
                bail!("sim_reps must be at least 1 unless analytic_only is set");
            }
            for (d, w, what) in [
                (self.long_duration, self.long_warmup, "long"),
                (self.short_duration, self.short_warmup, "short"),
            ] {
                if !(w >= 0.0 && d > w) {
                    bail!("{what} simulation duration must exceed its non-negative warm-up");
                }
            }
        }
        Ok(())
    }
}

/// Parses `"1-8"`, `"1,2,4,8"` or a mix such as `"1-4,8"`, sorted and
/// deduplicated.
pub fn parse_n_range(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim) {
        let parsed = match part.split_once('-') {
            Some((a, b)) => {
                let a: usize = a.trim().parse().with_context(|| format!("bad station count in {part:?}"))?;
                let b: usize = b.trim().parse().with_context(|| format!("bad station count in {part:?}"))?;
                if a > b {
                    bail!("empty station range {part:?}");
                }
                (a..=b).collect()
            }
            None => vec![part.parse().with_context(|| format!("bad station count {part:?}"))?],
        };
        out.extend(parsed);
    }
    out.sort_unstable();
    out.dedup();
    if out.first() == Some(&0) {
        bail!("station counts must be at least 1");
    }
    if out.is_empty() {
        bail!("no station counts given");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_n_range("1-4,8").unwrap(), vec![1, 2, 3, 4, 8]);
        assert_eq!(parse_n_range("8, 2,2").unwrap(), vec![2, 8]);
        assert!(parse_n_range("0-3").is_err());
        assert!(parse_n_range("4-2").is_err());
        assert!(parse_n_range("x").is_err());
    }

    #[test]
    fn partial_toml() {
        let c = SweepConfig::from_toml("rates = [11.0]\nmodes = [\"psm\"]\n[currents]\nidle = 150.0\n").unwrap();
        assert_eq!(c.rates, vec![11.0]);
        assert_eq!(c.modes, vec![Mode::Psm]);
        assert_eq!(c.currents.idle, 150.0);
        assert_eq!(c.currents.sleep, 10.0);
        c.validate().unwrap();
    }

    #[test]
    fn shipped_example_is_the_default() {
        let c = SweepConfig::from_toml(include_str!("../sweep.toml")).unwrap();
        assert_eq!(c, SweepConfig::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(SweepConfig::from_toml("ratez = [11.0]").is_err());
        assert!(SweepConfig::from_toml("[params]\nslot = 9.0").is_err());
    }
}
