//! Run configuration files.
//!
//! A run file is TOML (or JSON when the path ends in `.json`). Every key is
//! optional; missing keys take the simulation defaults for the chosen scheme.
//! SNRs are written in dB and converted to linear once, here.
//!
//! ```toml
//! scheme = "NOMA_WR"
//! slots = 20000
//!
//! [battery]
//! e_max = 10.0
//!
//! [channel]
//! distribution = "uniform"
//!
//! [arrival]
//! lambda = 2.0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{db_to_linear, Access, Scheme, SystemConfig};
use crate::stochastic::FadingDistribution;

pub const DEFAULT_SLOTS: u64 = 20_000;
pub const DEFAULT_RUNS: u64 = 20;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub scheme: Option<Scheme>,
    /// Multiple access used by the RPA/OPA baselines.
    pub access: Option<Access>,
    pub users: Option<usize>,
    pub delta_t: Option<f64>,
    pub slots: Option<u64>,
    /// Number of independent runs (run ids `0..runs`).
    pub runs: Option<u64>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub battery: BatterySection,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub arrival: ArrivalSection,
    #[serde(default)]
    pub lyapunov: LyapunovSection,
    #[serde(default)]
    pub rates: RatesSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatterySection {
    pub e_min: Option<f64>,
    pub e_max: Option<f64>,
    pub e_c_max: Option<f64>,
    pub p_max: Option<f64>,
    pub e_b0: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub distribution: Option<FadingDistribution>,
    pub uniform_width: Option<f64>,
    pub gamma_min_db: Option<f64>,
    pub gamma_max_db: Option<f64>,
    /// Linear SNR per unit fade; defaults to `γ_max`.
    pub snr_scale: Option<f64>,
    /// Lower end of the sampling window in dB; defaults to `γ_min` for
    /// rate-constrained schemes and to no lower bound otherwise.
    pub window_min_db: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrivalSection {
    pub lambda: Option<f64>,
    pub alpha_mark: Option<f64>,
    /// Deterministic energy added to every arrival; defaults to the
    /// worst-case slot energy for rate-constrained schemes and 0 otherwise.
    pub floor: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovSection {
    pub v: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RateFloors {
    Uniform(f64),
    PerUser(Vec<f64>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSection {
    pub r_min: Option<RateFloors>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

/// A fully resolved run request.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub system: SystemConfig,
    pub slots: u64,
    pub runs: u64,
    pub seed: u64,
    pub output: OutputSection,
}

impl RunConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let is_json = path
            .extension()
            .map_or(false, |e| e.eq_ignore_ascii_case("json"));
        if is_json {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        }
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Fills defaults and converts units. Does not run the feasibility checks.
    pub fn resolve(&self) -> Result<RunSpec> {
        let scheme = self.scheme.unwrap_or(Scheme::NomaWor);
        let mut cfg = SystemConfig::default_for(scheme);
        let floors = scheme.has_rate_floors();
        if let Some(a) = self.access {
            cfg.access = a;
        }
        if let Some(k) = self.users {
            cfg.users = k;
        }
        if let Some(dt) = self.delta_t {
            cfg.delta_t = dt;
        }
        let b = &self.battery;
        cfg.e_min = b.e_min.unwrap_or(cfg.e_min);
        cfg.e_max = b.e_max.unwrap_or(cfg.e_max);
        cfg.e_c_max = b.e_c_max.unwrap_or(cfg.e_c_max);
        cfg.p_max = b.p_max.unwrap_or(cfg.p_max);
        cfg.e_b0 = b.e_b0.unwrap_or(if floors { (cfg.e_min + cfg.e_max) / 2.0 } else { cfg.e_min });

        let c = &self.channel;
        if let Some(db) = c.gamma_min_db {
            cfg.gamma_min = db_to_linear(db);
        }
        if let Some(db) = c.gamma_max_db {
            cfg.gamma_max = db_to_linear(db);
        }
        cfg.channel.dist = c.distribution.unwrap_or(cfg.channel.dist);
        cfg.channel.uniform_width = c.uniform_width.unwrap_or(1.0);
        cfg.channel.gamma_hi = cfg.gamma_max;
        cfg.channel.snr_scale = c.snr_scale.unwrap_or(cfg.gamma_max);
        cfg.channel.gamma_lo = match c.window_min_db {
            Some(db) => db_to_linear(db),
            None if floors => cfg.gamma_min,
            None => 0.0,
        };

        cfg.r_min = match &self.rates.r_min {
            None => vec![if floors { 1.0 } else { 0.0 }; cfg.users],
            Some(RateFloors::Uniform(r)) => vec![*r; cfg.users],
            Some(RateFloors::PerUser(v)) => v.clone(),
        };

        let a = &self.arrival;
        cfg.arrival.lambda = a.lambda.unwrap_or(cfg.arrival.lambda);
        cfg.arrival.alpha_mark = a.alpha_mark.unwrap_or(cfg.arrival.alpha_mark);
        cfg.arrival.floor = match a.floor {
            Some(f) => f,
            None if floors && cfg.r_min.len() == cfg.users => cfg.worst_case_energy_floor(),
            None => 0.0,
        };
        cfg.v_param = self.lyapunov.v;

        Ok(RunSpec {
            system: cfg,
            slots: self.slots.unwrap_or(DEFAULT_SLOTS),
            runs: self.runs.unwrap_or(DEFAULT_RUNS),
            seed: self.seed.unwrap_or(1),
            output: self.output.clone(),
        })
    }
}
