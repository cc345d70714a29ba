use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::anm::AnmConfig;
use crate::channel::{ChannelParams, PulseShape};
use crate::error::{Error, Result};
use crate::ram::RamConfig;
use crate::sounding::SoundingDims;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Anm,
    Ram,
    Omp,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Anm, Estimator::Ram, Estimator::Omp];

    pub fn tag(self) -> &'static str {
        match self {
            Estimator::Anm => "anm",
            Estimator::Ram => "ram",
            Estimator::Omp => "omp",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "anm" => Ok(Estimator::Anm),
            "ram" => Ok(Estimator::Ram),
            "omp" => Ok(Estimator::Omp),
            other => Err(Error::InvalidConfig(format!("unknown estimator '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Desk,
    Paper,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "desk" => Ok(Preset::Desk),
            "paper" => Ok(Preset::Paper),
            other => Err(Error::InvalidConfig(format!("unknown preset '{other}'"))),
        }
    }
}

/// Everything one sweep needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_rf: usize,
    pub n_subcarriers: usize,
    pub n_taps: usize,
    pub n_paths: usize,
    /// Seconds.
    pub symbol_period: f64,
    pub rolloff: f64,
    pub codebook_bits: u32,
    pub frames: usize,
    /// Frame counts visited by the frames sweep.
    pub frames_list: Vec<usize>,
    pub power: f64,
    /// SNR points (dB) of the SNR sweep; `inf` means noiseless.
    pub snr_list: Vec<f64>,
    /// Fixed SNR (dB) of the frames sweep.
    pub frames_snr_db: f64,
    pub estimators: Vec<Estimator>,
    pub trials: usize,
    pub base_seed: u64,
    pub grid: usize,
    /// OMP selection budget; `2·L` when absent.
    pub omp_max_atoms: Option<usize>,
    pub omp_residual_tol: f64,
    pub ram_iterations: usize,
    pub epsilon_scale: f64,
    pub zeta_scale: f64,
    pub zeta_override: Option<f64>,
    pub max_iters: usize,
    pub penalty: f64,
    pub tol_primal: f64,
    pub tol_dual: f64,
    pub adaptive_penalty: bool,
    /// Write measured wall time; when false `runtime_ms` is emitted as 0 so
    /// output files are byte-reproducible.
    pub record_runtime: bool,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::preset(Preset::Desk)
    }
}

impl ExperimentConfig {
    pub fn preset(preset: Preset) -> Self {
        let solver = AnmConfig::default();
        let desk = Self {
            n_tx: 8,
            n_rx: 8,
            n_rf: 2,
            n_subcarriers: 8,
            n_taps: 4,
            n_paths: 2,
            symbol_period: 1.0 / 1760e6,
            rolloff: 0.8,
            codebook_bits: 7,
            frames: 32,
            frames_list: vec![16, 32, 48, 64],
            power: 1.0,
            snr_list: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            frames_snr_db: 10.0,
            estimators: Estimator::ALL.to_vec(),
            trials: 20,
            base_seed: 1,
            grid: 32,
            omp_max_atoms: None,
            omp_residual_tol: 1e-3,
            ram_iterations: 5,
            epsilon_scale: 1.0,
            zeta_scale: solver.zeta_scale,
            zeta_override: solver.zeta_override,
            max_iters: solver.max_iters,
            penalty: solver.penalty,
            tol_primal: solver.tol_primal,
            tol_dual: solver.tol_dual,
            adaptive_penalty: solver.adaptive_penalty,
            record_runtime: true,
            output: PathBuf::from("results/sweep.csv"),
        };
        match preset {
            Preset::Desk => desk,
            Preset::Paper => Self {
                n_tx: 16,
                n_rx: 16,
                n_subcarriers: 32,
                n_paths: 3,
                frames: 60,
                frames_list: vec![20, 40, 60, 80, 100],
                grid: 64,
                ..desk
            },
        }
    }

    /// Reads `key = value` lines (TOML syntax) over `self`.
    pub fn merge_file(&self, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.merge_str(&text)
    }

    pub fn merge_str(&self, text: &str) -> Result<Self> {
        let overrides: toml::Table = text
            .parse()
            .map_err(|e| Error::InvalidConfig(format!("config file: {e}")))?;
        let mut base = toml::Table::try_from(self)
            .map_err(|e| Error::InvalidConfig(format!("config snapshot: {e}")))?;
        for (k, v) in overrides {
            base.insert(k, v);
        }
        base.try_into()
            .map_err(|e: toml::de::Error| Error::InvalidConfig(format!("config file: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: usize| {
            if v == 0 {
                Err(Error::InvalidConfig(format!("{name} must be at least 1")))
            } else {
                Ok(())
            }
        };
        positive("n_tx", self.n_tx)?;
        positive("n_rx", self.n_rx)?;
        positive("n_rf", self.n_rf)?;
        positive("n_subcarriers", self.n_subcarriers)?;
        positive("n_taps", self.n_taps)?;
        positive("frames", self.frames)?;
        positive("trials", self.trials)?;
        positive("grid", self.grid)?;
        if self.n_rf > self.n_tx.min(self.n_rx) {
            return Err(Error::InvalidConfig(format!(
                "n_rf = {} exceeds the smaller array ({})",
                self.n_rf,
                self.n_tx.min(self.n_rx)
            )));
        }
        if self.n_tx * self.n_rx < 2 {
            return Err(Error::InvalidConfig("need at least two antenna pairs".into()));
        }
        if self.snr_list.is_empty() {
            return Err(Error::InvalidConfig("snr_list is empty".into()));
        }
        if self.snr_list.iter().chain([&self.frames_snr_db]).any(|s| s.is_nan()) {
            return Err(Error::InvalidConfig("SNR values must not be NaN".into()));
        }
        if self.frames_list.iter().any(|&m| m == 0) {
            return Err(Error::InvalidConfig("frames_list entries must be at least 1".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidConfig("no estimators selected".into()));
        }
        if !(self.power > 0.0 && self.power.is_finite()) {
            return Err(Error::InvalidConfig(format!("power must be positive, got {}", self.power)));
        }
        if self.omp_max_atoms.unwrap_or(1) > self.grid * self.grid {
            return Err(Error::InvalidConfig("omp_max_atoms exceeds the dictionary size".into()));
        }
        self.pulse()?;
        self.ram_config().validate()?;
        Ok(())
    }

    pub fn pulse(&self) -> Result<PulseShape> {
        PulseShape::new(self.symbol_period, self.rolloff)
    }

    pub fn channel_params(&self) -> Result<ChannelParams> {
        Ok(ChannelParams {
            n_paths: self.n_paths,
            n_tx: self.n_tx,
            n_rx: self.n_rx,
            n_taps: self.n_taps,
            n_subcarriers: self.n_subcarriers,
            pulse: self.pulse()?,
        })
    }

    pub fn sounding_dims(&self) -> SoundingDims {
        SoundingDims {
            n_tx: self.n_tx,
            n_rx: self.n_rx,
            n_rf: self.n_rf,
            n_subcarriers: self.n_subcarriers,
        }
    }

    pub fn anm_config(&self) -> AnmConfig {
        AnmConfig {
            zeta_override: self.zeta_override,
            zeta_scale: self.zeta_scale,
            max_iters: self.max_iters,
            penalty: self.penalty,
            tol_primal: self.tol_primal,
            tol_dual: self.tol_dual,
            adaptive_penalty: self.adaptive_penalty,
            weight: None,
        }
    }

    pub fn ram_config(&self) -> RamConfig {
        RamConfig {
            iterations: self.ram_iterations,
            epsilon: None,
            epsilon_scale: self.epsilon_scale,
            inner: self.anm_config(),
        }
    }

    pub fn omp_max_atoms(&self) -> usize {
        self.omp_max_atoms
            .unwrap_or(2 * self.n_paths)
            .clamp(1, self.grid * self.grid)
    }
}
