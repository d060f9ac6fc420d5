//! Scenario parameters and the flat `key = value` config file format.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Placement of path angles relative to the DFT grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GridMode {
    /// Angles coincide with DFT columns, so the virtual channel is exactly sparse.
    OnGrid,
    /// Angles are continuous and leak into adjacent virtual bins.
    OffGrid,
}

impl FromStr for GridMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "ongrid" => Ok(GridMode::OnGrid),
            "offgrid" => Ok(GridMode::OffGrid),
            other => Err(Error::InvalidConfig(format!("unknown grid mode `{other}`"))),
        }
    }
}

impl fmt::Display for GridMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GridMode::OnGrid => "OnGrid",
            GridMode::OffGrid => "OffGrid",
        })
    }
}

/// All parameters of one simulated scenario.
///
/// `snr_db` is `10 log10(rho / noise_var)`; the default keeps `noise_var = 1`
/// and moves the received power `rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub l_tx: usize,
    pub l_rx: usize,
    pub n_streams: usize,
    pub n_paths: usize,
    pub n_frames: usize,
    pub snr_db: f64,
    pub noise_var: f64,
    pub gamp_iters: usize,
    pub rng_seed: u64,
    pub grid_mode: GridMode,
    pub path_gain_var: f64,
    /// Damping on the GAMP mean/variance updates, 1.0 disables it. The
    /// default of 0.8 keeps the lifted one-bit problem stable at high SNR.
    pub damping: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            n_tx: 64,
            n_rx: 16,
            l_tx: 4,
            l_rx: 4,
            n_streams: 2,
            n_paths: 2,
            n_frames: 64,
            snr_db: 0.0,
            noise_var: 1.0,
            gamp_iters: 50,
            rng_seed: 0,
            grid_mode: GridMode::OffGrid,
            path_gain_var: 1.0,
            damping: 0.8,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_tx", self.n_tx),
            ("n_rx", self.n_rx),
            ("l_tx", self.l_tx),
            ("l_rx", self.l_rx),
            ("n_streams", self.n_streams),
            ("n_paths", self.n_paths),
            ("n_frames", self.n_frames),
            ("gamp_iters", self.gamp_iters),
        ];
        for (name, value) in counts {
            if value == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be at least 1")));
            }
        }
        if self.l_tx > self.n_tx {
            return Err(Error::InvalidConfig(format!(
                "l_tx = {} exceeds n_tx = {}",
                self.l_tx, self.n_tx
            )));
        }
        if self.l_rx > self.n_rx {
            return Err(Error::InvalidConfig(format!(
                "l_rx = {} exceeds n_rx = {}",
                self.l_rx, self.n_rx
            )));
        }
        if self.n_streams > self.l_tx.min(self.l_rx) {
            return Err(Error::InvalidConfig(format!(
                "n_streams = {} exceeds min(l_tx, l_rx) = {}",
                self.n_streams,
                self.l_tx.min(self.l_rx)
            )));
        }
        if self.grid_mode == GridMode::OnGrid && self.n_paths > self.n_tx.min(self.n_rx) {
            return Err(Error::InvalidConfig(format!(
                "on-grid placement needs n_paths <= min(n_tx, n_rx), got {}",
                self.n_paths
            )));
        }
        if !(self.noise_var > 0.0 && self.noise_var.is_finite()) {
            return Err(Error::InvalidConfig("noise_var must be positive".into()));
        }
        if !(self.path_gain_var > 0.0 && self.path_gain_var.is_finite()) {
            return Err(Error::InvalidConfig("path_gain_var must be positive".into()));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::InvalidConfig("snr_db must be finite".into()));
        }
        if !(0.1..=1.0).contains(&self.damping) {
            return Err(Error::InvalidConfig(format!(
                "damping must lie in [0.1, 1], got {}",
                self.damping
            )));
        }
        Ok(())
    }

    /// Received power `rho = noise_var * 10^(snr_db / 10)`.
    pub fn rho(&self) -> f64 {
        self.noise_var * 10f64.powf(self.snr_db / 10.0)
    }

    /// Number of complex virtual-channel coefficients, `n_tx * n_rx`.
    pub fn n_coeffs(&self) -> usize {
        self.n_tx * self.n_rx
    }

    /// Number of complex observations, `n_frames * l_rx`.
    pub fn n_obs(&self) -> usize {
        self.n_frames * self.l_rx
    }

    /// Parses the flat `key = value` format. Blank lines and `#` comments are
    /// ignored; keys not listed are left at their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = SystemConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .or_else(|| content.split_once(':'))
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("expected `key = value`, got `{content}`"),
                })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|message| Error::Parse { line, message })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Serializes to the same format accepted by [`SystemConfig::parse`].
    pub fn to_kv_string(&self) -> String {
        format!(
            "n_tx = {}\nn_rx = {}\nl_tx = {}\nl_rx = {}\nn_streams = {}\nn_paths = {}\n\
             n_frames = {}\nsnr_db = {}\nnoise_var = {}\ngamp_iters = {}\nrng_seed = {}\n\
             grid_mode = {}\npath_gain_var = {}\ndamping = {}\n",
            self.n_tx,
            self.n_rx,
            self.l_tx,
            self.l_rx,
            self.n_streams,
            self.n_paths,
            self.n_frames,
            self.snr_db,
            self.noise_var,
            self.gamp_iters,
            self.rng_seed,
            self.grid_mode,
            self.path_gain_var,
            self.damping,
        )
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
            value.parse().map_err(|_| format!("cannot parse `{value}` for `{key}`"))
        }
        match key {
            "n_tx" => self.n_tx = num(key, value)?,
            "n_rx" => self.n_rx = num(key, value)?,
            "l_tx" => self.l_tx = num(key, value)?,
            "l_rx" => self.l_rx = num(key, value)?,
            "n_streams" => self.n_streams = num(key, value)?,
            "n_paths" => self.n_paths = num(key, value)?,
            "n_frames" => self.n_frames = num(key, value)?,
            "snr_db" => self.snr_db = num(key, value)?,
            "noise_var" => self.noise_var = num(key, value)?,
            "gamp_iters" => self.gamp_iters = num(key, value)?,
            "rng_seed" => self.rng_seed = num(key, value)?,
            "grid_mode" => self.grid_mode = value.parse().map_err(|e: Error| e.to_string())?,
            "path_gain_var" => self.path_gain_var = num(key, value)?,
            "damping" => self.damping = num(key, value)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }
}
