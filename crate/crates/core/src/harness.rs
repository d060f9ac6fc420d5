//! Seeded Monte Carlo driver for NMSE sweeps.
//!
//! Every trial derives three independent ChaCha streams from its seed (channel,
//! training hardware, receiver noise), so all algorithms inside a trial see the
//! same data and the same seed list is reused at every sweep point.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{draw_channel, from_virtual, ChannelRealization};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::measurement::{
    assemble_ensemble, generate_all_frames, h_virtual_real, solver_noise_var, unlift_vector, unvec_col_major,
    MeasurementEnsemble,
};
use crate::metrics::{nmse, nmse_scaled};
use crate::solvers::{awgn_gamp, ls_estimate, one_bit_gamp, GampOptions, IterationRecord, SparsePrior};

const CHANNEL_STREAM: u64 = 0;
const HARDWARE_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;

/// Fraction of aborted trials above which a report row is marked failed.
pub const MAX_ABORT_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    OneBitGamp,
    AwgnGamp,
    LsUnquantized,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::OneBitGamp, Algorithm::AwgnGamp, Algorithm::LsUnquantized];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::OneBitGamp => "one_bit_gamp",
            Algorithm::AwgnGamp => "awgn_gamp",
            Algorithm::LsUnquantized => "ls_unquantized",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "one_bit_gamp" | "onebit" | "one_bit" | "onebitgamp" => Ok(Algorithm::OneBitGamp),
            "awgn_gamp" | "gamp" | "awgn" => Ok(Algorithm::AwgnGamp),
            "ls_unquantized" | "ls" => Ok(Algorithm::LsUnquantized),
            other => Err(Error::InvalidConfig(format!("unknown algorithm `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    SnrDb,
    Frames,
    RfChains,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::SnrDb => "snr",
            SweepAxis::Frames => "frames",
            SweepAxis::RfChains => "rfchains",
        }
    }

    /// Copy of `base` with the swept field set to `value`. RF chains are
    /// swept in transmit/receive pairs and the stream count is capped to fit.
    pub fn apply(self, base: &SystemConfig, value: f64) -> Result<SystemConfig> {
        let mut cfg = base.clone();
        let as_count = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::InvalidConfig(format!(
                    "{} value {v} is not a positive integer",
                    self.name()
                )))
            }
        };
        match self {
            SweepAxis::SnrDb => cfg.snr_db = value,
            SweepAxis::Frames => cfg.n_frames = as_count(value)?,
            SweepAxis::RfChains => {
                let l = as_count(value)?;
                cfg.l_tx = l;
                cfg.l_rx = l;
                cfg.n_streams = cfg.n_streams.min(l);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "snr" | "snrdb" => Ok(SweepAxis::SnrDb),
            "frames" | "m" => Ok(SweepAxis::Frames),
            "rfchains" | "rf" | "l" => Ok(SweepAxis::RfChains),
            other => Err(Error::InvalidConfig(format!("unknown sweep axis `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: SystemConfig,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    pub trials: usize,
    pub seed_base: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidConfig("sweep needs at least one value".into()));
        }
        if self
            .values
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
        {
            return Err(Error::InvalidConfig("sweep values must be strictly increasing".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidConfig("no algorithms selected".into()));
        }
        self.base.validate()
    }

    pub fn seed(&self, trial: usize) -> u64 {
        self.seed_base.wrapping_add(trial as u64)
    }
}

/// Result of one algorithm on one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmOutcome {
    pub algorithm: Algorithm,
    pub nmse: f64,
    /// NMSE after the best complex rescaling of the estimate.
    pub nmse_scaled: f64,
    pub estimate: Array2<Complex64>,
    /// GAMP iteration diagnostics; empty for LS.
    pub trace: Vec<IterationRecord>,
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub seed: u64,
    pub channel: ChannelRealization,
    pub results: Vec<AlgorithmOutcome>,
}

impl TrialOutcome {
    pub fn nmse(&self, algorithm: Algorithm) -> Option<f64> {
        self.results.iter().find(|r| r.algorithm == algorithm).map(|r| r.nmse)
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Channel and measurement ensemble for one trial seed.
pub fn draw_trial_data(cfg: &SystemConfig, trial_seed: u64) -> Result<(ChannelRealization, MeasurementEnsemble)> {
    cfg.validate()?;
    let channel = draw_channel(cfg, &mut stream(trial_seed, CHANNEL_STREAM))?;
    let frames = generate_all_frames(cfg, &mut stream(trial_seed, HARDWARE_STREAM))?;
    let ensemble = assemble_ensemble(cfg, frames, &channel, &mut stream(trial_seed, NOISE_STREAM))?;
    Ok((channel, ensemble))
}

fn antenna_domain(cfg: &SystemConfig, h_virtual_vec: ndarray::ArrayView1<Complex64>) -> Result<Array2<Complex64>> {
    let hv = unvec_col_major(h_virtual_vec, cfg.n_rx, cfg.n_tx)?;
    Ok(from_virtual(&hv))
}

/// One Monte Carlo realization: all `algorithms` run on identical data and
/// are scored in the antenna domain.
pub fn run_trial(cfg: &SystemConfig, algorithms: &[Algorithm], trial_seed: u64) -> Result<TrialOutcome> {
    run_trial_inner(cfg, algorithms, trial_seed).map_err(|e| Error::Trial {
        seed: trial_seed,
        source: Box::new(e),
    })
}

fn run_trial_inner(cfg: &SystemConfig, algorithms: &[Algorithm], trial_seed: u64) -> Result<TrialOutcome> {
    let (channel, ens) = draw_trial_data(cfg, trial_seed)?;
    let prior = SparsePrior::for_channel(cfg);
    let opts = GampOptions::from_config(cfg);
    let noise_var = solver_noise_var(cfg);
    let truth = h_virtual_real(&channel);

    let mut results = Vec::with_capacity(algorithms.len());
    for &algorithm in algorithms {
        let (estimate, trace) = match algorithm {
            Algorithm::OneBitGamp => {
                let res = one_bit_gamp(
                    ens.w_real.view(),
                    ens.y_sign.view(),
                    &prior,
                    noise_var,
                    &opts,
                    Some(truth.view()),
                )?;
                (
                    antenna_domain(cfg, unlift_vector(res.estimate().view()).view())?,
                    res.trace,
                )
            }
            Algorithm::AwgnGamp => {
                let res = awgn_gamp(
                    ens.w_real.view(),
                    ens.y_sign.view(),
                    &prior,
                    noise_var,
                    &opts,
                    Some(truth.view()),
                )?;
                (
                    antenna_domain(cfg, unlift_vector(res.estimate().view()).view())?,
                    res.trace,
                )
            }
            Algorithm::LsUnquantized => {
                let est = ls_estimate(&ens.w_complex, &ens.r_noisy_complex())?;
                (antenna_domain(cfg, est.view())?, Vec::new())
            }
        };
        results.push(AlgorithmOutcome {
            algorithm,
            nmse: nmse(&channel.h, &estimate)?,
            nmse_scaled: nmse_scaled(&channel.h, &estimate)?,
            estimate,
            trace,
        });
    }
    Ok(TrialOutcome {
        seed: trial_seed,
        channel,
        results,
    })
}

/// Aggregated statistics for one (axis value, algorithm) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct NmseRow {
    pub axis: SweepAxis,
    pub value: f64,
    pub algorithm: Algorithm,
    pub mean: f64,
    pub median: f64,
    pub stderr: f64,
    pub trials: usize,
    pub aborted: usize,
    pub failed: bool,
    pub seed_lo: u64,
    pub seed_hi: u64,
    /// Per-trial NMSE in seed order; `NaN` marks an aborted trial.
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NmseReport {
    pub rows: Vec<NmseRow>,
}

impl NmseReport {
    pub fn row(&self, value: f64, algorithm: Algorithm) -> Option<&NmseRow> {
        self.rows.iter().find(|r| r.value == value && r.algorithm == algorithm)
    }
}

/// Mean, median and standard error of the mean over the finite entries.
pub fn summarize(samples: &[f64]) -> (f64, f64, f64) {
    let mut ok: Vec<f64> = samples.iter().copied().filter(|x| x.is_finite()).collect();
    let n = ok.len();
    if n == 0 {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mean = ok.iter().sum::<f64>() / n as f64;
    ok.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        ok[n / 2]
    } else {
        0.5 * (ok[n / 2 - 1] + ok[n / 2])
    };
    let stderr = if n > 1 {
        let var = ok.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    (mean, median, stderr)
}

/// Runs every trial at every axis value. Trials may execute in parallel;
/// results are gathered in seed order so the report does not depend on
/// scheduling.
pub fn run_sweep(spec: &SweepSpec) -> Result<NmseReport> {
    spec.validate()?;
    let mut algorithms = spec.algorithms.clone();
    algorithms.sort_by_key(|a| a.name());
    algorithms.dedup();

    let mut rows = Vec::with_capacity(spec.values.len() * algorithms.len());
    for &value in &spec.values {
        let cfg = spec.axis.apply(&spec.base, value)?;
        let outcomes: Vec<Result<Vec<f64>>> = (0..spec.trials)
            .into_par_iter()
            .map(|t| {
                run_trial(&cfg, &algorithms, spec.seed(t))
                    .map(|o| algorithms.iter().map(|&a| o.nmse(a).expect("requested")).collect())
            })
            .collect();

        let aborted = outcomes.iter().filter(|o| o.is_err()).count();
        let failed = aborted as f64 > MAX_ABORT_FRACTION * spec.trials as f64;
        for (k, &algorithm) in algorithms.iter().enumerate() {
            let samples: Vec<f64> = outcomes
                .iter()
                .map(|o| o.as_ref().map(|v| v[k]).unwrap_or(f64::NAN))
                .collect();
            let (mean, median, stderr) = summarize(&samples);
            rows.push(NmseRow {
                axis: spec.axis,
                value,
                algorithm,
                mean,
                median,
                stderr,
                trials: spec.trials,
                aborted,
                failed,
                seed_lo: spec.seed(0),
                seed_hi: spec.seed(spec.trials - 1),
                samples,
            });
        }
    }
    Ok(NmseReport { rows })
}

pub const REPORT_HEADER: &str = "axis,value,algorithm,mean_nmse,median_nmse,stderr,trials,seed_lo,seed_hi";

/// Writes the report as CSV, rows ordered by axis value then algorithm name.
/// Failed rows carry `NaN` statistics.
pub fn write_report<W: Write>(report: &NmseReport, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{REPORT_HEADER}")?;
    let mut rows: Vec<&NmseRow> = report.rows.iter().collect();
    rows.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then(a.algorithm.name().cmp(b.algorithm.name()))
    });
    for r in rows {
        let stat = |x: f64| {
            if r.failed {
                "NaN".to_string()
            } else {
                format!("{x:.12e}")
            }
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.axis,
            r.value,
            r.algorithm,
            stat(r.mean),
            stat(r.median),
            stat(r.stderr),
            r.trials,
            r.seed_lo,
            r.seed_hi
        )?;
    }
    Ok(())
}

pub fn emit_report(report: &NmseReport, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_report(report, &mut buf).map_err(|e| Error::io(path, e))?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}
