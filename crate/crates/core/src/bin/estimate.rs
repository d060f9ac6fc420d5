use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use onebit_chest::harness::{draw_trial_data, emit_report, run_sweep, run_trial, Algorithm, SweepAxis, SweepSpec};
use onebit_chest::measurement::{h_virtual_real, write_dump};
use onebit_chest::solvers::write_trace_csv;
use onebit_chest::{Error, Result, SystemConfig};

/// Channel estimation for one-bit hybrid mmWave receivers.
#[derive(Parser)]
#[command(name = "estimate", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep one system parameter and write an NMSE report as CSV.
    Sweep {
        /// Flat `key = value` config; defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated axis values, strictly increasing.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        values: Vec<f64>,
        /// Comma-separated algorithm names.
        #[arg(long, value_delimiter = ',', default_value = "one_bit_gamp,awgn_gamp,ls_unquantized")]
        algorithms: Vec<Algorithm>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// First trial seed; defaults to the config's `rng_seed`.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every algorithm on one realization and print the NMSE.
    Trial {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the one-bit GAMP iteration trace here.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Write the real-lifted sensing matrix, signs and true channel of one
    /// realization as little-endian binary.
    Dump {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(config: Option<&Path>) -> Result<SystemConfig> {
    let cfg = match config {
        Some(path) => SystemConfig::from_file(path)?,
        None => SystemConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sweep {
            config,
            axis,
            values,
            algorithms,
            trials,
            seed,
            out,
        } => {
            let base = load(config.as_deref())?;
            let spec = SweepSpec {
                seed_base: seed.unwrap_or(base.rng_seed),
                base,
                axis,
                values,
                algorithms,
                trials,
            };
            let report = run_sweep(&spec)?;
            emit_report(&report, &out)?;
            for row in report.rows.iter().filter(|r| r.aborted > 0) {
                eprintln!(
                    "warning: {}={} {}: {} of {} trials aborted{}",
                    row.axis,
                    row.value,
                    row.algorithm,
                    row.aborted,
                    row.trials,
                    if row.failed { ", row marked failed" } else { "" }
                );
            }
            Ok(())
        }
        Command::Trial {
            config,
            seed,
            trace_out,
        } => {
            let cfg = load(config.as_deref())?;
            let seed = seed.unwrap_or(cfg.rng_seed);
            let outcome = run_trial(&cfg, &Algorithm::ALL, seed)?;
            println!("seed {seed}");
            println!("{:<16}{:>14}{:>14}{:>8}", "algorithm", "nmse", "nmse_scaled", "iters");
            for r in &outcome.results {
                println!(
                    "{:<16}{:>14.6e}{:>14.6e}{:>8}",
                    r.algorithm.name(),
                    r.nmse,
                    r.nmse_scaled,
                    r.trace.len()
                );
            }
            if let Some(path) = trace_out {
                let trace = outcome
                    .results
                    .iter()
                    .find(|r| r.algorithm == Algorithm::OneBitGamp)
                    .map(|r| r.trace.as_slice())
                    .unwrap_or_default();
                let mut buf = Vec::new();
                write_trace_csv(trace, &mut buf).map_err(|e| Error::io(&path, e))?;
                std::fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
            }
            Ok(())
        }
        Command::Dump { config, seed, out } => {
            let cfg = load(config.as_deref())?;
            let (channel, ens) = draw_trial_data(&cfg, seed.unwrap_or(cfg.rng_seed))?;
            write_dump(&out, &ens.w_real, &ens.y_sign, &h_virtual_real(&channel))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
