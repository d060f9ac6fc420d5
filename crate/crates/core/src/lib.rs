//! Narrowband mmWave channel estimation with hybrid beamforming and one-bit
//! ADCs.
//!
//! The crate covers the whole simulation chain:
//!
//! - [`channel`]: geometric ULA channels and their DFT-domain virtual image,
//!   with on-grid (exactly sparse) or off-grid (leaky) angles.
//! - [`measurement`]: per-frame phase-shifter precoders/combiners, Hadamard
//!   training symbols, the stacked Kronecker sensing model and its real lift,
//!   and sign quantization.
//! - [`solvers`]: one-bit GAMP with a noise-aware output step, an AWGN-output
//!   GAMP baseline and a minimum-norm least-squares baseline.
//! - [`harness`]: seeded Monte Carlo trials and NMSE sweeps over SNR, frames
//!   or RF chains, with CSV output.

pub mod channel;
pub mod config;
pub mod error;
pub mod harness;
pub mod measurement;
pub mod metrics;
pub mod solvers;

pub use config::{GridMode, SystemConfig};
pub use error::{Error, Result};
