//! Channel estimators: the one-bit GAMP, an AWGN-output GAMP baseline and an
//! unquantized least-squares baseline.

pub mod denoise;
pub mod gamp;
pub mod ls;

pub use denoise::{erfcx, prior_denoiser, truncated_gaussian_moments, SparsePrior};
pub use gamp::{
    awgn_gamp, one_bit_gamp, run_gamp, write_trace_csv, AwgnChannel, GampOptions, GampResult, GampState,
    IterationRecord, OneBitChannel, OutputChannel, VAR_MAX, VAR_MIN,
};
pub use ls::ls_estimate;
