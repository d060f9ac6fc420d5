//! Scalar posterior-moment computations used by the GAMP output and input
//! steps.

use std::f64::consts::{FRAC_2_SQRT_PI, PI, SQRT_2};

use crate::config::SystemConfig;
use crate::error::{Error, Result};

/// Bernoulli-Gaussian (spike-and-slab) prior on each real coefficient:
/// zero with probability `1 - sparsity`, otherwise `N(mean, active_var)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsePrior {
    pub sparsity: f64,
    pub active_var: f64,
    pub mean: f64,
}

impl SparsePrior {
    pub fn new(sparsity: f64, active_var: f64) -> Result<Self> {
        if !(sparsity > 0.0 && sparsity <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "sparsity must lie in (0, 1], got {sparsity}"
            )));
        }
        if !(active_var > 0.0 && active_var.is_finite()) {
            return Err(Error::NonPositiveVariance(active_var));
        }
        Ok(SparsePrior {
            sparsity,
            active_var,
            mean: 0.0,
        })
    }

    /// Prior matched to the channel statistics of `cfg`: activation
    /// probability `n_paths / (n_tx n_rx)` and active variance
    /// `n_tx n_rx / (2 n_paths)`, so that the expected energy of the lifted
    /// virtual channel is `n_tx n_rx`.
    pub fn for_channel(cfg: &SystemConfig) -> Self {
        let n = cfg.n_coeffs() as f64;
        let np = cfg.n_paths as f64;
        SparsePrior {
            sparsity: (np / n).min(1.0),
            active_var: n / (2.0 * np),
            mean: 0.0,
        }
    }

    pub fn expected_value(&self) -> f64 {
        self.sparsity * self.mean
    }

    pub fn variance(&self) -> f64 {
        let e = self.sparsity;
        e * self.active_var + e * (1.0 - e) * self.mean * self.mean
    }
}

/// Scaled complementary error function `exp(x^2) erfc(x)`.
pub fn erfcx(x: f64) -> f64 {
    if x < -26.0 {
        f64::INFINITY
    } else if x < 6.0 {
        (x * x).exp() * libm::erfc(x)
    } else {
        let (k1, _) = erfcx_cf_tails(x);
        1.0 / (PI.sqrt() * (x + k1))
    }
}

const CF_TERMS: usize = 120;

/// Tails `K_1`, `K_2` of the continued fraction
/// `sqrt(pi) erfcx(x) = 1 / (x + K_1)`, `K_n = (n/2) / (x + K_{n+1})`.
/// Accurate for `x >= 6`.
fn erfcx_cf_tails(x: f64) -> (f64, f64) {
    let mut k = 0.0;
    let mut k2 = 0.0;
    for n in (1..CF_TERMS).rev() {
        if n == 1 {
            k2 = k;
        }
        k = (n as f64 / 2.0) / (x + k);
    }
    (k, k2)
}

/// Mean and variance of `N(mean, var)` truncated to `r > 0` (`sign >= 0`) or
/// `r < 0` (`sign < 0`).
pub fn truncated_gaussian_moments(sign: f64, mean: f64, var: f64) -> Result<(f64, f64)> {
    if var.is_nan() || var <= 0.0 {
        return Err(Error::NonPositiveVariance(var));
    }
    Ok(truncated_moments_unchecked(sign, mean, var))
}

#[inline]
pub(crate) fn truncated_moments_unchecked(sign: f64, mean: f64, var: f64) -> (f64, f64) {
    if sign >= 0.0 {
        positive_half_moments(mean, var)
    } else {
        let (m, v) = positive_half_moments(-mean, var);
        (-m, v)
    }
}

/// Moments of `N(mu, var)` restricted to the positive half-line.
///
/// With `z = mu / sd` and `x = -z / sqrt(2)`, the inverse Mills ratio is
/// `lambda = sqrt(2/pi) / erfcx(x)`. For `x >= 6` the continued-fraction
/// tails give `z + lambda` and `1 - lambda (lambda + z)` without cancellation.
fn positive_half_moments(mu: f64, var: f64) -> (f64, f64) {
    let sd = var.sqrt();
    let z = mu / sd;
    let x = -z / SQRT_2;
    if x >= 6.0 {
        let (k1, k2) = erfcx_cf_tails(x);
        let shift = SQRT_2 * k1;
        let ratio = (k2 - k1) / (x + k2);
        (sd * shift, var * ratio)
    } else {
        // sqrt(2/pi) = FRAC_2_SQRT_PI / sqrt(2)
        let lambda = FRAC_2_SQRT_PI / SQRT_2 / erfcx(x);
        let shift = z + lambda;
        let ratio = 1.0 - lambda * shift;
        (sd * shift, var * ratio.max(0.0))
    }
}

/// Posterior mean and variance of `h ~ SparsePrior` observed as
/// `r_hat = h + N(0, v_r)`.
pub fn prior_denoiser(r_hat: f64, v_r: f64, prior: &SparsePrior) -> (f64, f64) {
    let SparsePrior {
        sparsity: eps,
        active_var: sx,
        mean: mu,
    } = *prior;
    let total = sx + v_r;
    let gamma = (sx * r_hat + v_r * mu) / total;
    let nu = sx * v_r / total;

    let active = if eps >= 1.0 {
        1.0
    } else if eps <= 0.0 {
        0.0
    } else {
        let log_odds = eps.ln() - (-eps).ln_1p() + log_normal(r_hat, mu, total) - log_normal(r_hat, 0.0, v_r);
        sigmoid(log_odds)
    };
    let mean = active * gamma;
    let var = active * nu + active * (1.0 - active) * gamma * gamma;
    (mean, var)
}

#[inline]
fn log_normal(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * ((2.0 * PI).ln() + var.ln()) - d * d / (2.0 * var)
}

#[inline]
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}
