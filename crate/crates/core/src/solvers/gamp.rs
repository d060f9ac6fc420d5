//! Generalized approximate message passing on the real-lifted model
//! `r = W h + n`, with a sign-quantized (one-bit) or AWGN output channel and
//! a separable Bernoulli-Gaussian input prior.

use std::io::Write;

use ndarray::{Array1, ArrayView1, ArrayView2};

use super::denoise::{prior_denoiser, truncated_moments_unchecked, SparsePrior};
use crate::config::SystemConfig;
use crate::error::{Error, Result};

/// Lower clamp on every stored variance.
pub const VAR_MIN: f64 = 1e-12;
/// Upper clamp on every stored variance.
pub const VAR_MAX: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GampOptions {
    pub max_iters: usize,
    /// Weight on the new `(s, v_s)` and `(h, v_h)` values; 1.0 is undamped.
    pub damping: f64,
    /// Early stop when `||h_new - h|| / max(||h||, 1e-12)` falls below this.
    pub tol: f64,
}

impl Default for GampOptions {
    fn default() -> Self {
        GampOptions {
            max_iters: 50,
            damping: 1.0,
            tol: 1e-6,
        }
    }
}

impl GampOptions {
    pub fn from_config(cfg: &SystemConfig) -> Self {
        GampOptions {
            max_iters: cfg.gamp_iters,
            damping: cfg.damping,
            ..GampOptions::default()
        }
    }
}

/// Per-iteration vectors of the recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct GampState {
    pub h_hat: Array1<f64>,
    pub v_h: Array1<f64>,
    pub s_hat: Array1<f64>,
    pub v_s: Array1<f64>,
    pub p_hat: Array1<f64>,
    pub v_p: Array1<f64>,
    pub r_hat: Array1<f64>,
    pub v_r: Array1<f64>,
    pub iter: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    /// Relative change of the estimate in this iteration.
    pub residual: f64,
    /// `||h_hat - h_true||^2 / ||h_true||^2` when a reference is supplied.
    pub nmse_proxy: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct GampResult {
    pub state: GampState,
    pub trace: Vec<IterationRecord>,
    pub converged: bool,
}

impl GampResult {
    pub fn estimate(&self) -> &Array1<f64> {
        &self.state.h_hat
    }
}

/// Output step: maps `(p_hat_i, v_p_i)` to `(s_hat_i, v_s_i)`.
pub trait OutputChannel {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn update(&self, i: usize, p_hat: f64, v_p: f64) -> (f64, f64);
}

/// Sign observations of `W h + N(0, noise_var)`. The posterior moments of the
/// unquantized sample come from a Gaussian of variance `v_p + noise_var`
/// truncated to the half-line selected by each sign.
#[derive(Debug, Clone, Copy)]
pub struct OneBitChannel<'a> {
    pub y_sign: ArrayView1<'a, f64>,
    pub noise_var: f64,
}

impl OutputChannel for OneBitChannel<'_> {
    fn len(&self) -> usize {
        self.y_sign.len()
    }

    #[inline]
    fn update(&self, i: usize, p_hat: f64, v_p: f64) -> (f64, f64) {
        let total = v_p + self.noise_var;
        let (m, v) = truncated_moments_unchecked(self.y_sign[i], p_hat, total);
        ((m - p_hat) / total, (1.0 - v / total) / total)
    }
}

/// Real-valued observations `y = W h + N(0, noise_var)`.
#[derive(Debug, Clone, Copy)]
pub struct AwgnChannel<'a> {
    pub y: ArrayView1<'a, f64>,
    pub noise_var: f64,
}

impl OutputChannel for AwgnChannel<'_> {
    fn len(&self) -> usize {
        self.y.len()
    }

    #[inline]
    fn update(&self, i: usize, p_hat: f64, v_p: f64) -> (f64, f64) {
        let total = v_p + self.noise_var;
        ((self.y[i] - p_hat) / total, 1.0 / total)
    }
}

#[inline]
fn clamp_var(v: f64) -> f64 {
    v.clamp(VAR_MIN, VAR_MAX)
}

fn norm(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}

/// `(W h, (W o W) v)` in one pass over the rows of `w`.
fn forward(w: ArrayView2<f64>, h: &[f64], v: &[f64], p: &mut [f64], vp: &mut [f64]) {
    for (i, row) in w.outer_iter().enumerate() {
        let row = row.to_slice().expect("standard layout");
        let mut acc_p = 0.0;
        let mut acc_v = 0.0;
        for ((&wij, &hj), &vj) in row.iter().zip(h).zip(v) {
            acc_p += wij * hj;
            acc_v += wij * wij * vj;
        }
        p[i] = acc_p;
        vp[i] = acc_v;
    }
}

/// `(W^T s, (W o W)^T v)` in one pass over the rows of `w`.
fn backward(w: ArrayView2<f64>, s: &[f64], v: &[f64], out_s: &mut [f64], out_v: &mut [f64]) {
    out_s.fill(0.0);
    out_v.fill(0.0);
    for (i, row) in w.outer_iter().enumerate() {
        let row = row.to_slice().expect("standard layout");
        let (si, vi) = (s[i], v[i]);
        for ((&wij, os), ov) in row.iter().zip(out_s.iter_mut()).zip(out_v.iter_mut()) {
            *os += wij * si;
            *ov += wij * wij * vi;
        }
    }
}

fn first_non_finite(state: &GampState) -> Option<&'static str> {
    let checks: [(&'static str, &Array1<f64>); 6] = [
        ("p_hat", &state.p_hat),
        ("s_hat", &state.s_hat),
        ("v_s", &state.v_s),
        ("r_hat", &state.r_hat),
        ("h_hat", &state.h_hat),
        ("v_h", &state.v_h),
    ];
    checks
        .into_iter()
        .find(|(_, v)| v.iter().any(|x| !x.is_finite()))
        .map(|(name, _)| name)
}

/// Runs the GAMP recursion for at most `opts.max_iters` iterations.
///
/// Each iteration performs the measurement update
/// `v_p = (W o W) v_h`, `p = W h - v_p o s`, followed by the output step of
/// `channel`, then the estimation update `v_r = 1 / ((W o W)^T v_s)`,
/// `r = h + v_r o (W^T s)` and the prior denoiser.
pub fn run_gamp<C: OutputChannel>(
    w: ArrayView2<f64>,
    channel: &C,
    prior: &SparsePrior,
    opts: &GampOptions,
    truth: Option<ArrayView1<f64>>,
) -> Result<GampResult> {
    let (m, n) = w.dim();
    if channel.len() != m {
        return Err(Error::dims("gamp observations", m, channel.len()));
    }
    if let Some(t) = truth {
        if t.len() != n {
            return Err(Error::dims("gamp reference", n, t.len()));
        }
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::InvalidConfig(format!("damping {} outside (0, 1]", opts.damping)));
    }
    let w = w.as_standard_layout();
    let w = w.view();
    let truth_energy = truth.map(|t| t.dot(&t)).filter(|&e| e > 0.0);

    let mut st = GampState {
        h_hat: Array1::from_elem(n, prior.expected_value()),
        v_h: Array1::from_elem(n, clamp_var(prior.variance())),
        s_hat: Array1::zeros(m),
        v_s: Array1::zeros(m),
        p_hat: Array1::zeros(m),
        v_p: Array1::zeros(m),
        r_hat: Array1::zeros(n),
        v_r: Array1::zeros(n),
        iter: 0,
    };
    let mut wt_s = vec![0.0; n];
    let mut wt_v = vec![0.0; n];
    let mut trace = Vec::with_capacity(opts.max_iters);
    let beta = opts.damping;
    let mut converged = false;

    for t in 1..=opts.max_iters {
        // measurement update
        forward(
            w,
            st.h_hat.as_slice().expect("contiguous"),
            st.v_h.as_slice().expect("contiguous"),
            st.p_hat.as_slice_mut().expect("contiguous"),
            st.v_p.as_slice_mut().expect("contiguous"),
        );
        for i in 0..m {
            let vp = clamp_var(st.v_p[i]);
            st.v_p[i] = vp;
            st.p_hat[i] -= vp * st.s_hat[i];
            let (s_new, vs_new) = channel.update(i, st.p_hat[i], vp);
            if beta < 1.0 && t > 1 {
                st.s_hat[i] = beta * s_new + (1.0 - beta) * st.s_hat[i];
                st.v_s[i] = clamp_var(beta * vs_new + (1.0 - beta) * st.v_s[i]);
            } else {
                st.s_hat[i] = s_new;
                st.v_s[i] = clamp_var(vs_new);
            }
        }

        // estimation update
        backward(
            w,
            st.s_hat.as_slice().expect("contiguous"),
            st.v_s.as_slice().expect("contiguous"),
            &mut wt_s,
            &mut wt_v,
        );
        let mut diff_sq = 0.0;
        let prev_norm = norm(&st.h_hat);
        for j in 0..n {
            let vr = clamp_var(1.0 / wt_v[j]);
            st.v_r[j] = vr;
            st.r_hat[j] = st.h_hat[j] + vr * wt_s[j];
            let (h_new, vh_new) = prior_denoiser(st.r_hat[j], vr, prior);
            let (h_next, vh_next) = if beta < 1.0 && t > 1 {
                (
                    beta * h_new + (1.0 - beta) * st.h_hat[j],
                    beta * vh_new + (1.0 - beta) * st.v_h[j],
                )
            } else {
                (h_new, vh_new)
            };
            let d = h_next - st.h_hat[j];
            diff_sq += d * d;
            st.h_hat[j] = h_next;
            st.v_h[j] = clamp_var(vh_next);
        }
        st.iter = t;

        let residual = diff_sq.sqrt() / prev_norm.max(1e-12);
        let nmse_proxy = truth.zip(truth_energy).map(|(tr, energy)| {
            let err: f64 = st.h_hat.iter().zip(tr.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            err / energy
        });
        trace.push(IterationRecord {
            iter: t,
            residual,
            nmse_proxy,
        });

        if let Some(what) = first_non_finite(&st) {
            return Err(Error::SolverDiverged {
                iteration: t,
                what,
                trace,
            });
        }
        if residual < opts.tol {
            converged = true;
            break;
        }
    }

    Ok(GampResult {
        state: st,
        trace,
        converged,
    })
}

/// GAMP with the noise-aware one-bit output channel.
pub fn one_bit_gamp(
    w_real: ArrayView2<f64>,
    y_sign: ArrayView1<f64>,
    prior: &SparsePrior,
    noise_var_real: f64,
    opts: &GampOptions,
    truth: Option<ArrayView1<f64>>,
) -> Result<GampResult> {
    if noise_var_real.is_nan() || noise_var_real <= 0.0 {
        return Err(Error::NonPositiveVariance(noise_var_real));
    }
    let channel = OneBitChannel {
        y_sign,
        noise_var: noise_var_real,
    };
    run_gamp(w_real, &channel, prior, opts, truth)
}

/// GAMP with an AWGN output channel applied directly to `y_values`.
pub fn awgn_gamp(
    w_real: ArrayView2<f64>,
    y_values: ArrayView1<f64>,
    prior: &SparsePrior,
    noise_var_real: f64,
    opts: &GampOptions,
    truth: Option<ArrayView1<f64>>,
) -> Result<GampResult> {
    if noise_var_real.is_nan() || noise_var_real <= 0.0 {
        return Err(Error::NonPositiveVariance(noise_var_real));
    }
    let channel = AwgnChannel {
        y: y_values,
        noise_var: noise_var_real,
    };
    run_gamp(w_real, &channel, prior, opts, truth)
}

/// Writes the trace as CSV with header `iter,residual,nmse_proxy`; the last
/// column is empty when no reference was supplied.
pub fn write_trace_csv<W: Write>(trace: &[IterationRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "iter,residual,nmse_proxy")?;
    for rec in trace {
        match rec.nmse_proxy {
            Some(p) => writeln!(out, "{},{:.12e},{:.12e}", rec.iter, rec.residual, p)?,
            None => writeln!(out, "{},{:.12e},", rec.iter, rec.residual)?,
        }
    }
    Ok(())
}
