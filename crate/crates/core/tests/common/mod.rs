//! Test-only oracles, independent of the library's closed forms.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use onebit_chest::channel::{draw_channel, hermitian, virtual_support_size};
use onebit_chest::measurement::{
    assemble_ensemble, generate_all_frames, real_lift_matrix, real_lift_vector, unlift_vector, vec_col_major,
};
use onebit_chest::solvers::{awgn_gamp, prior_denoiser, truncated_gaussian_moments, GampOptions, SparsePrior};
use onebit_chest::{GridMode, SystemConfig};

pub mod quadrature {
    // Gauss-Kronrod 7/15 nodes on [-1, 1].
    const XGK: [f64; 8] = [
        0.991_455_371_120_812_6,
        0.949_107_912_342_758_5,
        0.864_864_423_359_769_1,
        0.741_531_185_599_394_4,
        0.586_087_235_467_691_1,
        0.405_845_151_377_397_2,
        0.207_784_955_007_898_5,
        0.0,
    ];
    const WGK: [f64; 8] = [
        0.022_935_322_010_529_22,
        0.063_092_092_629_978_55,
        0.104_790_010_322_250_2,
        0.140_653_259_715_525_9,
        0.169_004_726_639_267_9,
        0.190_350_578_064_785_4,
        0.204_432_940_075_298_9,
        0.209_482_141_084_728,
    ];
    const WG: [f64; 4] = [
        0.129_484_966_168_869_7,
        0.279_705_391_489_276_7,
        0.381_830_050_505_118_9,
        0.417_959_183_673_469_4,
    ];

    fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let fc = f(c);
        let mut kron = WGK[7] * fc;
        let mut gauss = WG[3] * fc;
        for j in 0..7 {
            let dx = h * XGK[j];
            let pair = f(c - dx) + f(c + dx);
            kron += WGK[j] * pair;
            if j % 2 == 1 {
                gauss += WG[j / 2] * pair;
            }
        }
        (kron * h, ((kron - gauss) * h).abs())
    }

    /// Adaptive bisection until each panel's Kronrod/Gauss gap is below
    /// `tol` times the running estimate of `sum |panel|`.
    pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
        let (whole, _) = gk15(&f, a, b);
        let scale = whole.abs().max(f64::MIN_POSITIVE);
        let mut stack = vec![(a, b, 0usize)];
        let mut total = 0.0;
        while let Some((lo, hi, depth)) = stack.pop() {
            let (val, err) = gk15(&f, lo, hi);
            if err <= tol * scale || depth > 60 {
                total += val;
            } else {
                let mid = 0.5 * (lo + hi);
                stack.push((lo, mid, depth + 1));
                stack.push((mid, hi, depth + 1));
            }
        }
        total
    }

    /// Mean and variance of `N(mean, var)` restricted to the half-line picked
    /// by `sign`, by direct integration of the truncated density.
    pub fn truncated_moments(sign: f64, mean: f64, var: f64) -> (f64, f64) {
        let sd = var.sqrt();
        // integrate over t = sign * r > 0; t ~ N(sign * mean, var) on t > 0
        let mu = sign * mean;
        let mode = mu.max(0.0);
        let lo = (mu - 40.0 * sd).max(0.0);
        let hi = mode + 40.0 * sd;
        let peak = -(mode - mu) * (mode - mu) / (2.0 * var);
        let dens = |t: f64| (-(t - mu) * (t - mu) / (2.0 * var) - peak).exp();
        // split at the mode's neighbourhood so narrow peaks near zero are seen
        let cuts = panels(lo, hi, mode, if mu < 0.0 { var / mu.abs() } else { sd });
        let quad = |g: &dyn Fn(f64) -> f64| -> f64 { cuts.windows(2).map(|w| integrate(g, w[0], w[1], 1e-14)).sum() };
        let z = quad(&dens);
        let m1 = quad(&|t| t * dens(t)) / z;
        let m2 = quad(&|t| (t - m1) * (t - m1) * dens(t)) / z;
        (sign * m1, m2)
    }

    /// Posterior mean and variance of a Bernoulli-Gaussian scalar
    /// `(1 - eps) delta_0 + eps N(mu, sx)` seen through `r = h + N(0, v)`,
    /// integrating the continuous component numerically.
    pub fn bernoulli_gaussian_posterior(r: f64, v: f64, eps: f64, sx: f64, mu: f64) -> (f64, f64) {
        let log_lik = |h: f64| -0.5 * (2.0 * std::f64::consts::PI * v).ln() - (r - h) * (r - h) / (2.0 * v);
        let log_slab = |h: f64| -0.5 * (2.0 * std::f64::consts::PI * sx).ln() - (h - mu) * (h - mu) / (2.0 * sx);
        let log_cont = |h: f64| eps.ln() + log_slab(h) + log_lik(h);
        // locate the continuous peak by its stationary point
        let peak_x = (sx * r + v * mu) / (sx + v);
        let width = (sx * v / (sx + v)).sqrt();
        let spike = if eps < 1.0 {
            (1.0 - eps).ln() + log_lik(0.0)
        } else {
            f64::NEG_INFINITY
        };
        let c = log_cont(peak_x).max(spike);
        let g = |h: f64| (log_cont(h) - c).exp();
        let lo = peak_x - 40.0 * width;
        let hi = peak_x + 40.0 * width;
        let cuts = panels(lo, hi, peak_x, width);
        let quad = |f: &dyn Fn(f64) -> f64| -> f64 { cuts.windows(2).map(|w| integrate(f, w[0], w[1], 1e-14)).sum() };
        let w0 = (spike - c).exp();
        let z = w0 + quad(&g);
        let m1 = quad(&|h| h * g(h)) / z;
        let m2 = (w0 * m1 * m1 + quad(&|h| (h - m1) * (h - m1) * g(h))) / z;
        (m1, m2)
    }

    fn panels(lo: f64, hi: f64, center: f64, width: f64) -> Vec<f64> {
        let mut cuts = vec![lo];
        for k in [-8.0, -2.0, 0.0, 2.0, 8.0, 20.0] {
            let x = center + k * width;
            if x > lo && x < hi {
                cuts.push(x);
            }
        }
        cuts.push(hi);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        cuts
    }
}

/// Worst-case disagreement over a denoiser parameter grid.
#[derive(Debug, Clone, Copy)]
pub struct GridCheck {
    pub points: usize,
    pub worst: f64,
}

/// Truncated-Gaussian moments against quadrature, `|mean|/sd` up to 30.
/// Errors are relative to `max(|mean|, sd)` and to the variance.
pub fn truncated_grid() -> GridCheck {
    let mut points = 0;
    let mut worst = 0.0f64;
    for sign in [1.0, -1.0] {
        for var in [1e-4f64, 0.01, 0.3, 1.0, 4.0, 25.0, 1e3, 1e6] {
            let sd = var.sqrt();
            for k in 0..61 {
                let mean = (-30.0 + k as f64) * sd;
                let (m_ref, v_ref) = quadrature::truncated_moments(sign, mean, var);
                let (m, v) = truncated_gaussian_moments(sign, mean, var).expect("valid variance");
                let em = (m - m_ref).abs() / m_ref.abs().max(v_ref.sqrt());
                let ev = (v - v_ref).abs() / v_ref;
                worst = worst.max(em).max(ev);
                points += 1;
            }
        }
    }
    GridCheck { points, worst }
}

/// Bernoulli-Gaussian posterior against quadrature. Errors are measured on
/// the scale `max(|mean|, sd, 1)` of the posterior.
pub fn bernoulli_gaussian_grid() -> GridCheck {
    let mut points = 0;
    let mut worst = 0.0f64;
    for eps in [1e-3, 0.01, 0.1, 0.5, 1.0] {
        for sx in [0.5, 256.0] {
            for v in [1e-3f64, 0.1, 1.0, 10.0] {
                let sd = v.sqrt();
                for k in 0..25 {
                    let r = (-30.0 + 2.5 * k as f64) * sd;
                    let prior = SparsePrior {
                        sparsity: eps,
                        active_var: sx,
                        mean: 0.0,
                    };
                    let (m, var) = prior_denoiser(r, v, &prior);
                    let (m_ref, var_ref) = quadrature::bernoulli_gaussian_posterior(r, v, eps, sx, 0.0);
                    let scale = m_ref.abs().max(var_ref.sqrt()).max(1.0);
                    worst = worst
                        .max((m - m_ref).abs() / scale)
                        .max((var - var_ref).abs() / (scale * scale));
                    points += 1;
                }
            }
        }
    }
    GridCheck { points, worst }
}

pub fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

fn small_config(rng: &mut ChaCha8Rng) -> SystemConfig {
    let n_tx = rng.random_range(1..=4);
    let n_rx = rng.random_range(1..=4);
    let l_tx = rng.random_range(1..=n_tx);
    let l_rx = rng.random_range(1..=n_rx);
    let cfg = SystemConfig {
        n_tx,
        n_rx,
        l_tx,
        l_rx,
        n_streams: rng.random_range(1..=l_tx.min(l_rx)),
        n_paths: rng.random_range(1..=3),
        n_frames: rng.random_range(1..=6),
        snr_db: rng.random_range(-10.0..10.0),
        ..SystemConfig::default()
    };
    cfg.validate().expect("small config is valid");
    cfg
}

/// Largest deviation between the stacked model and frame-by-frame
/// `sqrt(rho) W_m^H H x_m`, relative to the largest direct sample. Covers both
/// `w_complex h_v` and `phi vec(H)`.
pub fn kron_identity_worst(instances: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let cfg = small_config(&mut rng);
        let channel = draw_channel(&cfg, &mut rng).expect("channel");
        let frames = generate_all_frames(&cfg, &mut rng).expect("frames");
        let ens = assemble_ensemble(&cfg, frames, &channel, &mut rng).expect("ensemble");
        let sqrt_rho = cfg.rho().sqrt();

        let mut direct = Vec::new();
        for f in &ens.frames {
            let x = f.f_rf.dot(&f.f_bb).dot(&f.symbols);
            direct.extend(hermitian(&f.w_rf).dot(&channel.h.dot(&x)).iter().copied());
        }
        let direct = Array1::from(direct);
        let scale = direct.iter().map(|z| z.norm()).fold(1e-300, f64::max);
        let stacked = unlift_vector(ens.r_noiseless.view());
        let via_phi = ens.phi.dot(&vec_col_major(&channel.h)) * Complex64::from(sqrt_rho);
        for i in 0..direct.len() {
            let want = direct[i] * sqrt_rho;
            worst = worst.max((stacked[i] - want).norm() / (sqrt_rho * scale));
            worst = worst.max((via_phi[i] - want).norm() / (sqrt_rho * scale));
        }
    }
    worst
}

/// Largest elementwise error of `unlift(lift(A) lift(v))` against `A v`.
pub fn real_lift_worst(instances: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0x11f7);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let rows = rng.random_range(1..=12);
        let cols = rng.random_range(1..=12);
        let a = Array2::from_shape_simple_fn((rows, cols), || complex_gaussian(&mut rng));
        let v = Array1::from_shape_simple_fn(cols, || complex_gaussian(&mut rng));
        let want = a.dot(&v);
        let got = unlift_vector(real_lift_matrix(&a).dot(&real_lift_vector(v.view())).view());
        for (g, w) in got.iter().zip(want.iter()) {
            worst = worst.max((g - w).norm() / w.norm().max(1.0));
        }
    }
    worst
}

/// Number of on-grid draws whose virtual support differs from `n_paths`,
/// out of `seeds` draws per path count in `1..=4`.
pub fn on_grid_support_failures(seeds: u64) -> (usize, usize) {
    let mut bad = 0;
    let mut total = 0;
    for n_paths in 1..=4 {
        let cfg = SystemConfig {
            n_paths,
            grid_mode: GridMode::OnGrid,
            ..SystemConfig::default()
        };
        for seed in 0..seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ch = draw_channel(&cfg, &mut rng).expect("channel");
            if virtual_support_size(&ch.h_virtual, 1e-9) != n_paths {
                bad += 1;
            }
            total += 1;
        }
    }
    (bad, total)
}

/// Sample mean of `||H||_F^2 / (n_tx n_rx)` over off-grid draws.
pub fn mean_power_ratio(draws: usize) -> f64 {
    let cfg = SystemConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x90e1);
    let scale = (cfg.n_tx * cfg.n_rx) as f64;
    let total: f64 = (0..draws)
        .map(|_| {
            let ch = draw_channel(&cfg, &mut rng).expect("channel");
            ch.h.iter().map(|z| z.norm_sqr()).sum::<f64>() / scale
        })
        .sum();
    total / draws as f64
}

/// Relative error of AWGN-GAMP with a pure Gaussian prior against the
/// closed-form LMMSE `(W^T W + (s2/sx) I)^-1 W^T y`, worst over instances.
pub fn lmmse_worst(instances: usize) -> f64 {
    let (m, n) = (16, 8);
    let (s2, sx) = (1e-2, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a11);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let w = Array2::from_shape_simple_fn((m, n), || rng.sample::<f64, _>(StandardNormal) / (m as f64).sqrt());
        let h = Array1::from_shape_simple_fn(n, || rng.sample::<f64, _>(StandardNormal));
        let y = w.dot(&h);

        let wn = DMatrix::from_fn(m, n, |i, j| w[[i, j]]);
        let yn = DVector::from_fn(m, |i, _| y[i]);
        let gram = wn.transpose() * &wn + DMatrix::identity(n, n) * (s2 / sx);
        let oracle = gram
            .cholesky()
            .expect("positive definite")
            .solve(&(wn.transpose() * yn));

        let prior = SparsePrior {
            sparsity: 1.0,
            active_var: sx,
            mean: 0.0,
        };
        let opts = GampOptions {
            max_iters: 2000,
            damping: 1.0,
            tol: 1e-13,
        };
        let est = awgn_gamp(w.view(), y.view(), &prior, s2, &opts, None).expect("gamp");
        let est = est.estimate();
        let err: f64 = (0..n).map(|i| (est[i] - oracle[i]).powi(2)).sum::<f64>().sqrt();
        worst = worst.max(err / oracle.norm());
    }
    worst
}
