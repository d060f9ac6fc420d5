//! Geometric narrowband MIMO channels and their angular-domain (virtual)
//! representation on uniform linear arrays.

use std::f64::consts::{PI, TAU};

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::{GridMode, SystemConfig};
use crate::error::{Error, Result};

/// Angles of departure/arrival and complex gains of the propagation paths.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub aod: Vec<f64>,
    pub aoa: Vec<f64>,
    pub gains: Vec<Complex64>,
}

impl PathSet {
    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }
}

/// A channel matrix together with its virtual image and the paths behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// `n_rx x n_tx` antenna-domain channel.
    pub h: Array2<Complex64>,
    /// `n_rx x n_tx` angular-domain channel, `U_r^H h U_t`.
    pub h_virtual: Array2<Complex64>,
    pub paths: PathSet,
}

/// Half-wavelength ULA steering vector with unit Euclidean norm:
/// entry `i` is `exp(j pi i sin(theta)) / sqrt(n)`.
pub fn array_response(theta: f64, n: usize) -> Array1<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    let phase_step = PI * theta.sin();
    Array1::from_shape_fn(n, |i| Complex64::from_polar(scale, phase_step * i as f64))
}

/// Normalized unitary DFT matrix with entries `exp(j 2 pi i k / n) / sqrt(n)`.
///
/// Column `k` equals `array_response(grid_angle(k, n), n)`.
pub fn dft_matrix(n: usize) -> Array2<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    Array2::from_shape_fn((n, n), |(i, k)| {
        // reduce i*k mod n before forming the phase to keep it exact for large n
        let ik = (i * k) % n;
        Complex64::from_polar(scale, TAU * ik as f64 / n as f64)
    })
}

/// Angle in `[0, 2 pi)` whose steering vector is DFT column `k` of size `n`.
///
/// The spatial frequency `2k/n` is folded into `[-1, 1)` before `asin`.
pub fn grid_angle(k: usize, n: usize) -> f64 {
    let mut u = 2.0 * k as f64 / n as f64;
    if u >= 1.0 {
        u -= 2.0;
    }
    let theta = u.asin();
    if theta < 0.0 {
        theta + TAU
    } else {
        theta
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let sd = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(sd * re, sd * im)
}

/// Draws path angles and gains.
///
/// Off-grid angles are uniform on `[0, 2 pi)`. On-grid angles come from DFT
/// bins sampled without replacement on each side, so no two paths share a
/// transmit bin or a receive bin.
pub fn generate_paths<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> PathSet {
    let np = cfg.n_paths;
    let (aod, aoa) = match cfg.grid_mode {
        GridMode::OffGrid => {
            let aod = (0..np).map(|_| rng.random_range(0.0..TAU)).collect();
            let aoa = (0..np).map(|_| rng.random_range(0.0..TAU)).collect();
            (aod, aoa)
        }
        GridMode::OnGrid => {
            let tx_bins = rand::seq::index::sample(rng, cfg.n_tx, np);
            let rx_bins = rand::seq::index::sample(rng, cfg.n_rx, np);
            let aod = tx_bins.iter().map(|k| grid_angle(k, cfg.n_tx)).collect();
            let aoa = rx_bins.iter().map(|k| grid_angle(k, cfg.n_rx)).collect();
            (aod, aoa)
        }
    };
    let gains = (0..np).map(|_| complex_gaussian(rng, cfg.path_gain_var)).collect();
    PathSet { aod, aoa, gains }
}

/// Sums the paths into `H = sqrt(n_rx n_tx / n_paths) sum_l g_l a_r(aoa_l) a_t(aod_l)^H`
/// and computes the virtual image.
pub fn assemble_channel(cfg: &SystemConfig, paths: &PathSet) -> Result<ChannelRealization> {
    let np = paths.len();
    if np != cfg.n_paths || paths.aod.len() != np || paths.aoa.len() != np {
        return Err(Error::dims(
            "assemble_channel paths",
            cfg.n_paths,
            format!("aod {}, aoa {}, gains {}", paths.aod.len(), paths.aoa.len(), np),
        ));
    }
    let scale = ((cfg.n_rx * cfg.n_tx) as f64 / np as f64).sqrt();
    let mut h = Array2::<Complex64>::zeros((cfg.n_rx, cfg.n_tx));
    for ((&aod, &aoa), &gain) in paths.aod.iter().zip(&paths.aoa).zip(&paths.gains) {
        let at = array_response(aod, cfg.n_tx);
        let ar = array_response(aoa, cfg.n_rx);
        let g = gain * scale;
        for (r, &ar_r) in ar.iter().enumerate() {
            let lhs = g * ar_r;
            for (c, &at_c) in at.iter().enumerate() {
                h[(r, c)] += lhs * at_c.conj();
            }
        }
    }
    let h_virtual = to_virtual(&h);
    Ok(ChannelRealization {
        h,
        h_virtual,
        paths: paths.clone(),
    })
}

/// Draws a full channel realization from `rng`.
pub fn draw_channel<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Result<ChannelRealization> {
    let paths = generate_paths(cfg, rng);
    assemble_channel(cfg, &paths)
}

pub fn hermitian(a: &Array2<Complex64>) -> Array2<Complex64> {
    a.t().mapv(|z| z.conj())
}

/// `U_r^H h U_t`.
pub fn to_virtual(h: &Array2<Complex64>) -> Array2<Complex64> {
    let (nr, nt) = h.dim();
    let ur = dft_matrix(nr);
    let ut = dft_matrix(nt);
    hermitian(&ur).dot(h).dot(&ut)
}

/// `U_r h_v U_t^H`.
pub fn from_virtual(h_virtual: &Array2<Complex64>) -> Array2<Complex64> {
    let (nr, nt) = h_virtual.dim();
    let ur = dft_matrix(nr);
    let ut = dft_matrix(nt);
    ur.dot(h_virtual).dot(&hermitian(&ut))
}

/// Number of entries with magnitude strictly above `tol`.
pub fn virtual_support_size(h_virtual: &Array2<Complex64>, tol: f64) -> usize {
    h_virtual.iter().filter(|z| z.norm() > tol).count()
}

pub fn frobenius_sq(a: &Array2<Complex64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}
