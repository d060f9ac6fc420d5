//! Hybrid precoders/combiners, training symbols and the stacked one-bit
//! measurement model in complex and real-lifted form.

use std::f64::consts::TAU;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channel::{dft_matrix, hermitian, ChannelRealization};
use crate::config::SystemConfig;
use crate::error::{Error, Result};

/// Analog/digital beamformers and training symbols of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameHardware {
    /// `n_tx x l_tx` phase-shifter precoder.
    pub f_rf: Array2<Complex64>,
    /// `l_tx x n_streams` baseband precoder.
    pub f_bb: Array2<Complex64>,
    /// `n_rx x l_rx` phase-shifter combiner.
    pub w_rf: Array2<Complex64>,
    /// Training symbols, length `n_streams`.
    pub symbols: Array1<Complex64>,
}

impl FrameHardware {
    /// Transmitted antenna-domain vector `f_rf f_bb s`.
    pub fn transmit_vector(&self) -> Result<Array1<Complex64>> {
        self.check_dims()?;
        Ok(self.f_rf.dot(&self.f_bb.dot(&self.symbols)))
    }

    fn check_dims(&self) -> Result<()> {
        if self.f_rf.ncols() != self.f_bb.nrows() {
            return Err(Error::dims(
                "f_rf cols vs f_bb rows",
                self.f_rf.ncols(),
                self.f_bb.nrows(),
            ));
        }
        if self.f_bb.ncols() != self.symbols.len() {
            return Err(Error::dims(
                "f_bb cols vs symbols",
                self.f_bb.ncols(),
                self.symbols.len(),
            ));
        }
        Ok(())
    }
}

/// The stacked sensing model for one channel realization.
#[derive(Debug, Clone)]
pub struct MeasurementEnsemble {
    pub frames: Vec<FrameHardware>,
    /// `(M l_rx) x (n_tx n_rx)`, rows are the stacked per-frame Gamma blocks.
    pub phi: Array2<Complex64>,
    /// `conj(U_t) kron U_r`.
    pub psi: Array2<Complex64>,
    /// `sqrt(rho) phi psi`.
    pub w_complex: Array2<Complex64>,
    /// `[[Re, -Im], [Im, Re]]` lift of `w_complex`.
    pub w_real: Array2<f64>,
    pub r_noiseless: Array1<f64>,
    pub r_noisy: Array1<f64>,
    pub y_sign: Array1<f64>,
}

impl MeasurementEnsemble {
    /// Unquantized noisy observation as a complex vector.
    pub fn r_noisy_complex(&self) -> Array1<Complex64> {
        unlift_vector(self.r_noisy.view())
    }
}

/// Sylvester-Hadamard entry `(-1)^popcount(i & j)`.
pub fn hadamard_entry(i: usize, j: usize) -> f64 {
    if (i & j).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Order of the Hadamard matrix used for training: the smallest power of two
/// that is at least `max(n_streams, n_frames)`.
pub fn hadamard_order(cfg: &SystemConfig) -> usize {
    cfg.n_streams.max(cfg.n_frames).next_power_of_two()
}

fn phase_shifter_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Array2<Complex64> {
    let mag = 1.0 / (rows as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || Complex64::from_polar(mag, rng.random_range(0.0..TAU)))
}

/// Random training hardware for frame `m`.
///
/// Phase-shifter entries have magnitude `1/sqrt(N)` with i.i.d. uniform
/// phases. The baseband precoder is complex Gaussian, rescaled so that
/// `||f_rf f_bb||_F^2 = n_streams`.
pub fn generate_frame_hardware<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R, m: usize) -> Result<FrameHardware> {
    if m >= cfg.n_frames {
        return Err(Error::dims("frame index", format!("< {}", cfg.n_frames), m));
    }
    let f_rf = phase_shifter_matrix(rng, cfg.n_tx, cfg.l_tx);
    let w_rf = phase_shifter_matrix(rng, cfg.n_rx, cfg.l_rx);
    let mut f_bb = Array2::from_shape_simple_fn((cfg.l_tx, cfg.n_streams), || {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    });
    let power: f64 = f_rf.dot(&f_bb).iter().map(|z| z.norm_sqr()).sum();
    f_bb *= Complex64::from((cfg.n_streams as f64 / power).sqrt());

    let order = hadamard_order(cfg);
    let col = m % order;
    let amp = 1.0 / (cfg.n_streams as f64).sqrt();
    let symbols = Array1::from_shape_fn(cfg.n_streams, |i| Complex64::from(amp * hadamard_entry(i, col)));
    Ok(FrameHardware {
        f_rf,
        f_bb,
        w_rf,
        symbols,
    })
}

/// Hardware for all `n_frames` frames, drawn in order from one stream.
pub fn generate_all_frames<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Result<Vec<FrameHardware>> {
    (0..cfg.n_frames)
        .map(|m| generate_frame_hardware(cfg, rng, m))
        .collect()
}

/// Kronecker product of two complex matrices.
pub fn kron(a: ArrayView2<Complex64>, b: ArrayView2<Complex64>) -> Array2<Complex64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for ((i, j), &aij) in a.indexed_iter() {
        out.slice_mut(s![i * br..(i + 1) * br, j * bc..(j + 1) * bc])
            .assign(&b.mapv(|z| aij * z));
    }
    out
}

/// Column-major vectorization.
pub fn vec_col_major(a: &Array2<Complex64>) -> Array1<Complex64> {
    a.t().iter().copied().collect()
}

/// Inverse of [`vec_col_major`].
pub fn unvec_col_major(v: ArrayView1<Complex64>, rows: usize, cols: usize) -> Result<Array2<Complex64>> {
    if v.len() != rows * cols {
        return Err(Error::dims("unvec length", rows * cols, v.len()));
    }
    Ok(Array2::from_shape_fn((rows, cols), |(r, c)| v[c * rows + r]))
}

/// `Gamma_m = (s^T F_BB^T F_RF^T) kron W_RF^H`, shape `l_rx x (n_tx n_rx)`.
pub fn build_gamma(frame: &FrameHardware) -> Result<Array2<Complex64>> {
    let x = frame.transmit_vector()?;
    let row = x.into_shape_with_order((1, frame.f_rf.nrows())).expect("row vector");
    Ok(kron(row.view(), hermitian(&frame.w_rf).view()))
}

/// Real lift `[[Re A, -Im A], [Im A, Re A]]`.
pub fn real_lift_matrix(a: &Array2<Complex64>) -> Array2<f64> {
    let (r, c) = a.dim();
    let mut out = Array2::zeros((2 * r, 2 * c));
    for ((i, j), z) in a.indexed_iter() {
        out[(i, j)] = z.re;
        out[(i, j + c)] = -z.im;
        out[(i + r, j)] = z.im;
        out[(i + r, j + c)] = z.re;
    }
    out
}

/// `[Re v; Im v]`.
pub fn real_lift_vector(v: ArrayView1<Complex64>) -> Array1<f64> {
    v.iter().map(|z| z.re).chain(v.iter().map(|z| z.im)).collect()
}

/// Inverse of [`real_lift_vector`]; the input length must be even.
pub fn unlift_vector(v: ArrayView1<f64>) -> Array1<Complex64> {
    let n = v.len() / 2;
    Array1::from_shape_fn(n, |i| Complex64::new(v[i], v[i + n]))
}

/// One-bit quantizer on real samples; zero maps to `+1`.
pub fn quantize_sign(v: ArrayView1<f64>) -> Array1<f64> {
    v.mapv(|x| if x >= 0.0 { 1.0 } else { -1.0 })
}

/// Real-lifted `vec(H_v)`, the unknown the solvers estimate.
pub fn h_virtual_real(channel: &ChannelRealization) -> Array1<f64> {
    real_lift_vector(vec_col_major(&channel.h_virtual).view())
}

/// Per-real-component noise variance handed to the solvers, `noise_var / 2`.
pub fn solver_noise_var(cfg: &SystemConfig) -> f64 {
    cfg.noise_var / 2.0
}

/// Stacks the frames into the sensing model and draws the receiver noise.
///
/// `w_complex` is formed frame by frame through the mixed-product identity
/// `Gamma_m psi = (x_m^T conj(U_t)) kron (W_RF,m^H U_r)`, which equals
/// `phi psi` without the dense product.
pub fn assemble_ensemble<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    frames: Vec<FrameHardware>,
    channel: &ChannelRealization,
    rng: &mut R,
) -> Result<MeasurementEnsemble> {
    if frames.len() != cfg.n_frames {
        return Err(Error::dims("assemble_ensemble frames", cfg.n_frames, frames.len()));
    }
    if channel.h_virtual.dim() != (cfg.n_rx, cfg.n_tx) {
        return Err(Error::dims(
            "assemble_ensemble channel",
            format!("{:?}", (cfg.n_rx, cfg.n_tx)),
            format!("{:?}", channel.h_virtual.dim()),
        ));
    }
    for f in &frames {
        if f.f_rf.dim() != (cfg.n_tx, cfg.l_tx)
            || f.f_bb.dim() != (cfg.l_tx, cfg.n_streams)
            || f.w_rf.dim() != (cfg.n_rx, cfg.l_rx)
            || f.symbols.len() != cfg.n_streams
        {
            return Err(Error::dims("frame hardware", "shapes matching the config", "mismatch"));
        }
    }

    let (nt, nr, lr) = (cfg.n_tx, cfg.n_rx, cfg.l_rx);
    let n = nt * nr;
    let rows = cfg.n_obs();
    let sqrt_rho = Complex64::from(cfg.rho().sqrt());
    let ut_conj = dft_matrix(nt).mapv(|z| z.conj());
    let ur = dft_matrix(nr);
    let psi = kron(ut_conj.view(), ur.view());

    let mut phi = Array2::zeros((rows, n));
    let mut w_complex = Array2::zeros((rows, n));
    for (m, frame) in frames.iter().enumerate() {
        let block = m * lr..(m + 1) * lr;
        phi.slice_mut(s![block.clone(), ..]).assign(&build_gamma(frame)?);

        let x = frame.transmit_vector()?;
        let left = x.dot(&ut_conj).into_shape_with_order((1, nt)).expect("row vector");
        let right = hermitian(&frame.w_rf).dot(&ur);
        let mut wm = kron(left.view(), right.view());
        wm *= sqrt_rho;
        w_complex.slice_mut(s![block, ..]).assign(&wm);
    }

    let h_tilde = vec_col_major(&channel.h_virtual);
    let clean = w_complex.dot(&h_tilde);

    let noise_sd = (cfg.noise_var / 2.0).sqrt();
    let mut noise = Array1::<Complex64>::zeros(rows);
    for (m, frame) in frames.iter().enumerate() {
        let n_m = Array1::from_shape_simple_fn(nr, || {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(noise_sd * re, noise_sd * im)
        });
        let filtered = hermitian(&frame.w_rf).dot(&n_m);
        noise.slice_mut(s![m * lr..(m + 1) * lr]).assign(&filtered);
    }

    let r_noiseless = real_lift_vector(clean.view());
    let r_noisy = real_lift_vector((&clean + &noise).view());
    let y_sign = quantize_sign(r_noisy.view());
    let w_real = real_lift_matrix(&w_complex);

    Ok(MeasurementEnsemble {
        frames,
        phi,
        psi,
        w_complex,
        w_real,
        r_noiseless,
        r_noisy,
        y_sign,
    })
}

/// Writes `(w_real, y_sign, h_real)` as little-endian binary: four `u64`
/// header fields (rows, cols, y length, h length) followed by `f64` data,
/// the matrix in row-major order.
pub fn write_dump(path: &Path, w_real: &Array2<f64>, y_sign: &Array1<f64>, h_real: &Array1<f64>) -> Result<()> {
    let mut buf = Vec::with_capacity(32 + 8 * (w_real.len() + y_sign.len() + h_real.len()));
    for dim in [w_real.nrows(), w_real.ncols(), y_sign.len(), h_real.len()] {
        buf.extend_from_slice(&(dim as u64).to_le_bytes());
    }
    for x in w_real.iter().chain(y_sign.iter()).chain(h_real.iter()) {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&buf).map_err(|e| Error::io(path, e))
}

/// Reads a file produced by [`write_dump`].
pub fn read_dump(path: &Path) -> Result<(Array2<f64>, Array1<f64>, Array1<f64>)> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let word = |i: usize| -> [u8; 8] { bytes[8 * i..8 * i + 8].try_into().expect("8 bytes") };
    if bytes.len() < 32 {
        return Err(Error::dims("dump header", ">= 32 bytes", bytes.len()));
    }
    let header: Vec<usize> = (0..4).map(|i| u64::from_le_bytes(word(i)) as usize).collect();
    let (rows, cols, ny, nh) = (header[0], header[1], header[2], header[3]);
    let total = rows * cols + ny + nh;
    if bytes.len() != 32 + 8 * total {
        return Err(Error::dims("dump payload", 32 + 8 * total, bytes.len()));
    }
    let values: Vec<f64> = (0..total).map(|i| f64::from_le_bytes(word(4 + i))).collect();
    let w = Array2::from_shape_vec((rows, cols), values[..rows * cols].to_vec()).expect("shape checked");
    let y = Array1::from(values[rows * cols..rows * cols + ny].to_vec());
    let h = Array1::from(values[rows * cols + ny..].to_vec());
    Ok((w, y, h))
}
