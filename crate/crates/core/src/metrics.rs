use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

fn check(h_true: &Array2<Complex64>, h_est: &Array2<Complex64>) -> Result<f64> {
    if h_true.dim() != h_est.dim() {
        return Err(Error::dims(
            "nmse shapes",
            format!("{:?}", h_true.dim()),
            format!("{:?}", h_est.dim()),
        ));
    }
    let energy: f64 = h_true.iter().map(|z| z.norm_sqr()).sum();
    if energy == 0.0 {
        return Err(Error::ZeroNormReference);
    }
    Ok(energy)
}

/// `||H - H_est||_F^2 / ||H||_F^2` for one realization.
pub fn nmse(h_true: &Array2<Complex64>, h_est: &Array2<Complex64>) -> Result<f64> {
    let energy = check(h_true, h_est)?;
    let err: f64 = h_true.iter().zip(h_est).map(|(a, b)| (a - b).norm_sqr()).sum();
    Ok(err / energy)
}

/// NMSE after the best complex rescaling of the estimate,
/// `min_c ||H - c H_est||_F^2 / ||H||_F^2`.
pub fn nmse_scaled(h_true: &Array2<Complex64>, h_est: &Array2<Complex64>) -> Result<f64> {
    let energy = check(h_true, h_est)?;
    let est_energy: f64 = h_est.iter().map(|z| z.norm_sqr()).sum();
    if est_energy == 0.0 {
        return Ok(1.0);
    }
    let cross: Complex64 = h_est.iter().zip(h_true).map(|(e, t)| e.conj() * t).sum();
    Ok((1.0 - cross.norm_sqr() / (est_energy * energy)).max(0.0))
}
