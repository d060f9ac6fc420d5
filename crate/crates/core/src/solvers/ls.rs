//! Least-squares baseline on unquantized complex observations.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::channel::hermitian;
use crate::error::{Error, Result};

/// Relative ridge applied to the Gram matrix, scaled by its largest eigenvalue.
pub const RIDGE_REL: f64 = 1e-6;
/// Refinement passes of the ridge solve; each pass shrinks the gap to the
/// exact minimum-norm solution by `ridge / (s^2 + ridge)` per singular value.
const REFINE_PASSES: usize = 3;
const POWER_ITERS: usize = 60;

/// Minimum-norm least-squares estimate of `x` in `r = W x`.
///
/// Wide systems solve `(W W^H + eps I) u = r`, `x = W^H u`; tall systems
/// solve `(W^H W + eps I) x = W^H r`. The ridge is `1e-6` times a power
/// iteration estimate of the largest squared singular value, and a few
/// residual-correction passes remove the ridge bias.
pub fn ls_estimate(w_complex: &Array2<Complex64>, r: &Array1<Complex64>) -> Result<Array1<Complex64>> {
    let (m, n) = w_complex.dim();
    if r.len() != m {
        return Err(Error::dims("ls observations", m, r.len()));
    }
    let wh = hermitian(w_complex);
    let wide = m <= n;
    let mut gram = if wide { w_complex.dot(&wh) } else { wh.dot(w_complex) };
    let ridge = RIDGE_REL * largest_eigenvalue(&gram);
    if ridge == 0.0 {
        return Ok(Array1::zeros(n));
    }
    for i in 0..gram.nrows() {
        gram[(i, i)] += Complex64::from(ridge);
    }
    let chol = Cholesky::new(&gram)?;

    let mut x = Array1::<Complex64>::zeros(n);
    for _ in 0..=REFINE_PASSES {
        let resid = r - &w_complex.dot(&x);
        let step = if wide {
            wh.dot(&chol.solve(&resid))
        } else {
            chol.solve(&wh.dot(&resid))
        };
        x += &step;
    }
    Ok(x)
}

/// Power iteration on a Hermitian positive semidefinite matrix.
fn largest_eigenvalue(g: &Array2<Complex64>) -> f64 {
    let n = g.nrows();
    let mut v = Array1::from_shape_fn(n, |i| Complex64::new(1.0 + i as f64 / n as f64, 0.0));
    let mut lambda = 0.0;
    for _ in 0..POWER_ITERS {
        let gv = g.dot(&v);
        let nrm = gv.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nrm == 0.0 {
            return 0.0;
        }
        let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        lambda = nrm / vn;
        v = gv / Complex64::from(nrm);
    }
    lambda
}

/// Lower-triangular factor `L` with `G = L L^H`.
struct Cholesky {
    l: Array2<Complex64>,
}

impl Cholesky {
    fn new(g: &Array2<Complex64>) -> Result<Self> {
        let n = g.nrows();
        let mut l = Array2::<Complex64>::zeros((n, n));
        for j in 0..n {
            let mut d = g[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if d.is_nan() || d <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "normal-equation matrix not positive definite at pivot {j}"
                )));
            }
            let ljj = d.sqrt();
            l[(j, j)] = Complex64::from(ljj);
            for i in j + 1..n {
                let mut acc = g[(i, j)];
                for k in 0..j {
                    acc -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = acc / ljj;
            }
        }
        Ok(Cholesky { l })
    }

    fn solve(&self, b: &Array1<Complex64>) -> Array1<Complex64> {
        let n = b.len();
        let l = &self.l;
        let mut y = b.clone();
        for i in 0..n {
            let mut acc = y[i];
            for k in 0..i {
                acc -= l[(i, k)] * y[k];
            }
            y[i] = acc / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            for k in i + 1..n {
                acc -= l[(k, i)].conj() * y[k];
            }
            y[i] = acc / l[(i, i)];
        }
        y
    }
}
