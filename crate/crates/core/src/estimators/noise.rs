use ndarray::Array3;
use num_complex::Complex64;

use crate::linalg::{hermitian_part, CMat};
use crate::{Error, Result};

/// Sample noise covariance and per-antenna noise variances.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseEstimate {
    pub covariance: CMat,
    /// `sigma_i^2 = [C_n]_ii`.
    pub variances: Vec<f64>,
}

impl NoiseEstimate {
    pub fn from_covariance(covariance: CMat) -> Self {
        let covariance = hermitian_part(&covariance);
        let variances = covariance.diagonal().iter().map(|z| z.re.max(0.0)).collect();
        NoiseEstimate { covariance, variances }
    }

    pub fn n_rx(&self) -> usize {
        self.variances.len()
    }

    pub fn mean_variance(&self) -> f64 {
        self.variances.iter().sum::<f64>() / self.variances.len() as f64
    }
}

/// `C_n = 1/(B N_Z |S|) sum_k sum_l z[k,l] z[k,l]^H` over the zero-power subcarriers.
///
/// `z_tilde` is indexed `[k, l, i]`.
pub fn estimate_noise_covariance(z_tilde: &Array3<Complex64>) -> Result<NoiseEstimate> {
    let (n_k, n_l, n_rx) = z_tilde.dim();
    let count = n_k * n_l;
    if count == 0 || n_rx == 0 {
        return Err(Error::Empty("noise samples"));
    }
    let mut c = CMat::zeros(n_rx, n_rx);
    for lane in z_tilde.lanes(ndarray::Axis(2)) {
        for r in 0..n_rx {
            for s in 0..n_rx {
                c[(r, s)] += lane[r] * lane[s].conj();
            }
        }
    }
    Ok(NoiseEstimate::from_covariance(c.unscale(count as f64)))
}
