use crate::linalg::{log_det_hpd, CMat};
use crate::{Error, Result};

/// `G = 1/|P| sum_{(k,l)} log det(C_n + P H W W^H H^H)`, natural log.
///
/// The determinant is taken of `C_n + ...` as written, without whitening by `C_n`.
pub fn spectral_efficiency(channels: &[CMat], noise_covariance: &CMat, power: f64, precoder: &CMat) -> Result<f64> {
    if channels.is_empty() {
        return Err(Error::Empty("channel matrices"));
    }
    let n_rx = noise_covariance.nrows();
    let mut total = 0.0;
    for h in channels {
        if h.nrows() != n_rx || h.ncols() != precoder.nrows() {
            return Err(Error::Shape("channel, noise covariance and precoder dimensions".into()));
        }
        let hw = h * precoder;
        let m = noise_covariance + (&hw * hw.adjoint()).scale(power);
        total += log_det_hpd(&m)?;
    }
    Ok(total / channels.len() as f64)
}
