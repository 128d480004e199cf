use nalgebra::DVector;
use ndarray::Array4;
use num_complex::Complex64;

use super::delay::DelayProfileEstimate;
use super::doppler::DopplerEstimate;
use super::noise::NoiseEstimate;
use super::power::PowerEstimate;
use crate::linalg::{hermitian_eigen, kron, CMat, CVec};
use crate::{Error, Result};

/// Denoised unit-power channel estimate `H[m, l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    /// `[m, l, i, j]`: group, pilot symbol, Rx antenna, Tx antenna.
    pub channel: Array4<Complex64>,
    /// Signal-power estimate the filter output was divided by.
    pub power: f64,
}

impl ChannelEstimate {
    /// The `N_R x N_T` estimate for group `m` and pilot symbol index `l`.
    pub fn matrix(&self, m: usize, l: usize) -> CMat {
        let (_, _, n_rx, n_tx) = self.channel.dim();
        CMat::from_fn(n_rx, n_tx, |i, j| self.channel[[m, l, i, j]])
    }

    /// All `B |S|` matrices, group-major.
    pub fn matrices(&self) -> Vec<CMat> {
        let (b, n_sym, _, _) = self.channel.dim();
        (0..b)
            .flat_map(|m| (0..n_sym).map(move |l| (m, l)))
            .map(|(m, l)| self.matrix(m, l))
            .collect()
    }
}

/// `R (R + a I)^{-1}` for `R = R_t ⊗ R_f`, applied in the joint eigenbasis of the two factors.
#[derive(Debug, Clone)]
pub struct KroneckerMmse {
    time_values: DVector<f64>,
    time_vectors: CMat,
    freq_values: DVector<f64>,
    freq_vectors: CMat,
}

impl KroneckerMmse {
    pub fn new(r_time: &CMat, r_freq: &CMat) -> Self {
        let (time_values, time_vectors) = hermitian_eigen(r_time);
        let (freq_values, freq_vectors) = hermitian_eigen(r_freq);
        KroneckerMmse {
            time_values: time_values.map(|v| v.max(0.0)),
            time_vectors,
            freq_values: freq_values.map(|v| v.max(0.0)),
            freq_vectors,
        }
    }

    /// Filters `x`, an `|S| x B` matrix whose row `l` is the CFR of pilot symbol `l`
    /// (the row-major flattening of `x` is the stacked vector the Kronecker factors act on).
    pub fn apply(&self, ratio: f64, x: &CMat) -> CMat {
        if ratio == 0.0 {
            return x.clone();
        }
        let mut y = self.time_vectors.adjoint() * x * self.freq_vectors.conjugate();
        for a in 0..y.nrows() {
            for b in 0..y.ncols() {
                let lambda = self.time_values[a] * self.freq_values[b];
                y[(a, b)] *= lambda / (lambda + ratio);
            }
        }
        &self.time_vectors * y * self.freq_vectors.transpose()
    }
}

/// Same filter as [`KroneckerMmse::apply`], through the explicit Kronecker product and an LU solve.
pub fn dense_mmse_apply(r_time: &CMat, r_freq: &CMat, ratio: f64, x: &CMat) -> Result<CMat> {
    let (rows, cols) = x.shape();
    let r = kron(r_time, r_freq);
    let v = CVec::from_iterator(rows * cols, (0..rows).flat_map(|l| (0..cols).map(move |m| (l, m))).map(|(l, m)| x[(l, m)]));
    let system = &r + CMat::identity(rows * cols, rows * cols).scale(ratio);
    let solved = system.lu().solve(&v).ok_or(Error::Singular("R + (sigma^2/P) I"))?;
    let out = r * solved;
    Ok(CMat::from_fn(rows, cols, |l, m| out[l * cols + m]))
}

/// Robust MMSE denoising of every `(i, j)` CFR block using the estimated
/// rectangular delay and Doppler priors, normalised to unit channel power.
pub fn robust_channel_estimate(
    h_tilde: &Array4<Complex64>,
    noise: &NoiseEstimate,
    power: &PowerEstimate,
    delay: &DelayProfileEstimate,
    doppler: &DopplerEstimate,
) -> Result<ChannelEstimate> {
    let (n_tx, b, n_sym, n_rx) = h_tilde.dim();
    if delay.freq_correlation.len() != n_rx || doppler.robust_correlation.len() != n_rx || noise.n_rx() != n_rx {
        return Err(Error::Shape("per-antenna estimates do not match N_R".into()));
    }
    let mut channel = Array4::zeros((b, n_sym, n_rx, n_tx));
    if power.value <= 0.0 {
        return Ok(ChannelEstimate { channel, power: power.value });
    }
    let amplitude = power.value.sqrt();
    for i in 0..n_rx {
        let r_f = &delay.freq_correlation[i];
        let r_t = &doppler.robust_correlation[i];
        if r_f.nrows() != b || r_t.nrows() != n_sym {
            return Err(Error::Shape("correlation factor dimensions".into()));
        }
        let filter = KroneckerMmse::new(r_t, r_f);
        let ratio = noise.variances[i] / power.value;
        for j in 0..n_tx {
            let x = CMat::from_fn(n_sym, b, |l, m| h_tilde[[j, m, l, i]]);
            let y = filter.apply(ratio, &x);
            for l in 0..n_sym {
                for m in 0..b {
                    channel[[m, l, i, j]] = y[(l, m)] / amplitude;
                }
            }
        }
    }
    Ok(ChannelEstimate { channel, power: power.value })
}
