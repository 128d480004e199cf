use ndarray::Array4;
use num_complex::Complex64;

use super::noise::NoiseEstimate;
use crate::chansim::SimConfig;
use crate::linalg::{hermitian_part, sinc, CMat};
use crate::{Error, Result};

/// Diagonal clamp applied before turning a covariance into a correlation.
const DIAGONAL_FLOOR: f64 = 1e-9;

/// Per-receive-antenna Doppler width and the time-domain matrices behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct DopplerEstimate {
    /// Doppler spectrum width per antenna, Hz; always a grid member.
    pub width: Vec<f64>,
    pub time_covariance: Vec<CMat>,
    pub time_correlation: Vec<CMat>,
    pub robust_correlation: Vec<CMat>,
}

/// `n` log-spaced Doppler width candidates in `[lo, hi]` Hz.
pub fn doppler_grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// `[R(w)]_{l1,l2} = sinc(w (l1 - l2) T)` over the pilot symbol indices.
pub fn robust_time_correlation(width: f64, pilot_symbols: &[usize], symbol_duration: f64) -> CMat {
    let n = pilot_symbols.len();
    CMat::from_fn(n, n, |a, b| {
        let dl = pilot_symbols[a] as f64 - pilot_symbols[b] as f64;
        Complex64::new(sinc(width * dl * symbol_duration), 0.0)
    })
}

/// `C_time[i] = 1/(N_T B) sum_{j,m} h[i,j,m] h[i,j,m]^H - sigma_i^2 I` per receive antenna.
pub fn time_covariance(h_tilde: &Array4<Complex64>, noise_variances: &[f64]) -> Vec<CMat> {
    let (n_tx, b, n_sym, n_rx) = h_tilde.dim();
    (0..n_rx)
        .map(|i| {
            let mut c = CMat::zeros(n_sym, n_sym);
            for j in 0..n_tx {
                for m in 0..b {
                    for p in 0..n_sym {
                        let hp = h_tilde[[j, m, p, i]];
                        for q in 0..n_sym {
                            c[(p, q)] += hp * h_tilde[[j, m, q, i]].conj();
                        }
                    }
                }
            }
            let mut c = hermitian_part(&c.unscale((n_tx * b) as f64));
            for p in 0..n_sym {
                c[(p, p)] -= Complex64::new(noise_variances[i], 0.0);
            }
            c
        })
        .collect()
}

/// `r_ij = c_ij / sqrt(c_ii c_jj)` after clamping the diagonal to a small positive floor.
pub fn correlation_from_covariance(c: &CMat) -> CMat {
    let d: Vec<f64> = c.diagonal().iter().map(|z| z.re.max(DIAGONAL_FLOOR).sqrt()).collect();
    let n = c.nrows();
    CMat::from_fn(n, n, |a, b| {
        if a == b {
            Complex64::new(1.0, 0.0)
        } else {
            c[(a, b)] / (d[a] * d[b])
        }
    })
}

/// Grid point minimising `||R(w) - r||_F^2`; ties go to the smallest width.
pub fn fit_doppler_width(r: &CMat, grid: &[f64], pilot_symbols: &[usize], symbol_duration: f64) -> f64 {
    let mut best = (f64::INFINITY, grid[0]);
    for &w in grid {
        let resid = (robust_time_correlation(w, pilot_symbols, symbol_duration) - r).norm_squared();
        if resid < best.0 {
            best = (resid, w);
        }
    }
    best.1
}

pub fn estimate_doppler(
    h_tilde: &Array4<Complex64>,
    noise: &NoiseEstimate,
    cfg: &SimConfig,
    grid: &[f64],
) -> Result<DopplerEstimate> {
    if grid.is_empty() {
        return Err(Error::Empty("Doppler grid"));
    }
    if !grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument("Doppler grid must be strictly ascending".into()));
    }
    if h_tilde.shape()[2] != cfg.n_pilot_symbols() {
        return Err(Error::Shape("observation and config disagree on |S|".into()));
    }
    let t = cfg.symbol_duration();
    let time_covariance = time_covariance(h_tilde, &noise.variances);
    let time_correlation: Vec<CMat> = time_covariance.iter().map(correlation_from_covariance).collect();
    let width: Vec<f64> = time_correlation
        .iter()
        .map(|r| fit_doppler_width(r, grid, &cfg.pilot_symbols, t))
        .collect();
    let robust_correlation = width
        .iter()
        .map(|&w| robust_time_correlation(w, &cfg.pilot_symbols, t))
        .collect();
    Ok(DopplerEstimate { width, time_covariance, time_correlation, robust_correlation })
}
