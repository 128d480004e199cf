use std::f64::consts::PI;

use ndarray::Array4;
use num_complex::Complex64;
use rustfft::FftPlanner;

use super::noise::NoiseEstimate;
use crate::chansim::SimConfig;
use crate::linalg::{sinc, CMat};
use crate::{Error, Result};

/// IDFT size used to turn pilot CFRs into impulse responses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum FftSizeRule {
    /// Smallest power of two not below `K = B M`.
    NextPow2Subcarriers,
    /// Smallest power of two not below `B`.
    NextPow2Groups,
    Fixed(usize),
}

impl FftSizeRule {
    pub fn size(self, cfg: &SimConfig) -> usize {
        match self {
            FftSizeRule::NextPow2Subcarriers => cfg.n_subcarriers().next_power_of_two(),
            FftSizeRule::NextPow2Groups => cfg.n_groups.next_power_of_two(),
            FftSizeRule::Fixed(n) => n,
        }
    }
}

/// Frequency-domain taper applied to the CFR before the IDFT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum DelayTaper {
    Rectangular,
    /// 3-term Blackman window; keeps sidelobe leakage below the detection threshold.
    Blackman,
}

impl DelayTaper {
    pub fn weights(self, n: usize) -> Vec<f64> {
        match self {
            DelayTaper::Rectangular => vec![1.0; n],
            DelayTaper::Blackman if n < 3 => vec![1.0; n],
            DelayTaper::Blackman => (0..n)
                .map(|i| {
                    let x = 2.0 * PI * i as f64 / (n - 1) as f64;
                    0.42 - 0.5 * x.cos() + 0.08 * (2.0 * x).cos()
                })
                .collect(),
        }
    }

    /// Half-width of the kernel main lobe, in units of the `1/(B M f_sc)` delay resolution.
    pub fn main_lobe_half_width(self) -> f64 {
        match self {
            DelayTaper::Rectangular => 1.0,
            DelayTaper::Blackman => 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DelaySettings {
    pub fft_size: FftSizeRule,
    pub taper: DelayTaper,
    /// Taps count as signal when their power exceeds `threshold_factor * sigma_i^2`.
    pub threshold_factor: f64,
}

impl Default for DelaySettings {
    fn default() -> Self {
        DelaySettings {
            fft_size: FftSizeRule::NextPow2Subcarriers,
            taper: DelayTaper::Blackman,
            threshold_factor: 3.0,
        }
    }
}

/// Per-receive-antenna delay profile and the robust frequency correlation built from it.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayProfileEstimate {
    /// Delay-profile centers, seconds.
    pub mu: Vec<f64>,
    /// Delay-profile lengths, seconds.
    pub len: Vec<f64>,
    pub n_start: Vec<usize>,
    pub n_end: Vec<usize>,
    /// Noisy delay profile per antenna, `n_fft` bins each.
    pub profile: Vec<Vec<f64>>,
    /// Bins above threshold per antenna.
    pub support: Vec<Vec<usize>>,
    pub n_fft: usize,
    /// Seconds per IDFT bin, `1/(M f_sc N_FFT)`.
    pub bin_seconds: f64,
    /// `B x B` robust frequency correlation per antenna.
    pub freq_correlation: Vec<CMat>,
}

/// Smallest circular window `[start, end]` (inclusive, may wrap) containing every index in `d`.
///
/// Ties go to the smallest `start`.
pub fn min_circular_cover(d: &[usize], n: usize) -> Result<(usize, usize)> {
    if d.is_empty() {
        return Err(Error::Empty("delay support"));
    }
    if let Some(&bad) = d.iter().find(|&&x| x >= n) {
        return Err(Error::InvalidArgument(format!("index {bad} outside 0..{n}")));
    }
    let mut sorted = d.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    // The cover starting at sorted[i] ends at its circular predecessor.
    let mut best = (usize::MAX, usize::MAX, usize::MAX);
    for (i, &start) in sorted.iter().enumerate() {
        let end = sorted[(i + sorted.len() - 1) % sorted.len()];
        let len = (end + n - start) % n + 1;
        if (len, start) < (best.2, best.0) {
            best = (start, end, len);
        }
    }
    Ok((best.0, best.1))
}

/// Window length in bins of a (possibly wrapping) cover.
fn cover_length(start: usize, end: usize, n: usize) -> usize {
    (end + n - start) % n + 1
}

/// Average IDFT power profile per receive antenna.
///
/// Each `(i, j, l)` CFR over the `B` groups is tapered, zero-padded to `n_fft`
/// and inverse transformed; the transform is scaled by `1/sqrt(sum w^2)` so
/// white noise of variance `sigma^2` keeps variance `sigma^2` in every bin.
pub fn delay_profile(h_tilde: &Array4<Complex64>, n_fft: usize, taper: DelayTaper) -> Result<Vec<Vec<f64>>> {
    let (n_tx, b, n_sym, n_rx) = h_tilde.dim();
    if n_fft < b {
        return Err(Error::InvalidArgument(format!("N_FFT {n_fft} is shorter than the CFR length {b}")));
    }
    let weights = taper.weights(b);
    let scale = 1.0 / weights.iter().map(|w| w * w).sum::<f64>().sqrt();
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(n_fft);
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    let mut profiles = vec![vec![0.0; n_fft]; n_rx];
    for (i, profile) in profiles.iter_mut().enumerate() {
        for j in 0..n_tx {
            for l in 0..n_sym {
                buf.fill(Complex64::new(0.0, 0.0));
                for m in 0..b {
                    buf[m] = h_tilde[[j, m, l, i]] * (weights[m] * scale);
                }
                ifft.process(&mut buf);
                for (p, x) in profile.iter_mut().zip(&buf) {
                    *p += x.norm_sqr();
                }
            }
        }
        let count = (n_tx * n_sym) as f64;
        profile.iter_mut().for_each(|p| *p /= count);
    }
    Ok(profiles)
}

/// `[R]_{m1,m2} = exp(-j 2 pi mu dm M f_sc) sinc(len dm M f_sc)` with `dm = m1 - m2`.
pub fn robust_frequency_correlation(mu: f64, len: f64, n_groups: usize, pilot_spacing_hz: f64) -> CMat {
    CMat::from_fn(n_groups, n_groups, |m1, m2| {
        let df = (m1 as f64 - m2 as f64) * pilot_spacing_hz;
        Complex64::cis(-2.0 * PI * mu * df) * sinc(len * df)
    })
}

/// Relative floor on the detection threshold; only matters when the noise estimate is zero.
const RELATIVE_FLOOR: f64 = 1e-10;

/// Delay-profile center and length per receive antenna.
pub fn estimate_delay_profile(
    h_tilde: &Array4<Complex64>,
    noise: &NoiseEstimate,
    cfg: &SimConfig,
    settings: &DelaySettings,
) -> Result<DelayProfileEstimate> {
    let n_rx = h_tilde.shape()[3];
    if noise.n_rx() != n_rx {
        return Err(Error::Shape("noise estimate and observation disagree on N_R".into()));
    }
    let n_fft = settings.fft_size.size(cfg);
    let bin_seconds = 1.0 / (cfg.pilot_spacing_hz() * n_fft as f64);
    let profile = delay_profile(h_tilde, n_fft, settings.taper)?;

    let mut est = DelayProfileEstimate {
        mu: Vec::with_capacity(n_rx),
        len: Vec::with_capacity(n_rx),
        n_start: Vec::with_capacity(n_rx),
        n_end: Vec::with_capacity(n_rx),
        profile: Vec::new(),
        support: Vec::with_capacity(n_rx),
        n_fft,
        bin_seconds,
        freq_correlation: Vec::with_capacity(n_rx),
    };
    for (p, &sigma2) in profile.iter().zip(&noise.variances) {
        let peak = p.iter().cloned().fold(0.0, f64::max);
        let threshold = (settings.threshold_factor * sigma2).max(RELATIVE_FLOOR * peak);
        let support: Vec<usize> = (0..n_fft).filter(|&n| p[n] > threshold).collect();
        let (start, end, center_bin, len_bins) = if support.is_empty() {
            let argmax = argmax(p);
            (argmax, argmax, argmax as f64, 1)
        } else {
            let (start, end) = min_circular_cover(&support, n_fft)?;
            let len = cover_length(start, end, n_fft);
            (start, end, start as f64 + (len - 1) as f64 / 2.0, len)
        };
        // Centers past the midpoint are read as negative delays.
        let center_bin = center_bin.rem_euclid(n_fft as f64);
        let center_bin = if center_bin > n_fft as f64 / 2.0 { center_bin - n_fft as f64 } else { center_bin };
        let mu = center_bin * bin_seconds;
        let len = len_bins as f64 * bin_seconds;
        est.freq_correlation
            .push(robust_frequency_correlation(mu, len, cfg.n_groups, cfg.pilot_spacing_hz()));
        est.mu.push(mu);
        est.len.push(len);
        est.n_start.push(start);
        est.n_end.push(end);
        est.support.push(support);
    }
    est.profile = profile;
    Ok(est)
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}
