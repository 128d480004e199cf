use ndarray::Array4;
use num_complex::Complex64;

use super::noise::NoiseEstimate;

/// Lower clamp on the signal-power estimate.
pub const POWER_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerEstimate {
    /// `max(raw, POWER_FLOOR)`.
    pub value: f64,
    /// The unclamped estimate, negative when noise dominates.
    pub raw: f64,
}

/// Mean received pilot power per antenna minus the mean noise variance.
pub fn estimate_signal_power(h_tilde: &Array4<Complex64>, noise: &NoiseEstimate) -> PowerEstimate {
    let n_rx = h_tilde.shape()[3];
    let vectors = h_tilde.len() / n_rx.max(1);
    let energy: f64 = h_tilde.iter().map(|z| z.norm_sqr()).sum();
    let raw = energy / (vectors * n_rx) as f64 - noise.mean_variance();
    PowerEstimate { value: raw.max(POWER_FLOOR), raw }
}
