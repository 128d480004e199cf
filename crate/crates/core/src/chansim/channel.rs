use std::f64::consts::PI;

use ndarray::Array4;
use num_complex::Complex64;
use rand::Rng;

use super::config::{SimConfig, SLOT_SYMBOLS};
use crate::linalg::CMat;
use crate::seed::{self, stream};
use crate::{Error, Result};

/// Tap and sinusoid counts of the synthetic channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ChannelModel {
    pub n_taps: usize,
    /// Sinusoids per tap process; sets how well the time correlation follows the sinc.
    pub n_sinusoids: usize,
}

impl Default for ChannelModel {
    fn default() -> Self {
        ChannelModel { n_taps: 32, n_sinusoids: 64 }
    }
}

/// Rectangular delay profile `[center - length/2, center + length/2]`, seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayWindow {
    pub center: f64,
    pub length: f64,
}

impl DelayWindow {
    /// Draws the window for a configuration: the length uniform in the channel
    /// type's range, the center uniform in `[0, 1/(2 M f_sc) - length/2]`.
    pub fn sample<R: Rng>(cfg: &SimConfig, rng: &mut R) -> Self {
        let (lo, hi) = cfg.channel_type.delay_length_range();
        let length = rng.random_range(lo..=hi);
        let max_center = (0.5 / cfg.pilot_spacing_hz() - 0.5 * length).max(0.0);
        let center = rng.random_range(0.0..=max_center);
        DelayWindow { center, length }
    }
}

/// A wide-sense stationary tapped-delay-line channel.
///
/// Tap delays are shared by all antenna pairs; each (rx, tx, tap) triple owns
/// an independent sum-of-sinusoids gain process whose Doppler spectrum is
/// uniform on `[-w/2, w/2]`, so its time correlation is `sinc(w dt)`. Equal tap
/// powers summing to one give unit average power per channel entry.
///
/// The frequency response is evaluated on demand rather than stored: a full
/// `[K, L, slots, N_R, N_T]` tensor for the largest configurations runs into
/// gigabytes.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    n_rx: usize,
    n_tx: usize,
    n_slots: usize,
    /// Delay-profile center used to draw the taps, seconds.
    pub genie_mu: f64,
    /// Delay-profile length used to draw the taps, seconds.
    pub genie_len: f64,
    /// Two-sided Doppler spectrum width, Hz.
    pub genie_w: f64,
    pub tap_delays: Vec<f64>,
    n_sinusoids: usize,
    /// Sinusoid frequencies (Hz), indexed `((rx * n_tx + tx) * n_taps + tap) * n_sinusoids + s`.
    frequencies: Vec<f64>,
    phases: Vec<f64>,
    symbol_duration: f64,
    subcarrier_spacing: f64,
}

pub fn generate_channel(cfg: &SimConfig, n_slots: usize, rng_seed: u64) -> Result<ChannelRealization> {
    generate_channel_with(cfg, n_slots, rng_seed, ChannelModel::default(), None)
}

/// Like [`generate_channel`], with an explicit model and optionally a fixed delay window.
pub fn generate_channel_with(
    cfg: &SimConfig,
    n_slots: usize,
    rng_seed: u64,
    model: ChannelModel,
    window: Option<DelayWindow>,
) -> Result<ChannelRealization> {
    if n_slots == 0 {
        return Err(Error::InvalidArgument("n_slots must be at least 1".into()));
    }
    if model.n_taps == 0 || model.n_sinusoids == 0 {
        return Err(Error::InvalidArgument("channel model needs taps and sinusoids".into()));
    }
    cfg.validate()?;
    let mut rng = seed::rng(seed::derive(rng_seed, &[stream::CHANNEL]));
    let window = window.unwrap_or_else(|| DelayWindow::sample(cfg, &mut rng));
    let half = 0.5 * window.length;
    let tap_delays: Vec<f64> = (0..model.n_taps)
        .map(|_| {
            if half > 0.0 {
                rng.random_range(window.center - half..=window.center + half)
            } else {
                window.center
            }
        })
        .collect();

    let width = cfg.doppler_width_hz();
    let n = cfg.n_rx * cfg.n_tx * model.n_taps * model.n_sinusoids;
    let mut frequencies = Vec::with_capacity(n);
    let mut phases = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random();
        frequencies.push((u - 0.5) * width);
        phases.push(rng.random::<f64>() * 2.0 * PI);
    }

    Ok(ChannelRealization {
        n_rx: cfg.n_rx,
        n_tx: cfg.n_tx,
        n_slots,
        genie_mu: window.center,
        genie_len: window.length,
        genie_w: width,
        tap_delays,
        n_sinusoids: model.n_sinusoids,
        frequencies,
        phases,
        symbol_duration: cfg.symbol_duration(),
        subcarrier_spacing: cfg.subcarrier_spacing_hz,
    })
}

impl ChannelRealization {
    pub fn n_slots(&self) -> usize {
        self.n_slots
    }

    pub fn n_taps(&self) -> usize {
        self.tap_delays.len()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n_rx, self.n_tx)
    }

    /// Start time of a 1-based symbol within a slot; time runs continuously across slots.
    pub fn symbol_time(&self, slot: usize, symbol: usize) -> f64 {
        ((slot * SLOT_SYMBOLS + symbol) as f64 - 1.0) * self.symbol_duration
    }

    /// Complex gain of one tap at time `t`.
    pub fn tap_gain(&self, rx: usize, tx: usize, tap: usize, t: f64) -> Complex64 {
        let start = ((rx * self.n_tx + tx) * self.n_taps() + tap) * self.n_sinusoids;
        let end = start + self.n_sinusoids;
        let sum: Complex64 = self.frequencies[start..end]
            .iter()
            .zip(&self.phases[start..end])
            .map(|(&f, &phi)| Complex64::cis(2.0 * PI * f * t + phi))
            .sum();
        sum / ((self.n_sinusoids * self.n_taps()) as f64).sqrt()
    }

    fn check_slot(&self, slot: usize) -> Result<()> {
        if slot >= self.n_slots {
            return Err(Error::SlotOutOfRange { slot, n_slots: self.n_slots });
        }
        Ok(())
    }

    /// `H[k, l]` entry for one antenna pair; `subcarrier` and `symbol` are 1-based.
    pub fn response(&self, rx: usize, tx: usize, subcarrier: usize, slot: usize, symbol: usize) -> Complex64 {
        let t = self.symbol_time(slot, symbol);
        let f = subcarrier as f64 * self.subcarrier_spacing;
        self.tap_delays
            .iter()
            .enumerate()
            .map(|(tap, &tau)| self.tap_gain(rx, tx, tap, t) * Complex64::cis(-2.0 * PI * f * tau))
            .sum()
    }

    /// The `N_R x N_T` channel matrix at one resource element.
    pub fn response_matrix(&self, subcarrier: usize, slot: usize, symbol: usize) -> Result<CMat> {
        self.check_slot(slot)?;
        Ok(CMat::from_fn(self.n_rx, self.n_tx, |r, c| {
            self.response(r, c, subcarrier, slot, symbol)
        }))
    }

    /// True channel at the pilot positions of `slot`: entry `[j, m, l, i]` is
    /// `h_j[M m + j, l]` at receive antenna `i` (0-based `j`, `m`, `l`, `i`).
    pub fn pilot_channel(&self, cfg: &SimConfig, slot: usize) -> Result<Array4<Complex64>> {
        self.check_slot(slot)?;
        if (cfg.n_rx, cfg.n_tx) != (self.n_rx, self.n_tx) {
            return Err(Error::Shape("configuration does not match the realization".into()));
        }
        let b = cfg.n_groups;
        let n_sym = cfg.n_pilot_symbols();
        let n_taps = self.n_taps();
        let mut out = Array4::zeros((self.n_tx, b, n_sym, self.n_rx));
        let mut phasors = vec![Complex64::new(0.0, 0.0); b * n_taps];
        let mut gains = vec![Complex64::new(0.0, 0.0); n_taps];
        for tx in 0..self.n_tx {
            for m in 0..b {
                let f = (cfg.group_size * m + tx + 1) as f64 * self.subcarrier_spacing;
                for (tap, &tau) in self.tap_delays.iter().enumerate() {
                    phasors[m * n_taps + tap] = Complex64::cis(-2.0 * PI * f * tau);
                }
            }
            for rx in 0..self.n_rx {
                for (li, &symbol) in cfg.pilot_symbols.iter().enumerate() {
                    let t = self.symbol_time(slot, symbol);
                    for (tap, g) in gains.iter_mut().enumerate() {
                        *g = self.tap_gain(rx, tx, tap, t);
                    }
                    for m in 0..b {
                        let row = &phasors[m * n_taps..(m + 1) * n_taps];
                        out[[tx, m, li, rx]] = row.iter().zip(&gains).map(|(p, g)| p * g).sum();
                    }
                }
            }
        }
        Ok(out)
    }
}
