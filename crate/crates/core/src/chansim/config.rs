use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::linalg::CMat;
use crate::seed::{self, stream};
use crate::{Error, Result};
use num_complex::Complex64;

/// OFDM symbols per slot (NR, normal cyclic prefix).
pub const SLOT_SYMBOLS: usize = 14;

/// Propagation speed used for Doppler conversion, m/s.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChannelType {
    UMi,
    UMa,
    RMa,
}

impl ChannelType {
    pub const ALL: [ChannelType; 3] = [ChannelType::UMi, ChannelType::UMa, ChannelType::RMa];

    pub fn index(self) -> u8 {
        match self {
            ChannelType::UMi => 0,
            ChannelType::UMa => 1,
            ChannelType::RMa => 2,
        }
    }

    pub fn from_index(index: u8) -> Option<Self> {
        Self::ALL.get(index as usize).copied()
    }

    /// Range of the delay-profile length, seconds.
    pub fn delay_length_range(self) -> (f64, f64) {
        match self {
            ChannelType::UMi => (50e-9, 300e-9),
            ChannelType::UMa => (100e-9, 600e-9),
            ChannelType::RMa => (30e-9, 150e-9),
        }
    }
}

/// One simulation setting plus the constants derived from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub channel_type: ChannelType,
    pub carrier_hz: f64,
    pub subcarrier_spacing_hz: f64,
    pub snr_db: f64,
    pub speed_kmh: f64,
    pub n_tx: usize,
    pub n_rx: usize,
    /// Number of subcarrier groups `B`.
    pub n_groups: usize,
    /// Subcarriers per group `M`.
    pub group_size: usize,
    /// 1-based OFDM symbol indices carrying pilots, ascending.
    pub pilot_symbols: Vec<usize>,
    /// Noise variance per receive antenna.
    pub noise_power: f64,
    /// Correlation coefficient between every pair of receive antennas' noise.
    pub noise_rho: f64,
    pub seed: u64,
}

impl SimConfig {
    /// A full-size reference configuration, mostly useful in tests.
    pub fn reference() -> Self {
        SimConfig {
            channel_type: ChannelType::UMi,
            carrier_hz: 2.6e9,
            subcarrier_spacing_hz: 15e3,
            snr_db: 30.0,
            speed_kmh: 30.0,
            n_tx: 4,
            n_rx: 2,
            n_groups: 100,
            group_size: 12,
            pilot_symbols: vec![2, 5, 8, 11],
            noise_power: 1.0,
            noise_rho: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_tx == 0 || self.n_rx == 0 || self.n_groups == 0 {
            return bad("antenna and group counts must be positive".into());
        }
        if self.group_size <= self.n_tx {
            return bad(format!(
                "group size {} leaves no noise subcarrier for {} transmit antennas",
                self.group_size, self.n_tx
            ));
        }
        if self.pilot_symbols.is_empty() {
            return bad("empty pilot symbol set".into());
        }
        if !self.pilot_symbols.windows(2).all(|w| w[0] < w[1])
            || self.pilot_symbols[0] < 1
            || *self.pilot_symbols.last().unwrap() > SLOT_SYMBOLS
        {
            return bad(format!("pilot symbols {:?} must be ascending in 1..=14", self.pilot_symbols));
        }
        if !(self.subcarrier_spacing_hz > 0.0 && self.carrier_hz > 0.0) {
            return bad("frequencies must be positive".into());
        }
        if !self.snr_db.is_finite() || self.speed_kmh < 0.0 || self.noise_power < 0.0 {
            return bad("snr, speed and noise power must be finite and non-negative".into());
        }
        let rho_min = if self.n_rx > 1 { -1.0 / (self.n_rx as f64 - 1.0) } else { -1.0 };
        if !(self.noise_rho >= rho_min && self.noise_rho < 1.0) {
            return bad(format!("noise correlation {} is not a valid covariance", self.noise_rho));
        }
        Ok(())
    }

    /// `K = B * M`.
    pub fn n_subcarriers(&self) -> usize {
        self.n_groups * self.group_size
    }

    /// `N_Z = M - N_T`, zero-power subcarriers per group.
    pub fn n_zero(&self) -> usize {
        self.group_size - self.n_tx
    }

    pub fn n_pilot_symbols(&self) -> usize {
        self.pilot_symbols.len()
    }

    /// OFDM symbol duration including cyclic prefix: a 14-symbol slot lasts
    /// `1 ms * 15 kHz / f_sc`.
    pub fn symbol_duration(&self) -> f64 {
        1e-3 * (15e3 / self.subcarrier_spacing_hz) / SLOT_SYMBOLS as f64
    }

    /// Frequency spacing between consecutive pilots of one antenna, `M f_sc`.
    pub fn pilot_spacing_hz(&self) -> f64 {
        self.group_size as f64 * self.subcarrier_spacing_hz
    }

    /// Pilot power `P` such that `10 log10(P / sigma^2) = snr_db`.
    pub fn pilot_power(&self) -> f64 {
        self.noise_power * 10f64.powf(self.snr_db / 10.0)
    }

    /// Two-sided Doppler spectrum width `w = 2 v f_c / c`.
    pub fn doppler_width_hz(&self) -> f64 {
        2.0 * (self.speed_kmh / 3.6) * self.carrier_hz / SPEED_OF_LIGHT
    }

    /// Noise covariance `sigma^2 ((1 - rho) I + rho 11^T)`.
    pub fn noise_covariance(&self) -> CMat {
        let n = self.n_rx;
        CMat::from_fn(n, n, |r, c| {
            let v = if r == c { 1.0 } else { self.noise_rho };
            Complex64::new(self.noise_power * v, 0.0)
        })
    }

    pub fn with_snr(&self, snr_db: f64) -> Self {
        SimConfig { snr_db, ..self.clone() }
    }

    /// Stable identifier of the setting (SNR and seed excluded).
    pub fn config_id(&self) -> u64 {
        let mut h = Sha256::new();
        h.update([self.channel_type.index()]);
        for x in [self.carrier_hz, self.subcarrier_spacing_hz, self.speed_kmh] {
            h.update(x.to_le_bytes());
        }
        for x in [self.n_tx, self.n_rx, self.n_groups, self.group_size] {
            h.update((x as u64).to_le_bytes());
        }
        for &s in &self.pilot_symbols {
            h.update([s as u8]);
        }
        let d = h.finalize();
        u64::from_le_bytes(d[..8].try_into().unwrap())
    }
}

/// The sets every configuration field is drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigTable {
    pub channel_types: Vec<ChannelType>,
    /// (carrier, subcarrier spacing) pairs in Hz.
    pub carriers: Vec<(f64, f64)>,
    pub snr_range_db: (f64, f64),
    pub speeds_kmh: Vec<f64>,
    /// (N_T, N_R) pairs.
    pub antennas: Vec<(usize, usize)>,
    pub group_counts: Vec<usize>,
    pub group_sizes: Vec<usize>,
    pub pilot_sets: Vec<Vec<usize>>,
}

impl Default for ConfigTable {
    fn default() -> Self {
        ConfigTable {
            channel_types: ChannelType::ALL.to_vec(),
            carriers: vec![(2.6e9, 15e3), (3.5e9, 30e3)],
            snr_range_db: (0.0, 30.0),
            speeds_kmh: vec![3.0, 10.0, 30.0, 60.0, 90.0],
            antennas: vec![(4, 1), (4, 2), (4, 4), (8, 1), (8, 2), (8, 4)],
            group_counts: vec![25, 50, 75, 100],
            group_sizes: vec![12, 24, 48],
            pilot_sets: vec![vec![2, 8], vec![2, 6, 10], vec![4, 8, 12], vec![2, 5, 8, 11]],
        }
    }
}

const MAX_REJECTIONS: u32 = 10_000;

impl ConfigTable {
    /// Draws configuration `index` of the campaign keyed by `master_seed`.
    ///
    /// Returns the configuration and the number of rejected draws. Each index
    /// has its own substream so the result does not depend on other indices.
    pub fn sample(&self, master_seed: u64, index: u64) -> Result<(SimConfig, u32)> {
        let config_seed = seed::derive(master_seed, &[stream::CONFIG, index]);
        let mut rng = seed::rng(config_seed);
        let mut rejections = 0;
        loop {
            let (carrier_hz, subcarrier_spacing_hz) = pick(&mut rng, &self.carriers);
            let (n_tx, n_rx) = pick(&mut rng, &self.antennas);
            let cfg = SimConfig {
                channel_type: pick(&mut rng, &self.channel_types),
                carrier_hz,
                subcarrier_spacing_hz,
                snr_db: rng.random_range(self.snr_range_db.0..=self.snr_range_db.1),
                speed_kmh: pick(&mut rng, &self.speeds_kmh),
                n_tx,
                n_rx,
                n_groups: pick(&mut rng, &self.group_counts),
                group_size: pick(&mut rng, &self.group_sizes),
                pilot_symbols: pick(&mut rng, &self.pilot_sets),
                noise_power: 1.0,
                noise_rho: 0.0,
                seed: config_seed,
            };
            if cfg.validate().is_ok() {
                return Ok((cfg, rejections));
            }
            rejections += 1;
            if rejections >= MAX_REJECTIONS {
                return Err(Error::InvalidConfig(
                    "configuration table admits no valid combination".into(),
                ));
            }
        }
    }

    /// SHA-256 over the canonical JSON form of the table.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config table serialises");
        hex::encode(Sha256::digest(&json))
    }
}

fn pick<T: Clone, R: Rng>(rng: &mut R, options: &[T]) -> T {
    options[rng.random_range(0..options.len())].clone()
}

/// Draws configuration `index` from the default table.
pub fn sample_config(master_seed: u64, index: u64) -> SimConfig {
    ConfigTable::default()
        .sample(master_seed, index)
        .expect("default table always has valid combinations")
        .0
}
