use ndarray::Array4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::capacity::spectral_efficiency;
use super::delay::{estimate_delay_profile, DelayProfileEstimate, DelaySettings};
use super::denoise::{robust_channel_estimate, ChannelEstimate};
use super::doppler::{
    correlation_from_covariance, doppler_grid, estimate_doppler, fit_doppler_width, time_covariance,
    DopplerEstimate,
};
use super::noise::{estimate_noise_covariance, NoiseEstimate};
use super::power::{estimate_signal_power, PowerEstimate};
use super::precoder::{build_dft_codebook, loaded_noise_covariance, select_rank, whitened_spatial_covariance, PrecoderReport};
use crate::chansim::{transmit_pilots_with, ChannelRealization, LinkBudget, PilotObservation, SimConfig};
use crate::dataset::{ComplexMatrix, FeatureRecord};
use crate::linalg::CMat;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSettings {
    pub delay: DelaySettings,
    /// Candidate Doppler widths, Hz, ascending.
    pub doppler_grid: Vec<f64>,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        PipelineSettings {
            delay: DelaySettings::default(),
            doppler_grid: doppler_grid(64, 1.0, 1200.0),
        }
    }
}

/// Everything estimated from one slot.
#[derive(Debug, Clone)]
pub struct SlotEstimates {
    pub noise: NoiseEstimate,
    pub power: PowerEstimate,
    pub delay: DelayProfileEstimate,
    pub doppler: DopplerEstimate,
    pub channel: ChannelEstimate,
    pub report: PrecoderReport,
    pub spectral_efficiency: f64,
}

/// Runs every estimator on one slot in dependency order.
pub fn estimate_slot(obs: &PilotObservation, settings: &PipelineSettings) -> Result<SlotEstimates> {
    let cfg = &obs.config;
    let expected = (cfg.n_tx, cfg.n_groups, cfg.n_pilot_symbols(), cfg.n_rx);
    if obs.h_tilde.dim() != expected || obs.z_tilde.dim() != (cfg.n_groups * cfg.n_zero(), cfg.n_pilot_symbols(), cfg.n_rx) {
        return Err(Error::Shape("observation does not match its configuration".into()));
    }
    let noise = estimate_noise_covariance(&obs.z_tilde)?;
    let power = estimate_signal_power(&obs.h_tilde, &noise);
    let delay = estimate_delay_profile(&obs.h_tilde, &noise, cfg, &settings.delay)?;
    let doppler = estimate_doppler(&obs.h_tilde, &noise, cfg, &settings.doppler_grid)?;
    let channel = robust_channel_estimate(&obs.h_tilde, &noise, &power, &delay, &doppler)?;

    // Precoder selection works on the filter output at received scale, sqrt(P) H.
    let unit = channel.matrices();
    let amplitude = power.value.sqrt();
    let received: Vec<CMat> = unit.iter().map(|h| h.scale(amplitude)).collect();
    let c_s = whitened_spatial_covariance(&received, &noise.covariance)?;
    let codebooks = (1..=cfg.n_rx.min(cfg.n_tx))
        .map(|r| build_dft_codebook(cfg.n_tx, r))
        .collect::<Result<Vec<_>>>()?;
    let report = select_rank(&c_s, &codebooks)?;
    let g = spectral_efficiency(&unit, &loaded_noise_covariance(&noise.covariance), power.value, &report.precoder)?;

    Ok(SlotEstimates { noise, power, delay, doppler, channel, report, spectral_efficiency: g })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn mean_matrix(ms: &[CMat]) -> CMat {
    let mut acc = CMat::zeros(ms[0].nrows(), ms[0].ncols());
    for m in ms {
        acc += m;
    }
    acc.unscale(ms.len() as f64)
}

impl SlotEstimates {
    /// Assembles the feature record; per-antenna quantities are averaged over receive antennas.
    pub fn to_record(&self, cfg: &SimConfig, slot_index: usize) -> FeatureRecord {
        FeatureRecord {
            channel_type: cfg.channel_type,
            n_subcarriers: cfg.n_subcarriers() as u32,
            noise_covariance: ComplexMatrix::from_cmat(&self.noise.covariance),
            freq_correlation: ComplexMatrix::from_cmat(&mean_matrix(&self.delay.freq_correlation)),
            time_covariance: ComplexMatrix::from_cmat(&mean_matrix(&self.doppler.time_covariance)),
            time_correlation: ComplexMatrix::from_cmat(&mean_matrix(&self.doppler.time_correlation)),
            delay_center: mean(&self.delay.mu),
            delay_length: mean(&self.delay.len),
            doppler_width: mean(&self.doppler.width),
            precoder: ComplexMatrix::from_cmat(&self.report.precoder),
            rank: self.report.rank as u8,
            spectral_efficiency: self.spectral_efficiency,
            slot_index: slot_index as u16,
            config_id: cfg.config_id(),
        }
    }

    /// Mean squared error of the raw (`h/sqrt(P)`) and denoised estimates against the true channel.
    ///
    /// `truth` is indexed like the observation, `[j, m, l, i]`.
    pub fn denoising_errors(&self, obs: &PilotObservation, truth: &Array4<Complex64>) -> (f64, f64) {
        let amplitude = self.power.value.sqrt();
        let (n_tx, b, n_sym, n_rx) = truth.dim();
        let (mut raw, mut robust) = (0.0, 0.0);
        for j in 0..n_tx {
            for m in 0..b {
                for l in 0..n_sym {
                    for i in 0..n_rx {
                        let h = truth[[j, m, l, i]];
                        raw += (obs.h_tilde[[j, m, l, i]] / amplitude - h).norm_sqr();
                        robust += (self.channel.channel[[m, l, i, j]] - h).norm_sqr();
                    }
                }
            }
        }
        let n = truth.len() as f64;
        (raw / n, robust / n)
    }
}

/// Estimates one slot and returns its feature record.
pub fn run_pipeline(obs: &PilotObservation, settings: &PipelineSettings) -> Result<FeatureRecord> {
    Ok(estimate_slot(obs, settings)?.to_record(&obs.config, obs.slot_index))
}

/// Reference values for one slot.
///
/// `mu`, `len` and `w` come from running the delay and Doppler procedures on the
/// noiseless pilots, with the true per-antenna noise variance as the detection
/// threshold and no noise subtraction in the time covariance. The `*_star`
/// fields are the parameters the channel was drawn with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenieValues {
    pub mu_star: f64,
    pub len_star: f64,
    pub w_star: f64,
    pub mu: Vec<f64>,
    pub len: Vec<f64>,
    pub w: Vec<f64>,
    pub bin_seconds: f64,
}

impl GenieValues {
    pub fn mean_mu(&self) -> f64 {
        mean(&self.mu)
    }
    pub fn mean_len(&self) -> f64 {
        mean(&self.len)
    }
    pub fn mean_w(&self) -> f64 {
        mean(&self.w)
    }
}

pub fn genie_values(
    cfg: &SimConfig,
    chan: &ChannelRealization,
    slot: usize,
    settings: &PipelineSettings,
) -> Result<GenieValues> {
    let clean = transmit_pilots_with(cfg, chan, slot, &LinkBudget::noiseless(cfg), 0)?;
    let truth_noise = NoiseEstimate::from_covariance(cfg.noise_covariance());
    let delay = estimate_delay_profile(&clean.h_tilde, &truth_noise, cfg, &settings.delay)?;
    let t = cfg.symbol_duration();
    let w = time_covariance(&clean.h_tilde, &vec![0.0; cfg.n_rx])
        .iter()
        .map(|c| fit_doppler_width(&correlation_from_covariance(c), &settings.doppler_grid, &cfg.pilot_symbols, t))
        .collect();
    Ok(GenieValues {
        mu_star: chan.genie_mu,
        len_star: chan.genie_len,
        w_star: chan.genie_w,
        mu: delay.mu,
        len: delay.len,
        w,
        bin_seconds: delay.bin_seconds,
    })
}
