//! Classical CSI estimators operating on one slot of pilot observations.

mod capacity;
mod delay;
mod denoise;
mod doppler;
mod noise;
mod pipeline;
mod power;
mod precoder;

pub use capacity::spectral_efficiency;
pub use delay::{
    delay_profile, estimate_delay_profile, min_circular_cover, robust_frequency_correlation,
    DelayProfileEstimate, DelaySettings, DelayTaper, FftSizeRule,
};
pub use denoise::{
    dense_mmse_apply, robust_channel_estimate, ChannelEstimate, KroneckerMmse,
};
pub use doppler::{
    correlation_from_covariance, doppler_grid, estimate_doppler, fit_doppler_width,
    robust_time_correlation, time_covariance, DopplerEstimate,
};
pub use noise::{estimate_noise_covariance, NoiseEstimate};
pub use pipeline::{
    estimate_slot, genie_values, run_pipeline, GenieValues, PipelineSettings, SlotEstimates,
};
pub use power::{estimate_signal_power, PowerEstimate, POWER_FLOOR};
pub use precoder::{
    build_dft_codebook, loaded_noise_covariance, log_det_gain, select_precoder, select_rank, whitened_spatial_covariance,
    PrecoderReport, SCORE_TIE_TOLERANCE,
};
