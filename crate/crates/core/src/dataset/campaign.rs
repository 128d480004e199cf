use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::genie::GenieEntry;
use super::record::{SequenceRecord, SEQUENCE_LEN};
use crate::chansim::{generate_channel_with, transmit_pilots, ChannelModel, ConfigTable, SimConfig};
use crate::estimators::{estimate_slot, genie_values, PipelineSettings};
use crate::seed::{self, stream};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSettings {
    pub master_seed: u64,
    pub n_configs: usize,
    /// Runs per configuration, each with its own SNR draw and channel.
    pub snr_draws: usize,
    pub slots_per_run: usize,
    pub table: ConfigTable,
    pub model: ChannelModel,
    pub pipeline: PipelineSettings,
    /// Compute and keep the reference values for the genie sidecar.
    pub keep_genie: bool,
}

impl CampaignSettings {
    pub fn new(master_seed: u64, n_configs: usize) -> Self {
        CampaignSettings {
            master_seed,
            n_configs,
            snr_draws: 8,
            slots_per_run: 100,
            table: ConfigTable::default(),
            model: ChannelModel::default(),
            pipeline: PipelineSettings::default(),
            keep_genie: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_configs == 0 {
            return Err(Error::InvalidArgument("at least one configuration is required".into()));
        }
        if self.snr_draws == 0 {
            return Err(Error::InvalidArgument("at least one SNR draw per configuration is required".into()));
        }
        if self.slots_per_run < SEQUENCE_LEN {
            return Err(Error::InvalidArgument(format!(
                "runs need at least {SEQUENCE_LEN} slots, got {}",
                self.slots_per_run
            )));
        }
        if self.slots_per_run > u16::MAX as usize {
            return Err(Error::InvalidArgument("slot index does not fit 16 bits".into()));
        }
        Ok(())
    }

    pub fn n_runs(&self) -> usize {
        self.n_configs * self.snr_draws
    }

    /// Non-overlapping sequences per run; trailing slots that do not fill a sequence are dropped.
    pub fn sequences_per_run(&self) -> usize {
        self.slots_per_run / SEQUENCE_LEN
    }

    pub fn run_id(&self, config_index: usize, run_index: usize) -> u64 {
        (config_index * self.snr_draws + run_index) as u64
    }
}

/// One simulated run: a fresh channel and SNR for a sampled configuration.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub run_id: u64,
    pub config: SimConfig,
    pub sequences: Vec<SequenceRecord>,
    pub genie: Vec<GenieEntry>,
}

/// Configuration of run `(config_index, run_index)`: the sampled configuration
/// with the run's own SNR draw and seed.
pub fn run_config(settings: &CampaignSettings, base: &SimConfig, config_index: usize, run_index: usize) -> SimConfig {
    let run_seed = seed::derive(settings.master_seed, &[stream::RUN, config_index as u64, run_index as u64]);
    let (lo, hi) = settings.table.snr_range_db;
    let snr = seed::rng(seed::derive(run_seed, &[stream::SNR])).random_range(lo..=hi);
    let mut cfg = base.with_snr(snr);
    cfg.seed = run_seed;
    cfg
}

pub fn simulate_run(settings: &CampaignSettings, cfg: &SimConfig, run_id: u64) -> Result<RunOutput> {
    let chan = generate_channel_with(cfg, settings.slots_per_run, cfg.seed, settings.model, None)?;
    let n_used = settings.sequences_per_run() * SEQUENCE_LEN;
    let mut records = Vec::with_capacity(n_used);
    let mut genie = Vec::new();
    for slot in 0..n_used {
        let obs = transmit_pilots(cfg, &chan, slot, cfg.seed)?;
        let est = estimate_slot(&obs, &settings.pipeline)?;
        let record = est.to_record(cfg, slot);
        if settings.keep_genie {
            let g = genie_values(cfg, &chan, slot, &settings.pipeline)?;
            let (mse_raw, mse_robust) = est.denoising_errors(&obs, &chan.pilot_channel(cfg, slot)?);
            genie.push(GenieEntry {
                run_id,
                slot: slot as u16,
                snr_db: cfg.snr_db,
                bin_seconds: g.bin_seconds,
                mu_star: g.mu_star,
                len_star: g.len_star,
                w_star: g.w_star,
                mu_genie: g.mean_mu(),
                len_genie: g.mean_len(),
                w_genie: g.mean_w(),
                mu_hat: record.delay_center,
                len_hat: record.delay_length,
                w_hat: record.doppler_width,
                mse_raw,
                mse_robust,
            });
        }
        records.push(record);
    }
    let mut sequences = Vec::with_capacity(settings.sequences_per_run());
    let mut records = records.into_iter();
    for s in 0..settings.sequences_per_run() {
        let chunk: Vec<_> = records.by_ref().take(SEQUENCE_LEN).collect();
        sequences.push(SequenceRecord::new(run_id, (s * SEQUENCE_LEN) as u16, chunk)?);
    }
    Ok(RunOutput { run_id, config: cfg.clone(), sequences, genie })
}

#[derive(Debug, Clone)]
pub struct Campaign {
    pub settings: CampaignSettings,
    /// Sampled configuration per config index (with the sampled SNR, before per-run draws).
    pub configs: Vec<SimConfig>,
    pub rejections: u64,
    /// Runs ordered by run id.
    pub runs: Vec<RunOutput>,
}

impl Campaign {
    pub fn sequences(&self) -> impl Iterator<Item = &SequenceRecord> {
        self.runs.iter().flat_map(|r| r.sequences.iter())
    }

    pub fn n_sequences(&self) -> usize {
        self.runs.iter().map(|r| r.sequences.len()).sum()
    }

    pub fn genie(&self) -> impl Iterator<Item = &GenieEntry> {
        self.runs.iter().flat_map(|r| r.genie.iter())
    }
}

/// Simulates every run of the campaign; runs execute in parallel on the
/// current rayon pool and the output order is independent of scheduling.
pub fn run_campaign(settings: &CampaignSettings) -> Result<Campaign> {
    settings.validate()?;
    let mut configs = Vec::with_capacity(settings.n_configs);
    let mut rejections = 0u64;
    for index in 0..settings.n_configs {
        let (cfg, r) = settings.table.sample(settings.master_seed, index as u64)?;
        rejections += r as u64;
        configs.push(cfg);
    }
    let jobs: Vec<(usize, usize)> = (0..settings.n_configs)
        .flat_map(|c| (0..settings.snr_draws).map(move |r| (c, r)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(c, r)| {
            let cfg = run_config(settings, &configs[c], c, r);
            simulate_run(settings, &cfg, settings.run_id(c, r))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Campaign { settings: settings.clone(), configs, rejections, runs })
}
