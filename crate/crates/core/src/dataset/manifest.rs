use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::campaign::Campaign;
use super::genie::{read_genie, write_genie, GenieEntry};
use super::record::{SequenceRecord, SEQUENCE_LEN};
use super::shard::{read_shard, write_shard, SHARD_VERSION};
use super::split::{split_dataset, DatasetSplits};
use super::stats::{compute_norm_stats, NormStats};
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const NORM_STATS_FILE: &str = "norm_stats.json";
pub const GENIE_FILE: &str = "genie.csfd";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardEntry {
    pub file: String,
    pub sequences: usize,
    /// Global index of the shard's first sequence.
    pub first_sequence: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u16,
    pub master_seed: u64,
    pub n_configs: usize,
    pub snr_draws: usize,
    pub slots_per_run: usize,
    pub seq_len: usize,
    pub config_universe_hash: String,
    pub config_rejections: u64,
    pub total_sequences: usize,
    pub split_ratios: [u32; 3],
    pub counts: SplitCounts,
    pub splits: DatasetSplits,
    pub shards: Vec<ShardEntry>,
    pub norm_stats_file: String,
    pub norm_stats_digest: String,
    pub std_convention: String,
    pub genie_file: Option<String>,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        let shard_total: usize = self.shards.iter().map(|s| s.sequences).sum();
        if shard_total != self.total_sequences {
            return Err(Error::Malformed(format!(
                "shards hold {shard_total} sequences, manifest claims {}",
                self.total_sequences
            )));
        }
        let [t, v, s] = self.splits.counts();
        if (t, v, s) != (self.counts.train, self.counts.val, self.counts.test) || t + v + s != self.total_sequences {
            return Err(Error::Malformed("split counts disagree with the manifest".into()));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec_pretty(self).expect("manifest serialises")
    }

    /// SHA-256 of the manifest file bytes.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_bytes()))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let path = dir.as_ref().join(MANIFEST_FILE);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let m: DatasetManifest = serde_json::from_slice(&bytes).map_err(|e| Error::json(&path, e))?;
        m.validate()?;
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WriteSettings {
    /// Sequences per shard file.
    pub shard_size: usize,
    pub split_ratios: [u32; 3],
}

impl Default for WriteSettings {
    fn default() -> Self {
        WriteSettings { shard_size: 1024, split_ratios: [80, 10, 10] }
    }
}

fn shard_name(i: usize) -> String {
    format!("shard-{i:05}.csfd")
}

/// Writes shards, the genie sidecar, the training-split statistics and the manifest.
pub fn write_dataset(dir: impl AsRef<Path>, campaign: &Campaign, settings: &WriteSettings) -> Result<DatasetManifest> {
    let dir = dir.as_ref();
    if settings.shard_size == 0 {
        return Err(Error::InvalidArgument("shard size must be positive".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let sequences: Vec<&SequenceRecord> = campaign.sequences().collect();
    let cs = &campaign.settings;
    let splits = split_dataset(sequences.len(), settings.split_ratios, cs.master_seed)?;
    let stats = compute_norm_stats(splits.train.iter().flat_map(|&i| sequences[i].records().iter()))?;
    stats.save(dir.join(NORM_STATS_FILE))?;

    let mut shards = Vec::new();
    for (i, chunk) in sequences.chunks(settings.shard_size).enumerate() {
        let file = shard_name(i);
        let owned: Vec<SequenceRecord> = chunk.iter().map(|s| (*s).clone()).collect();
        write_shard(dir.join(&file), &owned)?;
        let bytes = fs::read(dir.join(&file)).map_err(|e| Error::io(dir.join(&file), e))?;
        shards.push(ShardEntry {
            file,
            sequences: chunk.len(),
            first_sequence: i * settings.shard_size,
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
    }

    let genie_file = if cs.keep_genie {
        let entries: Vec<GenieEntry> = campaign.genie().copied().collect();
        write_genie(dir.join(GENIE_FILE), &entries)?;
        Some(GENIE_FILE.to_string())
    } else {
        None
    };

    let [train, val, test] = splits.counts();
    let manifest = DatasetManifest {
        format_version: SHARD_VERSION,
        master_seed: cs.master_seed,
        n_configs: cs.n_configs,
        snr_draws: cs.snr_draws,
        slots_per_run: cs.slots_per_run,
        seq_len: SEQUENCE_LEN,
        config_universe_hash: cs.table.digest(),
        config_rejections: campaign.rejections,
        total_sequences: sequences.len(),
        split_ratios: settings.split_ratios,
        counts: SplitCounts { train, val, test },
        splits,
        shards,
        norm_stats_file: NORM_STATS_FILE.into(),
        norm_stats_digest: stats.digest(),
        std_convention: stats.convention.clone(),
        genie_file,
    };
    manifest.validate()?;
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, manifest.to_bytes()).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// A dataset directory loaded into memory.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub dir: PathBuf,
    pub manifest: DatasetManifest,
    pub sequences: Vec<SequenceRecord>,
}

impl Dataset {
    /// Reads the manifest and every shard, verifying shard hashes and counts.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        let manifest = DatasetManifest::load(&dir)?;
        if manifest.seq_len != SEQUENCE_LEN {
            return Err(Error::Malformed(format!("sequence length {}", manifest.seq_len)));
        }
        let mut sequences = Vec::with_capacity(manifest.total_sequences);
        for entry in &manifest.shards {
            let path = dir.join(&entry.file);
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            let found = hex::encode(Sha256::digest(&bytes));
            if found != entry.sha256 {
                return Err(Error::DigestMismatch { expected: entry.sha256.clone(), found });
            }
            let seqs = read_shard(&path)?;
            if seqs.len() != entry.sequences || sequences.len() != entry.first_sequence {
                return Err(Error::Malformed(format!("{} does not match the manifest", entry.file)));
            }
            sequences.extend(seqs);
        }
        Ok(Dataset { dir, manifest, sequences })
    }

    pub fn split(&self, name: &str) -> Result<Vec<&SequenceRecord>> {
        let idx = self
            .manifest
            .splits
            .get(name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown split {name}")))?;
        Ok(idx.iter().map(|&i| &self.sequences[i]).collect())
    }

    /// Loads the statistics file, checking it against the manifest digest.
    pub fn norm_stats(&self) -> Result<NormStats> {
        let stats = NormStats::load(self.dir.join(&self.manifest.norm_stats_file))?;
        let found = stats.digest();
        if found != self.manifest.norm_stats_digest {
            return Err(Error::DigestMismatch { expected: self.manifest.norm_stats_digest.clone(), found });
        }
        Ok(stats)
    }

    pub fn genie(&self) -> Result<Vec<GenieEntry>> {
        let file = self
            .manifest
            .genie_file
            .as_ref()
            .ok_or_else(|| Error::Malformed("dataset was generated without genie values".into()))?;
        read_genie(self.dir.join(file))
    }
}

/// Runs a campaign and writes it to `dir`.
pub fn generate_dataset(
    dir: impl AsRef<Path>,
    campaign: &super::CampaignSettings,
    settings: &WriteSettings,
) -> Result<DatasetManifest> {
    let c = super::run_campaign(campaign)?;
    write_dataset(dir, &c, settings)
}
