//! Seeded dataset campaigns, feature records and checksummed shards.
//!
//! A campaign samples configurations, runs each one several times with fresh
//! SNR draws and channels, passes every slot through the estimator pipeline
//! and slices the records into non-overlapping five-slot sequences. The result
//! is written as `CSFD` shards plus a JSON manifest, training-split
//! statistics and an optional `genie.csfd` sidecar of reference values.

mod campaign;
mod codec;
mod genie;
mod manifest;
mod record;
mod shard;
mod split;
mod stats;

pub use campaign::{run_campaign, run_config, simulate_run, Campaign, CampaignSettings, RunOutput};
pub use genie::{decode_genie, encode_genie, read_genie, write_genie, GenieEntry, GENIE_MAGIC, GENIE_VERSION};
pub use manifest::{
    generate_dataset, write_dataset, Dataset, DatasetManifest, ShardEntry, SplitCounts, WriteSettings,
    GENIE_FILE, MANIFEST_FILE, NORM_STATS_FILE,
};
pub use record::{ComplexMatrix, FeatureRecord, SequenceRecord, SEQUENCE_LEN};
pub use shard::{decode_shard, encode_shard, read_shard, write_shard, SHARD_MAGIC, SHARD_VERSION};
pub use split::{split_dataset, DatasetSplits};
pub use stats::{
    compute_norm_stats, mean_std, scalar_value, FeatureStats, NormStats, SCALAR_FEATURES, STD_FLOOR,
};
