use serde::{Deserialize, Serialize};

use crate::chansim::ChannelType;
use crate::dataset::{ComplexMatrix, FeatureRecord, NormStats, SequenceRecord};
use crate::linalg::CMat;
use crate::{Error, Result};

/// Smallest covariance scale; all-zero covariances are left unscaled.
const SCALE_FLOOR: f64 = 1e-30;

/// Per-sequence divisors of the covariance features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceScales {
    pub noise_covariance: f64,
    pub time_covariance: f64,
}

fn mean_abs_diagonal<'a>(ms: impl Iterator<Item = &'a ComplexMatrix>) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for m in ms {
        for i in 0..m.rows().min(m.cols()) {
            sum += m.get(i, i).norm() as f64;
            n += 1;
        }
    }
    let s = if n == 0 { 0.0 } else { sum / n as f64 };
    if s > SCALE_FLOOR {
        s
    } else {
        1.0
    }
}

impl SequenceScales {
    /// Mean diagonal magnitude of each covariance across the sequence.
    pub fn of(seq: &SequenceRecord) -> Self {
        SequenceScales {
            noise_covariance: mean_abs_diagonal(seq.records().iter().map(|r| &r.noise_covariance)),
            time_covariance: mean_abs_diagonal(seq.records().iter().map(|r| &r.time_covariance)),
        }
    }
}

/// A record with scalars z-scored and covariances rescaled, held in double precision.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedRecord {
    pub channel_type: ChannelType,
    pub k: f64,
    pub noise_covariance: CMat,
    pub freq_correlation: CMat,
    pub time_covariance: CMat,
    pub time_correlation: CMat,
    pub delay_center: f64,
    pub delay_length: f64,
    pub doppler_width: f64,
    pub precoder: CMat,
    pub rank: f64,
    pub spectral_efficiency: f64,
    pub slot_index: u16,
    pub config_id: u64,
}

pub fn normalize_record(rec: &FeatureRecord, stats: &NormStats, scales: &SequenceScales) -> Result<NormalizedRecord> {
    let z = |name: &str, x: f64| -> Result<f64> { Ok(stats.get(name)?.normalize(x)) };
    Ok(NormalizedRecord {
        channel_type: rec.channel_type,
        k: z("K", rec.n_subcarriers as f64)?,
        noise_covariance: rec.noise_covariance.to_cmat().unscale(scales.noise_covariance),
        freq_correlation: rec.freq_correlation.to_cmat(),
        time_covariance: rec.time_covariance.to_cmat().unscale(scales.time_covariance),
        time_correlation: rec.time_correlation.to_cmat(),
        delay_center: z("mu_hat", rec.delay_center)?,
        delay_length: z("len_hat", rec.delay_length)?,
        doppler_width: z("w_hat", rec.doppler_width)?,
        precoder: rec.precoder.to_cmat(),
        rank: z("R_hat", rec.rank as f64)?,
        spectral_efficiency: z("G_hat", rec.spectral_efficiency)?,
        slot_index: rec.slot_index,
        config_id: rec.config_id,
    })
}

/// Inverse of [`normalize_record`]; integer features are rounded back.
pub fn denormalize_record(norm: &NormalizedRecord, stats: &NormStats, scales: &SequenceScales) -> Result<FeatureRecord> {
    let x = |name: &str, z: f64| -> Result<f64> { Ok(stats.get(name)?.denormalize(z)) };
    let rank = x("R_hat", norm.rank)?.round();
    let k = x("K", norm.k)?.round();
    if !(1.0..=255.0).contains(&rank) || !(1.0..=u32::MAX as f64).contains(&k) {
        return Err(Error::Malformed(format!("denormalised rank {rank} or K {k} out of range")));
    }
    Ok(FeatureRecord {
        channel_type: norm.channel_type,
        n_subcarriers: k as u32,
        noise_covariance: ComplexMatrix::from_cmat(&norm.noise_covariance.scale(scales.noise_covariance)),
        freq_correlation: ComplexMatrix::from_cmat(&norm.freq_correlation),
        time_covariance: ComplexMatrix::from_cmat(&norm.time_covariance.scale(scales.time_covariance)),
        time_correlation: ComplexMatrix::from_cmat(&norm.time_correlation),
        delay_center: x("mu_hat", norm.delay_center)?,
        delay_length: x("len_hat", norm.delay_length)?,
        doppler_width: x("w_hat", norm.doppler_width)?,
        precoder: ComplexMatrix::from_cmat(&norm.precoder),
        rank: rank as u8,
        spectral_efficiency: x("G_hat", norm.spectral_efficiency)?,
        slot_index: norm.slot_index,
        config_id: norm.config_id,
    })
}

/// Normalises all five records of a sequence with the sequence's covariance scales.
pub fn normalize_sequence(seq: &SequenceRecord, stats: &NormStats) -> Result<(Vec<NormalizedRecord>, SequenceScales)> {
    let scales = SequenceScales::of(seq);
    let recs = seq
        .records()
        .iter()
        .map(|r| normalize_record(r, stats, &scales))
        .collect::<Result<Vec<_>>>()?;
    Ok((recs, scales))
}

/// Checks that `stats` covers every scalar feature with a usable deviation.
pub fn check_stats(stats: &NormStats) -> Result<()> {
    for name in crate::dataset::SCALAR_FEATURES {
        let s = stats.get(name)?;
        if !(s.std > 0.0 && s.std.is_finite() && s.mean.is_finite()) {
            return Err(Error::Malformed(format!("unusable statistics for {name}: {s:?}")));
        }
    }
    Ok(())
}
