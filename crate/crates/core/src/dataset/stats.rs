use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::record::FeatureRecord;
use crate::{Error, Result};

/// Lower bound applied to every standard deviation.
pub const STD_FLOOR: f64 = 1e-9;

/// Names of the scalar features that receive global z-scoring.
pub const SCALAR_FEATURES: [&str; 6] = ["K", "mu_hat", "len_hat", "w_hat", "R_hat", "G_hat"];

/// Value of a named scalar feature.
pub fn scalar_value(rec: &FeatureRecord, name: &str) -> Option<f64> {
    Some(match name {
        "K" => rec.n_subcarriers as f64,
        "mu_hat" => rec.delay_center,
        "len_hat" => rec.delay_length,
        "w_hat" => rec.doppler_width,
        "R_hat" => rec.rank as f64,
        "G_hat" => rec.spectral_efficiency,
        _ => return None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub mean: f64,
    pub std: f64,
}

impl FeatureStats {
    pub fn normalize(&self, x: f64) -> f64 {
        (x - self.mean) / self.std
    }

    pub fn denormalize(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

/// Training-split mean and population standard deviation per scalar feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub convention: String,
    pub std_floor: f64,
    pub n_records: usize,
    pub features: BTreeMap<String, FeatureStats>,
}

impl NormStats {
    pub fn get(&self, feature: &str) -> Result<FeatureStats> {
        self.features
            .get(feature)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("no statistics for feature {feature}")))
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("stats serialise");
        hex::encode(Sha256::digest(&json))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_vec_pretty(self).map_err(|e| Error::json(path, e))?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_slice(&bytes).map_err(|e| Error::json(path, e))
    }
}

/// Population mean and standard deviation, the latter floored at [`STD_FLOOR`].
pub fn mean_std(values: &[f64]) -> Result<FeatureStats> {
    if values.is_empty() {
        return Err(Error::Empty("statistics input"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Ok(FeatureStats { mean, std: var.sqrt().max(STD_FLOOR) })
}

pub fn compute_norm_stats<'a>(records: impl IntoIterator<Item = &'a FeatureRecord>) -> Result<NormStats> {
    let records: Vec<&FeatureRecord> = records.into_iter().collect();
    if records.is_empty() {
        return Err(Error::Empty("training split"));
    }
    let mut features = BTreeMap::new();
    for name in SCALAR_FEATURES {
        let values: Vec<f64> = records
            .iter()
            .map(|r| scalar_value(r, name).expect("known scalar feature"))
            .collect();
        features.insert(name.to_string(), mean_std(&values)?);
    }
    Ok(NormStats {
        convention: "population".into(),
        std_floor: STD_FLOOR,
        n_records: records.len(),
        features,
    })
}
