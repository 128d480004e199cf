use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// How a feature becomes tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Scalar,
    Vector,
    Matrix,
    Categorical,
}

impl FeatureKind {
    pub fn code(self) -> u8 {
        match self {
            FeatureKind::Scalar => 0,
            FeatureKind::Vector => 1,
            FeatureKind::Matrix => 2,
            FeatureKind::Categorical => 3,
        }
    }
}

/// The per-slot features, in token order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureId {
    ChannelType = 0,
    K = 1,
    NoiseCovariance = 2,
    FreqCorrelation = 3,
    TimeCovariance = 4,
    TimeCorrelation = 5,
    DelayCenter = 6,
    DelayLength = 7,
    DopplerWidth = 8,
    Precoder = 9,
    Rank = 10,
    SpectralEfficiency = 11,
}

impl FeatureId {
    pub const ALL: [FeatureId; 12] = [
        FeatureId::ChannelType,
        FeatureId::K,
        FeatureId::NoiseCovariance,
        FeatureId::FreqCorrelation,
        FeatureId::TimeCovariance,
        FeatureId::TimeCorrelation,
        FeatureId::DelayCenter,
        FeatureId::DelayLength,
        FeatureId::DopplerWidth,
        FeatureId::Precoder,
        FeatureId::Rank,
        FeatureId::SpectralEfficiency,
    ];

    /// The features the model learns to predict.
    pub const TARGETS: [FeatureId; 5] = [
        FeatureId::DelayCenter,
        FeatureId::DelayLength,
        FeatureId::DopplerWidth,
        FeatureId::Precoder,
        FeatureId::Rank,
    ];

    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn from_index(i: u8) -> Option<Self> {
        Self::ALL.get(i as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureId::ChannelType => "channel_type",
            FeatureId::K => "K",
            FeatureId::NoiseCovariance => "C_n",
            FeatureId::FreqCorrelation => "R_f",
            FeatureId::TimeCovariance => "C_time",
            FeatureId::TimeCorrelation => "R_time",
            FeatureId::DelayCenter => "mu_hat",
            FeatureId::DelayLength => "len_hat",
            FeatureId::DopplerWidth => "w_hat",
            FeatureId::Precoder => "W_hat",
            FeatureId::Rank => "R_hat",
            FeatureId::SpectralEfficiency => "G_hat",
        }
    }

    /// Parses a feature name; a few spellings are accepted for convenience.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        Self::ALL
            .iter()
            .copied()
            .find(|f| f.name().eq_ignore_ascii_case(t))
            .or(match t.to_ascii_lowercase().as_str() {
                "mu" | "delay_center" => Some(FeatureId::DelayCenter),
                "len" | "ell_hat" | "delay_length" => Some(FeatureId::DelayLength),
                "w" | "doppler_width" => Some(FeatureId::DopplerWidth),
                "precoder" => Some(FeatureId::Precoder),
                "rank" => Some(FeatureId::Rank),
                _ => None,
            })
            .ok_or_else(|| Error::InvalidArgument(format!("unknown feature {s}")))
    }

    pub fn is_target(self) -> bool {
        Self::TARGETS.contains(&self)
    }
}

/// Smallest square power-of-two patch `p >= 8` with at most 64 patches.
pub fn choose_patch_size(d1: usize, d2: usize) -> (usize, usize) {
    let mut p = 8;
    while d1.div_ceil(p) * d2.div_ceil(p) > MAX_TOKENS_PER_MATRIX {
        p *= 2;
    }
    (p, p)
}

pub const MAX_TOKENS_PER_MATRIX: usize = 64;
pub const MIN_PATCH: usize = 8;

/// Log-spaced Fourier wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierGrid {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Encoding length `D_f` (two entries per wavelength).
    pub dim: usize,
}

impl Default for FourierGrid {
    fn default() -> Self {
        FourierGrid { lambda_min: 1e-3, lambda_max: 1e3, dim: 64 }
    }
}

impl FourierGrid {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || !self.dim.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!("Fourier dimension {} must be even and positive", self.dim)));
        }
        if !(self.lambda_min > 0.0 && self.lambda_max >= self.lambda_min) {
            return Err(Error::InvalidArgument("Fourier wavelengths must satisfy 0 < min <= max".into()));
        }
        Ok(())
    }

    pub fn lambdas(&self) -> Vec<f64> {
        let n = self.dim / 2;
        if n == 1 {
            return vec![self.lambda_min];
        }
        let ratio = (self.lambda_max / self.lambda_min).ln();
        (0..n)
            .map(|i| self.lambda_min * (ratio * i as f64 / (n - 1) as f64).exp())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub id: FeatureId,
    pub name: String,
    pub kind: FeatureKind,
    /// Pad targets; `(1, 1)` for scalars and categoricals.
    pub max_dims: (usize, usize),
    /// Patch size; `(0, 0)` for non-matrix features.
    pub patch: (usize, usize),
    pub n_categories: usize,
    pub target: bool,
}

impl FeatureSpec {
    /// Patch grid `(rows, cols)`; `(1, 1)` for single-token features.
    pub fn patch_grid(&self) -> (usize, usize) {
        match self.kind {
            FeatureKind::Matrix => (self.max_dims.0.div_ceil(self.patch.0), self.max_dims.1.div_ceil(self.patch.1)),
            _ => (1, 1),
        }
    }

    pub fn n_tokens(&self) -> usize {
        let (r, c) = self.patch_grid();
        r * c
    }

    /// Padded matrix dimensions.
    pub fn padded_dims(&self) -> (usize, usize) {
        let (r, c) = self.patch_grid();
        (r * self.patch.0, c * self.patch.1)
    }
}

/// Maximum dimensions the schema pads to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PadTargets {
    pub n_rx: usize,
    pub n_tx: usize,
    pub rank: usize,
    pub n_groups: usize,
    pub n_pilot_symbols: usize,
}

impl Default for PadTargets {
    fn default() -> Self {
        PadTargets { n_rx: 4, n_tx: 8, rank: 4, n_groups: 100, n_pilot_symbols: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub version: u32,
    pub n_slots: usize,
    pub pad: PadTargets,
    pub fourier: FourierGrid,
    pub features: Vec<FeatureSpec>,
}

impl Default for FeatureSchema {
    fn default() -> Self {
        FeatureSchema::new(PadTargets::default(), FourierGrid::default()).expect("default schema is valid")
    }
}

impl FeatureSchema {
    pub fn new(pad: PadTargets, fourier: FourierGrid) -> Result<Self> {
        fourier.validate()?;
        let dims = [pad.n_rx, pad.n_tx, pad.rank, pad.n_groups, pad.n_pilot_symbols];
        if dims.contains(&0) {
            return Err(Error::InvalidArgument("pad targets must be positive".into()));
        }
        let features = FeatureId::ALL
            .iter()
            .map(|&id| {
                let (kind, max_dims, n_categories) = match id {
                    FeatureId::ChannelType => (FeatureKind::Categorical, (1, 1), 3),
                    FeatureId::NoiseCovariance => (FeatureKind::Matrix, (pad.n_rx, pad.n_rx), 0),
                    FeatureId::FreqCorrelation => (FeatureKind::Matrix, (pad.n_groups, pad.n_groups), 0),
                    FeatureId::TimeCovariance | FeatureId::TimeCorrelation => {
                        (FeatureKind::Matrix, (pad.n_pilot_symbols, pad.n_pilot_symbols), 0)
                    }
                    FeatureId::Precoder => (FeatureKind::Matrix, (pad.n_tx, pad.rank), 0),
                    _ => (FeatureKind::Scalar, (1, 1), 0),
                };
                let patch = match kind {
                    FeatureKind::Matrix => choose_patch_size(max_dims.0, max_dims.1),
                    _ => (0, 0),
                };
                FeatureSpec {
                    id,
                    name: id.name().to_string(),
                    kind,
                    max_dims,
                    patch,
                    n_categories,
                    target: id.is_target(),
                }
            })
            .collect();
        Ok(FeatureSchema { version: 1, n_slots: crate::dataset::SEQUENCE_LEN, pad, fourier, features })
    }

    pub fn feature(&self, id: FeatureId) -> &FeatureSpec {
        &self.features[id as usize]
    }

    /// Payload length of every token of a feature.
    pub fn payload_len(&self, id: FeatureId) -> usize {
        let f = self.feature(id);
        match f.kind {
            FeatureKind::Matrix => 2 * f.patch.0 * f.patch.1,
            FeatureKind::Scalar => self.fourier.dim,
            FeatureKind::Vector => self.fourier.dim * f.max_dims.0,
            FeatureKind::Categorical => f.n_categories,
        }
    }

    pub fn tokens_per_slot(&self) -> usize {
        self.features.iter().map(FeatureSpec::n_tokens).sum()
    }

    pub fn tokens_per_sequence(&self) -> usize {
        self.n_slots * self.tokens_per_slot()
    }

    pub fn target_features(&self) -> Vec<FeatureId> {
        self.features.iter().filter(|f| f.target).map(|f| f.id).collect()
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("schema serialises")))
    }
}
