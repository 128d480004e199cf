use rand::Rng;
use serde::{Deserialize, Serialize};

use super::schema::FeatureId;
use super::sequence::TokenSequence;
use crate::seed::{self, stream};
use crate::{Error, Result};

/// Which feature-slot pairs are hidden from the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "feature", rename_all = "snake_case")]
pub enum MaskMode {
    /// One uniformly chosen target feature per slot.
    Pretrain,
    /// The given feature at one uniformly chosen slot.
    Interpolation(FeatureId),
    /// The given feature at the last slot.
    Forecast(FeatureId),
}

impl MaskMode {
    pub fn name(self) -> &'static str {
        match self {
            MaskMode::Pretrain => "pretrain",
            MaskMode::Interpolation(_) => "interpolation",
            MaskMode::Forecast(_) => "forecast",
        }
    }

    pub fn feature(self) -> Option<FeatureId> {
        match self {
            MaskMode::Pretrain => None,
            MaskMode::Interpolation(f) | MaskMode::Forecast(f) => Some(f),
        }
    }
}

fn mask_pair(seq: &mut TokenSequence, slot: usize, feature: FeatureId) {
    for t in seq
        .tokens
        .iter_mut()
        .filter(|t| t.feature == feature && t.slot as usize == slot)
    {
        let zeros = vec![0.0; t.payload.len()];
        t.target_payload = Some(std::mem::replace(&mut t.payload, zeros));
        t.masked = true;
    }
}

/// Masks `seq` in place. Every token of a chosen feature in a chosen slot is
/// masked jointly; randomness comes from `(mask_seed, sequence_id)` only.
pub fn apply_mask_plan(seq: &mut TokenSequence, mode: MaskMode, mask_seed: u64, n_slots: usize) -> Result<()> {
    if let Some(f) = mode.feature() {
        if !f.is_target() {
            return Err(Error::InvalidArgument(format!("{} is not a target feature", f.name())));
        }
    }
    if seq.tokens.iter().any(|t| t.masked) {
        return Err(Error::InvalidArgument("sequence is already masked".into()));
    }
    if n_slots == 0 {
        return Err(Error::InvalidArgument("no slots to mask".into()));
    }
    let mut rng = seed::rng(seed::derive(mask_seed, &[stream::MASK, seq.sequence_id]));
    match mode {
        MaskMode::Pretrain => {
            for slot in 0..n_slots {
                let f = FeatureId::TARGETS[rng.random_range(0..FeatureId::TARGETS.len())];
                mask_pair(seq, slot, f);
            }
        }
        MaskMode::Interpolation(f) => {
            let slot = rng.random_range(0..n_slots);
            mask_pair(seq, slot, f);
        }
        MaskMode::Forecast(f) => mask_pair(seq, n_slots - 1, f),
    }
    seq.mode = Some(mode);
    seq.mask_seed = mask_seed;
    Ok(())
}
