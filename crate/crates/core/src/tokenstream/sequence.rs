use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fourier::{fourier_decode, fourier_encode};
use super::mask::MaskMode;
use super::normalize::{normalize_sequence, NormalizedRecord, SequenceScales};
use super::patch::{depatchify, pad_matrix, patchify};
use super::schema::{FeatureId, FeatureKind, FeatureSchema};
use crate::dataset::{NormStats, SequenceRecord};
use crate::linalg::CMat;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Token {
    pub feature: FeatureId,
    pub slot: u8,
    pub patch_row: u16,
    pub patch_col: u16,
    pub kind: FeatureKind,
    pub payload: Vec<f32>,
    /// `true` where the payload element is padding.
    pub pad_mask: Vec<bool>,
    pub masked: bool,
    /// Original payload of a masked token.
    pub target_payload: Option<Vec<f32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub sequence_id: u64,
    pub run_id: u64,
    pub start_slot: u16,
    pub scales: SequenceScales,
    pub mode: Option<MaskMode>,
    pub mask_seed: u64,
    /// Slot-major, schema feature order, raster patch order.
    pub tokens: Vec<Token>,
}

impl TokenSequence {
    pub fn tokens_of(&self, feature: FeatureId, slot: usize) -> impl Iterator<Item = &Token> {
        self.tokens
            .iter()
            .filter(move |t| t.feature == feature && t.slot as usize == slot)
    }

    /// Distinct masked `(slot, feature)` pairs, in token order.
    pub fn masked_pairs(&self) -> Vec<(usize, FeatureId)> {
        let mut out: Vec<(usize, FeatureId)> = Vec::new();
        for t in self.tokens.iter().filter(|t| t.masked) {
            let key = (t.slot as usize, t.feature);
            if out.last() != Some(&key) {
                out.push(key);
            }
        }
        out
    }
}

fn to_f32(v: &[f64]) -> Vec<f32> {
    v.iter().map(|&x| x as f32).collect()
}

fn matrix_tokens(
    schema: &FeatureSchema,
    feature: FeatureId,
    slot: u8,
    m: &CMat,
    out: &mut Vec<Token>,
) -> Result<()> {
    let spec = schema.feature(feature);
    if m.nrows() > spec.max_dims.0 || m.ncols() > spec.max_dims.1 {
        return Err(Error::Shape(format!(
            "{} is {}x{}, above the schema's {}x{}",
            spec.name,
            m.nrows(),
            m.ncols(),
            spec.max_dims.0,
            spec.max_dims.1
        )));
    }
    let (rows, cols) = spec.padded_dims();
    let padded = pad_matrix(m, rows, cols)?;
    for p in patchify(&padded, m.shape(), spec.patch.0, spec.patch.1)? {
        out.push(Token {
            feature,
            slot,
            patch_row: p.row as u16,
            patch_col: p.col as u16,
            kind: FeatureKind::Matrix,
            payload: to_f32(&p.payload),
            pad_mask: p.pad_mask,
            masked: false,
            target_payload: None,
        });
    }
    Ok(())
}

fn single_token(feature: FeatureId, slot: u8, kind: FeatureKind, payload: Vec<f64>) -> Token {
    let n = payload.len();
    Token {
        feature,
        slot,
        patch_row: 0,
        patch_col: 0,
        kind,
        payload: to_f32(&payload),
        pad_mask: vec![false; n],
        masked: false,
        target_payload: None,
    }
}

/// Tokens of one normalised slot in schema order.
pub fn slot_tokens(schema: &FeatureSchema, slot: u8, rec: &NormalizedRecord) -> Result<Vec<Token>> {
    let mut out = Vec::with_capacity(schema.tokens_per_slot());
    for spec in &schema.features {
        let f = spec.id;
        match f {
            FeatureId::ChannelType => {
                let mut onehot = vec![0.0; spec.n_categories];
                let c = rec.channel_type.index() as usize;
                if c >= onehot.len() {
                    return Err(Error::Shape(format!("category {c} outside {}", spec.n_categories)));
                }
                onehot[c] = 1.0;
                out.push(single_token(f, slot, FeatureKind::Categorical, onehot));
            }
            FeatureId::NoiseCovariance => matrix_tokens(schema, f, slot, &rec.noise_covariance, &mut out)?,
            FeatureId::FreqCorrelation => matrix_tokens(schema, f, slot, &rec.freq_correlation, &mut out)?,
            FeatureId::TimeCovariance => matrix_tokens(schema, f, slot, &rec.time_covariance, &mut out)?,
            FeatureId::TimeCorrelation => matrix_tokens(schema, f, slot, &rec.time_correlation, &mut out)?,
            FeatureId::Precoder => matrix_tokens(schema, f, slot, &rec.precoder, &mut out)?,
            _ => {
                let x = scalar_of(rec, f);
                out.push(single_token(f, slot, FeatureKind::Scalar, fourier_encode(x, &schema.fourier)?));
            }
        }
    }
    Ok(out)
}

fn scalar_of(rec: &NormalizedRecord, f: FeatureId) -> f64 {
    match f {
        FeatureId::K => rec.k,
        FeatureId::DelayCenter => rec.delay_center,
        FeatureId::DelayLength => rec.delay_length,
        FeatureId::DopplerWidth => rec.doppler_width,
        FeatureId::Rank => rec.rank,
        FeatureId::SpectralEfficiency => rec.spectral_efficiency,
        _ => unreachable!("not a scalar feature"),
    }
}

/// Normalises and tokenises one sequence (unmasked).
pub fn build_token_sequence(
    seq: &SequenceRecord,
    sequence_id: u64,
    schema: &FeatureSchema,
    stats: &NormStats,
) -> Result<TokenSequence> {
    let (records, scales) = normalize_sequence(seq, stats)?;
    if records.len() != schema.n_slots {
        return Err(Error::Shape(format!("{} slots, schema expects {}", records.len(), schema.n_slots)));
    }
    let mut tokens = Vec::with_capacity(schema.tokens_per_sequence());
    for (slot, rec) in records.iter().enumerate() {
        tokens.extend(slot_tokens(schema, slot as u8, rec)?);
    }
    debug_assert_eq!(tokens.len(), schema.tokens_per_sequence());
    Ok(TokenSequence {
        sequence_id,
        run_id: seq.run_id,
        start_slot: seq.start_slot,
        scales,
        mode: None,
        mask_seed: 0,
        tokens,
    })
}

/// Tokenises many sequences in parallel; `ids[i]` is the id of `seqs[i]`.
pub fn build_token_sequences(
    seqs: &[&SequenceRecord],
    ids: &[u64],
    schema: &FeatureSchema,
    stats: &NormStats,
) -> Result<Vec<TokenSequence>> {
    if seqs.len() != ids.len() {
        return Err(Error::Shape("sequence and id counts differ".into()));
    }
    seqs.par_iter()
        .zip(ids.par_iter())
        .map(|(s, &id)| build_token_sequence(s, id, schema, stats))
        .collect()
}

/// A feature value recovered from its tokens.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureValue {
    Category(usize),
    Scalar(f64),
    Matrix(CMat),
}

/// Decodes one feature of one slot from token payloads (targets for masked tokens).
///
/// Matrix dimensions are recovered from the pad masks.
pub fn decode_feature(seq: &TokenSequence, schema: &FeatureSchema, feature: FeatureId, slot: usize) -> Result<FeatureValue> {
    let tokens: Vec<&Token> = seq.tokens_of(feature, slot).collect();
    if tokens.is_empty() {
        return Err(Error::Malformed(format!("no {} tokens in slot {slot}", feature.name())));
    }
    let payload = |t: &Token| -> Vec<f64> {
        t.target_payload.as_ref().unwrap_or(&t.payload).iter().map(|&x| x as f64).collect()
    };
    let spec = schema.feature(feature);
    match spec.kind {
        FeatureKind::Categorical => {
            let p = payload(tokens[0]);
            let best = p
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc });
            Ok(FeatureValue::Category(best.0))
        }
        FeatureKind::Scalar => Ok(FeatureValue::Scalar(fourier_decode(&payload(tokens[0]), &schema.fourier)?)),
        FeatureKind::Vector => Err(Error::Malformed(format!("{} is a vector feature; none are decodable", spec.name))),
        FeatureKind::Matrix => {
            let grid = spec.patch_grid();
            let (p1, p2) = spec.patch;
            let n = p1 * p2;
            // Valid extent: one past the last unpadded row/column anywhere in the grid.
            let (mut rows, mut cols) = (0, 0);
            for t in &tokens {
                for k in 0..n {
                    if !t.pad_mask[k] {
                        rows = rows.max(t.patch_row as usize * p1 + k / p2 + 1);
                        cols = cols.max(t.patch_col as usize * p2 + k % p2 + 1);
                    }
                }
            }
            let payloads: Vec<Vec<f64>> = tokens.iter().map(|t| payload(t)).collect();
            let refs: Vec<&[f64]> = payloads.iter().map(Vec::as_slice).collect();
            Ok(FeatureValue::Matrix(depatchify(&refs, grid, p1, p2, rows, cols)?))
        }
    }
}
