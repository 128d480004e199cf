//! On-disk token export: `tokens.bin`, `masks.bin` and `index.json`.
//!
//! `tokens.bin` holds every token payload as little-endian `f32`, sequence by
//! sequence, followed by the target payloads of the masked tokens.
//! `masks.bin` holds one pad bit per payload element, zero-filled to a byte
//! boundary, then one mask bit per token; bits are packed LSB first. Offsets in
//! `index.json` count `f32` elements from the start of `tokens.bin`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mask::MaskMode;
use super::normalize::SequenceScales;
use super::schema::{FeatureId, FeatureKind, FeatureSchema};
use super::sequence::{Token, TokenSequence};
use crate::{Error, Result};

pub const TOKENS_FILE: &str = "tokens.bin";
pub const MASKS_FILE: &str = "masks.bin";
pub const INDEX_FILE: &str = "index.json";
pub const EXPORT_FORMAT: &str = "csi-forge-tokens";
pub const EXPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TokenColumns {
    pub feature_id: Vec<u8>,
    pub slot: Vec<u8>,
    pub patch_row: Vec<u16>,
    pub patch_col: Vec<u16>,
    /// 0 scalar, 1 vector, 2 matrix, 3 categorical.
    pub kind: Vec<u8>,
    pub payload_offset: Vec<u64>,
    pub payload_len: Vec<u32>,
    pub masked: Vec<bool>,
    /// Offset of the target payload, or -1 for unmasked tokens.
    pub target_offset: Vec<i64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SequenceColumns {
    pub sequence_id: Vec<u64>,
    pub run_id: Vec<u64>,
    pub start_slot: Vec<u16>,
    pub token_offset: Vec<u64>,
    pub token_count: Vec<u32>,
    pub noise_covariance_scale: Vec<f64>,
    pub time_covariance_scale: Vec<f64>,
}

/// Provenance carried into `index.json`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExportMeta {
    pub split: Option<String>,
    pub dataset_manifest_digest: Option<String>,
    pub norm_stats_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenIndex {
    pub format: String,
    pub version: u32,
    pub schema_digest: String,
    pub schema: FeatureSchema,
    pub mode: Option<MaskMode>,
    pub mask_seed: u64,
    pub meta: ExportMeta,
    pub n_sequences: usize,
    pub n_tokens: usize,
    pub n_payload_floats: u64,
    pub n_target_floats: u64,
    pub mask_bits_byte_offset: u64,
    pub tokens: TokenColumns,
    pub sequences: SequenceColumns,
}

fn pack_bits(bits: impl Iterator<Item = bool>, out: &mut Vec<u8>) {
    let mut byte = 0u8;
    let mut n = 0;
    for b in bits {
        if b {
            byte |= 1 << n;
        }
        n += 1;
        if n == 8 {
            out.push(byte);
            byte = 0;
            n = 0;
        }
    }
    if n > 0 {
        out.push(byte);
    }
}

fn bit(bytes: &[u8], i: usize) -> bool {
    bytes[i / 8] >> (i % 8) & 1 == 1
}

/// Writes the export. All sequences must share the schema, mode and mask seed.
pub fn write_export(dir: impl AsRef<Path>, schema: &FeatureSchema, seqs: &[TokenSequence], meta: ExportMeta) -> Result<TokenIndex> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (mode, mask_seed) = seqs.first().map(|s| (s.mode, s.mask_seed)).unwrap_or((None, 0));
    let per_seq = schema.tokens_per_sequence();
    for s in seqs {
        if s.mode != mode || s.mask_seed != mask_seed {
            return Err(Error::InvalidArgument("sequences were masked with different plans".into()));
        }
        if s.tokens.len() != per_seq {
            return Err(Error::Shape(format!("sequence {} has {} tokens, schema has {per_seq}", s.sequence_id, s.tokens.len())));
        }
    }

    let all: Vec<&Token> = seqs.iter().flat_map(|s| s.tokens.iter()).collect();
    let n_payload: u64 = all.iter().map(|t| t.payload.len() as u64).sum();
    let mut tokens = TokenColumns::default();
    let mut payload_bytes = Vec::with_capacity(4 * n_payload as usize);
    let mut target_bytes = Vec::new();
    let (mut offset, mut target_offset) = (0u64, n_payload);
    for t in &all {
        let expected = schema.payload_len(t.feature);
        if t.payload.len() != expected || t.pad_mask.len() != expected {
            return Err(Error::Shape(format!("{} token payload of {} values, expected {expected}", t.feature.name(), t.payload.len())));
        }
        tokens.feature_id.push(t.feature.index());
        tokens.slot.push(t.slot);
        tokens.patch_row.push(t.patch_row);
        tokens.patch_col.push(t.patch_col);
        tokens.kind.push(t.kind.code());
        tokens.payload_offset.push(offset);
        tokens.payload_len.push(expected as u32);
        tokens.masked.push(t.masked);
        for x in &t.payload {
            payload_bytes.extend_from_slice(&x.to_le_bytes());
        }
        offset += expected as u64;
        match (&t.target_payload, t.masked) {
            (Some(target), true) => {
                tokens.target_offset.push(target_offset as i64);
                for x in target {
                    target_bytes.extend_from_slice(&x.to_le_bytes());
                }
                target_offset += target.len() as u64;
            }
            (None, false) => tokens.target_offset.push(-1),
            _ => return Err(Error::Malformed("mask flag and target payload disagree".into())),
        }
    }

    let mut sequences = SequenceColumns::default();
    for (i, s) in seqs.iter().enumerate() {
        sequences.sequence_id.push(s.sequence_id);
        sequences.run_id.push(s.run_id);
        sequences.start_slot.push(s.start_slot);
        sequences.token_offset.push((i * per_seq) as u64);
        sequences.token_count.push(per_seq as u32);
        sequences.noise_covariance_scale.push(s.scales.noise_covariance);
        sequences.time_covariance_scale.push(s.scales.time_covariance);
    }

    let mut masks = Vec::new();
    pack_bits(all.iter().flat_map(|t| t.pad_mask.iter().copied()), &mut masks);
    let mask_bits_byte_offset = masks.len() as u64;
    pack_bits(all.iter().map(|t| t.masked), &mut masks);

    payload_bytes.extend_from_slice(&target_bytes);
    let index = TokenIndex {
        format: EXPORT_FORMAT.into(),
        version: EXPORT_VERSION,
        schema_digest: schema.digest(),
        schema: schema.clone(),
        mode,
        mask_seed,
        meta,
        n_sequences: seqs.len(),
        n_tokens: all.len(),
        n_payload_floats: n_payload,
        n_target_floats: target_offset - n_payload,
        mask_bits_byte_offset,
        tokens,
        sequences,
    };
    let write = |name: &str, bytes: &[u8]| {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))
    };
    write(TOKENS_FILE, &payload_bytes)?;
    write(MASKS_FILE, &masks)?;
    let path = dir.join(INDEX_FILE);
    let json = serde_json::to_vec(&index).map_err(|e| Error::json(&path, e))?;
    write(INDEX_FILE, &json)?;
    Ok(index)
}

/// Reads an export back into token sequences, validating the schema digest and file sizes.
pub fn read_export(dir: impl AsRef<Path>) -> Result<(TokenIndex, Vec<TokenSequence>)> {
    let dir = dir.as_ref();
    let read = |name: &str| {
        let path = dir.join(name);
        fs::read(&path).map_err(|e| Error::io(&path, e))
    };
    let index_path = dir.join(INDEX_FILE);
    let index: TokenIndex = serde_json::from_slice(&read(INDEX_FILE)?).map_err(|e| Error::json(&index_path, e))?;
    if index.format != EXPORT_FORMAT || index.version != EXPORT_VERSION {
        return Err(Error::Malformed(format!("unsupported export {} v{}", index.format, index.version)));
    }
    let found = index.schema.digest();
    if found != index.schema_digest {
        return Err(Error::DigestMismatch { expected: index.schema_digest.clone(), found });
    }
    let floats = read(TOKENS_FILE)?;
    let masks = read(MASKS_FILE)?;
    let n_floats = (index.n_payload_floats + index.n_target_floats) as usize;
    let pad_bytes = (index.n_payload_floats as usize).div_ceil(8);
    if floats.len() != 4 * n_floats
        || index.mask_bits_byte_offset as usize != pad_bytes
        || masks.len() != pad_bytes + index.n_tokens.div_ceil(8)
    {
        return Err(Error::Truncated { sequence: 0 });
    }
    let tc = &index.tokens;
    let cols = [
        tc.slot.len(),
        tc.patch_row.len(),
        tc.patch_col.len(),
        tc.kind.len(),
        tc.payload_offset.len(),
        tc.payload_len.len(),
        tc.masked.len(),
        tc.target_offset.len(),
    ];
    if tc.feature_id.len() != index.n_tokens || cols.iter().any(|&n| n != index.n_tokens) {
        return Err(Error::Malformed("token columns differ in length".into()));
    }
    let f32_at = |i: usize| f32::from_le_bytes(floats[4 * i..4 * i + 4].try_into().expect("four bytes"));
    let get = |off: usize, len: usize| -> Result<Vec<f32>> {
        if off + len > n_floats {
            return Err(Error::Malformed("payload offset out of range".into()));
        }
        Ok((off..off + len).map(f32_at).collect())
    };

    let sc = &index.sequences;
    let mut out = Vec::with_capacity(index.n_sequences);
    for s in 0..index.n_sequences {
        let start = sc.token_offset[s] as usize;
        let count = sc.token_count[s] as usize;
        if start + count > index.n_tokens {
            return Err(Error::Truncated { sequence: s });
        }
        let mut tokens = Vec::with_capacity(count);
        for i in start..start + count {
            let feature = FeatureId::from_index(tc.feature_id[i])
                .ok_or_else(|| Error::Malformed(format!("feature id {}", tc.feature_id[i])))?;
            let kind = index.schema.feature(feature).kind;
            if kind.code() != tc.kind[i] {
                return Err(Error::Malformed(format!("token {i} kind disagrees with the schema")));
            }
            let (off, len) = (tc.payload_offset[i] as usize, tc.payload_len[i] as usize);
            let target_payload = match tc.target_offset[i] {
                -1 => None,
                t if t >= 0 => Some(get(t as usize, len)?),
                _ => return Err(Error::Malformed("negative target offset".into())),
            };
            tokens.push(Token {
                feature,
                slot: tc.slot[i],
                patch_row: tc.patch_row[i],
                patch_col: tc.patch_col[i],
                kind,
                payload: get(off, len)?,
                pad_mask: (off..off + len).map(|b| bit(&masks, b)).collect(),
                masked: bit(&masks[pad_bytes..], i),
                target_payload,
            });
        }
        out.push(TokenSequence {
            sequence_id: sc.sequence_id[s],
            run_id: sc.run_id[s],
            start_slot: sc.start_slot[s],
            scales: SequenceScales {
                noise_covariance: sc.noise_covariance_scale[s],
                time_covariance: sc.time_covariance_scale[s],
            },
            mode: index.mode,
            mask_seed: index.mask_seed,
            tokens,
        });
    }
    Ok((index, out))
}

/// Token count of a feature kind in an export (used by reports).
pub fn count_kind(index: &TokenIndex, kind: FeatureKind) -> usize {
    index.tokens.kind.iter().filter(|&&k| k == kind.code()).count()
}
