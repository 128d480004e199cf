//! `genie.csfd`: per-slot reference values kept out of the model-visible records.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::codec::{Reader, Writer};
use crate::{Error, Result};

pub const GENIE_MAGIC: [u8; 4] = *b"CSFG";
pub const GENIE_VERSION: u16 = 1;

/// One slot's reference values and estimator errors.
///
/// `*_star` are the channel construction parameters; `*_genie` come from the
/// estimation procedures applied to the noiseless observation; `*_hat` are the
/// estimates from the noisy slot (Rx-averaged, as in the record).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenieEntry {
    pub run_id: u64,
    pub slot: u16,
    pub snr_db: f64,
    /// Width of one delay bin, seconds.
    pub bin_seconds: f64,
    pub mu_star: f64,
    pub len_star: f64,
    pub w_star: f64,
    pub mu_genie: f64,
    pub len_genie: f64,
    pub w_genie: f64,
    pub mu_hat: f64,
    pub len_hat: f64,
    pub w_hat: f64,
    /// MSE of `h / sqrt(P)` against the true pilot channel.
    pub mse_raw: f64,
    /// MSE of the robust MMSE estimate against the true pilot channel.
    pub mse_robust: f64,
}

const F64_FIELDS: usize = 13;
const ENTRY_BYTES: usize = 8 + 2 + 8 * F64_FIELDS;

impl GenieEntry {
    fn floats(&self) -> [f64; F64_FIELDS] {
        [
            self.snr_db,
            self.bin_seconds,
            self.mu_star,
            self.len_star,
            self.w_star,
            self.mu_genie,
            self.len_genie,
            self.w_genie,
            self.mu_hat,
            self.len_hat,
            self.w_hat,
            self.mse_raw,
            self.mse_robust,
        ]
    }
}

/// Magic, `u16` version, `u32` count, fixed-size entries, then the CRC32C of everything before it.
pub fn encode_genie(entries: &[GenieEntry]) -> Vec<u8> {
    let mut w = Writer::default();
    w.bytes(&GENIE_MAGIC);
    w.u16(GENIE_VERSION);
    w.u32(entries.len() as u32);
    for e in entries {
        w.u64(e.run_id);
        w.u16(e.slot);
        for x in e.floats() {
            w.f64(x);
        }
    }
    let crc = crc32c::crc32c(&w.buf);
    w.u32(crc);
    w.buf
}

pub fn decode_genie(bytes: &[u8]) -> Result<Vec<GenieEntry>> {
    let mut r = Reader::new(bytes);
    let magic = r.magic().map_err(|_| Error::BadMagic { found: [0; 4] })?;
    if magic != GENIE_MAGIC {
        return Err(Error::BadMagic { found: magic });
    }
    let version = r.u16()?;
    if version != GENIE_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let count = r.u32()? as usize;
    if r.remaining() != count * ENTRY_BYTES + 4 {
        return Err(Error::Truncated { sequence: r.remaining().saturating_sub(4) / ENTRY_BYTES });
    }
    let body_len = bytes.len() - 4;
    let stored = u32::from_le_bytes(bytes[body_len..].try_into().expect("four bytes"));
    let computed = crc32c::crc32c(&bytes[..body_len]);
    if stored != computed {
        return Err(Error::Checksum { sequence: 0, stored, computed });
    }
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        r.sequence = i;
        let run_id = r.u64()?;
        let slot = r.u16()?;
        let mut f = [0.0; F64_FIELDS];
        for x in &mut f {
            *x = r.f64()?;
        }
        out.push(GenieEntry {
            run_id,
            slot,
            snr_db: f[0],
            bin_seconds: f[1],
            mu_star: f[2],
            len_star: f[3],
            w_star: f[4],
            mu_genie: f[5],
            len_genie: f[6],
            w_genie: f[7],
            mu_hat: f[8],
            len_hat: f[9],
            w_hat: f[10],
            mse_raw: f[11],
            mse_robust: f[12],
        });
    }
    Ok(out)
}

pub fn write_genie(path: impl AsRef<Path>, entries: &[GenieEntry]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_genie(entries)).map_err(|e| Error::io(path, e))
}

pub fn read_genie(path: impl AsRef<Path>) -> Result<Vec<GenieEntry>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_genie(&bytes)
}
