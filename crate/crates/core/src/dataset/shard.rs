use std::fs;
use std::path::Path;

use num_complex::Complex32;

use super::codec::{Reader, Writer};
use super::record::{ComplexMatrix, FeatureRecord, SequenceRecord, SEQUENCE_LEN};
use crate::chansim::ChannelType;
use crate::{Error, Result};

pub const SHARD_MAGIC: [u8; 4] = *b"CSFD";
pub const SHARD_VERSION: u16 = 1;

fn put_matrix(w: &mut Writer, m: &ComplexMatrix) -> Result<()> {
    let rows = u16::try_from(m.rows()).map_err(|_| Error::Malformed("matrix too large".into()))?;
    let cols = u16::try_from(m.cols()).map_err(|_| Error::Malformed("matrix too large".into()))?;
    w.u16(rows);
    w.u16(cols);
    for z in m.data() {
        w.f32(z.re);
        w.f32(z.im);
    }
    Ok(())
}

fn get_matrix(r: &mut Reader) -> Result<ComplexMatrix> {
    let rows = r.u16()? as usize;
    let cols = r.u16()? as usize;
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        let re = r.f32()?;
        let im = r.f32()?;
        data.push(Complex32::new(re, im));
    }
    ComplexMatrix::new(rows, cols, data)
}

fn put_record(w: &mut Writer, rec: &FeatureRecord) -> Result<()> {
    w.u8(rec.channel_type.index());
    w.u32(rec.n_subcarriers);
    for m in [
        &rec.noise_covariance,
        &rec.freq_correlation,
        &rec.time_covariance,
        &rec.time_correlation,
        &rec.precoder,
    ] {
        put_matrix(w, m)?;
    }
    for x in [rec.delay_center, rec.delay_length, rec.doppler_width, rec.spectral_efficiency] {
        w.f64(x);
    }
    w.u8(rec.rank);
    w.u16(rec.slot_index);
    w.u64(rec.config_id);
    Ok(())
}

fn get_record(r: &mut Reader) -> Result<FeatureRecord> {
    let tag = r.u8()?;
    let channel_type =
        ChannelType::from_index(tag).ok_or_else(|| Error::Malformed(format!("channel type {tag}")))?;
    let n_subcarriers = r.u32()?;
    let noise_covariance = get_matrix(r)?;
    let freq_correlation = get_matrix(r)?;
    let time_covariance = get_matrix(r)?;
    let time_correlation = get_matrix(r)?;
    let precoder = get_matrix(r)?;
    let delay_center = r.f64()?;
    let delay_length = r.f64()?;
    let doppler_width = r.f64()?;
    let spectral_efficiency = r.f64()?;
    Ok(FeatureRecord {
        channel_type,
        n_subcarriers,
        noise_covariance,
        freq_correlation,
        time_covariance,
        time_correlation,
        delay_center,
        delay_length,
        doppler_width,
        precoder,
        rank: r.u8()?,
        spectral_efficiency,
        slot_index: r.u16()?,
        config_id: r.u64()?,
    })
}

/// Serialises a complete shard.
///
/// Layout: magic, `u16` version, `u32` sequence count, then per sequence a
/// `u32` body length, the body (`u64` run id, `u16` start slot, five records)
/// and the CRC32C of the body.
pub fn encode_shard(sequences: &[SequenceRecord]) -> Result<Vec<u8>> {
    let mut w = Writer::default();
    w.bytes(&SHARD_MAGIC);
    w.u16(SHARD_VERSION);
    w.u32(u32::try_from(sequences.len()).map_err(|_| Error::Malformed("too many sequences".into()))?);
    for seq in sequences {
        let mut body = Writer::default();
        body.u64(seq.run_id);
        body.u16(seq.start_slot);
        for rec in seq.records() {
            put_record(&mut body, rec)?;
        }
        w.u32(body.buf.len() as u32);
        w.bytes(&body.buf);
        w.u32(crc32c::crc32c(&body.buf));
    }
    Ok(w.buf)
}

pub fn decode_shard(bytes: &[u8]) -> Result<Vec<SequenceRecord>> {
    let mut r = Reader::new(bytes);
    if bytes.len() < 4 {
        let mut found = [0u8; 4];
        found[..bytes.len()].copy_from_slice(bytes);
        return Err(Error::BadMagic { found });
    }
    let magic = r.magic()?;
    if magic != SHARD_MAGIC {
        return Err(Error::BadMagic { found: magic });
    }
    let version = r.u16()?;
    if version != SHARD_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let count = r.u32()? as usize;
    let mut out = Vec::with_capacity(count.min(1 << 16));
    for sequence in 0..count {
        r.sequence = sequence;
        let len = r.u32()? as usize;
        let body = r.take(len)?;
        let stored = r.u32()?;
        let computed = crc32c::crc32c(body);
        if stored != computed {
            return Err(Error::Checksum { sequence, stored, computed });
        }
        let mut br = Reader::new(body);
        br.sequence = sequence;
        let run_id = br.u64()?;
        let start_slot = br.u16()?;
        let records = (0..SEQUENCE_LEN).map(|_| get_record(&mut br)).collect::<Result<Vec<_>>>()?;
        if br.remaining() != 0 {
            return Err(Error::Malformed(format!("{} trailing bytes in sequence {sequence}", br.remaining())));
        }
        out.push(SequenceRecord::new(run_id, start_slot, records)?);
    }
    if r.remaining() != 0 {
        return Err(Error::Malformed(format!("{} trailing bytes after the last sequence", r.remaining())));
    }
    Ok(out)
}

pub fn write_shard(path: impl AsRef<Path>, sequences: &[SequenceRecord]) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_shard(sequences)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_shard(path: impl AsRef<Path>) -> Result<Vec<SequenceRecord>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_shard(&bytes)
}
