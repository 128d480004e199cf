#![allow(dead_code)]

use csi_forge::chansim::ChannelType;
use csi_forge::dataset::{ComplexMatrix, FeatureRecord, SequenceRecord};
use num_complex::Complex32;
use proptest::prelude::*;

pub fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec((-10.0f32..10.0, -10.0f32..10.0), rows * cols).prop_map(move |v| {
        ComplexMatrix::new(rows, cols, v.into_iter().map(|(re, im)| Complex32::new(re, im)).collect()).unwrap()
    })
}

/// Dimensions `(n_rx, n_tx, rank, B, |S|)` within the default pad targets.
pub fn dims() -> impl Strategy<Value = (usize, usize, usize, usize, usize)> {
    (1usize..=4, prop::sample::select(vec![4usize, 8]), prop::sample::select(vec![25usize, 50, 75, 100]), 2usize..=4)
        .prop_flat_map(|(n_rx, n_tx, b, s)| (Just(n_rx), Just(n_tx), 1..=n_rx, Just(b), Just(s)))
}

pub fn record(d: (usize, usize, usize, usize, usize), slot: u16, config_id: u64) -> impl Strategy<Value = FeatureRecord> {
    let (n_rx, n_tx, rank, b, s) = d;
    (
        (0u8..3, prop::sample::select(vec![12u32, 24, 48])),
        (matrix(n_rx, n_rx), matrix(b, b), matrix(s, s), matrix(s, s), matrix(n_tx, rank)),
        (-1e-5f64..1e-5, 0.0f64..1e-5, 0.0f64..1200.0, 0.0f64..40.0),
    )
        .prop_map(move |((ct, m), (cn, rf, ct_, rt, w), (mu, len, wd, g))| FeatureRecord {
            channel_type: ChannelType::from_index(ct).unwrap(),
            n_subcarriers: m * b as u32,
            noise_covariance: cn,
            freq_correlation: rf,
            time_covariance: ct_,
            time_correlation: rt,
            delay_center: mu,
            delay_length: len,
            doppler_width: wd,
            precoder: w,
            rank: rank as u8,
            spectral_efficiency: g,
            slot_index: slot,
            config_id,
        })
}

pub fn sequence() -> impl Strategy<Value = SequenceRecord> {
    (dims(), any::<u64>(), any::<u64>(), 0u16..19).prop_flat_map(|(d, run_id, config_id, start)| {
        let start = start * 5;
        (0..5u16)
            .map(|k| record(d, start + k, config_id))
            .collect::<Vec<_>>()
            .prop_map(move |recs| SequenceRecord::new(run_id, start, recs).unwrap())
    })
}
pub mod oracle;
