mod common;

use csi_forge::dataset::{compute_norm_stats, FeatureRecord, SequenceRecord};
use csi_forge::linalg::CMat;
use csi_forge::tokenstream::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Oracle: exhaustive search over powers of two for the patch heuristic.
fn patch_oracle(d1: usize, d2: usize) -> usize {
    (3..20)
        .map(|k| 1usize << k)
        .find(|&p| d1.div_ceil(p) * d2.div_ceil(p) <= 64)
        .unwrap()
}

proptest! {
    #[test]
    fn patch_size_heuristic(d1 in 1usize..2000, d2 in 1usize..2000) {
        let (p1, p2) = choose_patch_size(d1, d2);
        prop_assert_eq!(p1, p2);
        prop_assert_eq!(p1, patch_oracle(d1, d2));
        prop_assert!(p1 >= 8 && p1.is_power_of_two());
        prop_assert!(d1.div_ceil(p1) * d2.div_ceil(p2) <= 64);
    }

    #[test]
    fn fourier_payload_is_bounded(x in -1e4f64..1e4) {
        let e = fourier_encode(x, &FourierGrid::default()).unwrap();
        prop_assert_eq!(e.len(), 64);
        prop_assert!(e.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn fourier_round_trip(x in -400.0f64..400.0) {
        let g = FourierGrid::default();
        let back = fourier_decode(&fourier_encode(x, &g).unwrap(), &g).unwrap();
        prop_assert!((back - x).abs() <= 1e-6 * x.abs().max(1.0), "{} -> {}", x, back);
    }

    #[test]
    fn patchify_inverts(rows in 1usize..40, cols in 1usize..40, seed in any::<u64>()) {
        let (p, _) = choose_patch_size(rows, cols);
        let m = CMat::from_fn(rows, cols, |r, c| {
            let h = csi_forge::seed::derive(seed, &[r as u64, c as u64]);
            Complex64::new((h % 1000) as f64 - 500.0, (h / 1000 % 1000) as f64 * 0.01)
        });
        let (gr, gc) = (rows.div_ceil(p), cols.div_ceil(p));
        let padded = pad_matrix(&m, gr * p, gc * p).unwrap();
        let patches = patchify(&padded, (rows, cols), p, p).unwrap();
        prop_assert_eq!(patches.len(), gr * gc);
        for (i, patch) in patches.iter().enumerate() {
            prop_assert_eq!((patch.row, patch.col), (i / gc, i % gc));
            for (x, pad) in patch.payload.iter().zip(&patch.pad_mask) {
                prop_assert!(!pad || *x == 0.0);
            }
        }
        let n_pad = patches.iter().flat_map(|q| &q.pad_mask).filter(|&&b| b).count();
        prop_assert_eq!(n_pad, 2 * (gr * gc * p * p - rows * cols));
        let refs: Vec<&[f64]> = patches.iter().map(|q| q.payload.as_slice()).collect();
        let back = depatchify(&refs, (gr, gc), p, p, rows, cols).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn sequence_round_trip_and_shape(seq in common::sequence()) {
        let schema = FeatureSchema::default();
        let stats = compute_norm_stats(seq.records()).unwrap();
        let ts = build_token_sequence(&seq, 3, &schema, &stats).unwrap();
        prop_assert_eq!(ts.tokens.len(), schema.tokens_per_sequence());
        for t in &ts.tokens {
            prop_assert_eq!(t.payload.len(), schema.payload_len(t.feature));
            for (x, pad) in t.payload.iter().zip(&t.pad_mask) {
                prop_assert!(!pad || *x == 0.0);
            }
            if t.kind == FeatureKind::Scalar {
                prop_assert!(t.payload.iter().all(|v| (-1.0..=1.0).contains(v)));
            }
        }
        // Normalisation inverts in double precision.
        let (norm, scales) = normalize_sequence(&seq, &stats).unwrap();
        for (n, r) in norm.iter().zip(seq.records()) {
            let back = denormalize_record(n, &stats, &scales).unwrap();
            prop_assert_eq!(back.rank, r.rank);
            prop_assert_eq!(back.n_subcarriers, r.n_subcarriers);
            prop_assert!(rel_err(back.delay_center, r.delay_center) < 1e-6 || (back.delay_center - r.delay_center).abs() < 1e-18);
            prop_assert!(rel_err(back.spectral_efficiency, r.spectral_efficiency) < 1e-6 || (back.spectral_efficiency - r.spectral_efficiency).abs() < 1e-12);
            let d = (back.noise_covariance.to_cmat() - r.noise_covariance.to_cmat()).norm();
            prop_assert!(d <= 1e-6 * r.noise_covariance.to_cmat().norm().max(1e-30));
            prop_assert_eq!(&back.freq_correlation, &r.freq_correlation);
        }
        // Matrix tokens decode to the normalised matrices with their native dims.
        for (slot, n) in norm.iter().enumerate() {
            match decode_feature(&ts, &schema, FeatureId::Precoder, slot).unwrap() {
                FeatureValue::Matrix(w) => {
                    let expected = &n.precoder;
                    prop_assert_eq!(w.shape(), expected.shape());
                    prop_assert!((w - expected).norm() <= 1e-6 * expected.norm().max(1.0));
                }
                other => prop_assert!(false, "unexpected {:?}", other),
            }
            match decode_feature(&ts, &schema, FeatureId::ChannelType, slot).unwrap() {
                FeatureValue::Category(c) => prop_assert_eq!(c, seq.records()[slot].channel_type.index() as usize),
                other => prop_assert!(false, "unexpected {:?}", other),
            }
        }
    }

    #[test]
    fn mask_plans(seq in common::sequence(), seed in any::<u64>(), f in prop::sample::select(FeatureId::TARGETS.to_vec())) {
        let schema = FeatureSchema::default();
        let stats = compute_norm_stats(seq.records()).unwrap();
        let base = build_token_sequence(&seq, 9, &schema, &stats).unwrap();

        let mut pre = base.clone();
        apply_mask_plan(&mut pre, MaskMode::Pretrain, seed, 5).unwrap();
        let pairs = pre.masked_pairs();
        prop_assert_eq!(pairs.len(), 5);
        prop_assert_eq!(pairs.iter().map(|p| p.0).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4]);
        prop_assert!(pairs.iter().all(|p| p.1.is_target()));
        for (t, orig) in pre.tokens.iter().zip(&base.tokens) {
            if t.masked {
                prop_assert!(t.payload.iter().all(|&x| x == 0.0));
                prop_assert_eq!(t.target_payload.as_ref(), Some(&orig.payload));
            } else {
                prop_assert_eq!(&t.payload, &orig.payload);
                prop_assert!(t.target_payload.is_none());
            }
        }
        // Every token of a masked pair is masked.
        for (slot, feat) in &pairs {
            prop_assert!(pre.tokens_of(*feat, *slot).all(|t| t.masked));
        }

        let mut a = base.clone();
        let mut b = base.clone();
        apply_mask_plan(&mut a, MaskMode::Interpolation(f), seed, 5).unwrap();
        apply_mask_plan(&mut b, MaskMode::Interpolation(f), seed, 5).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.masked_pairs().len(), 1);
        prop_assert_eq!(a.masked_pairs()[0].1, f);

        let mut fc = base.clone();
        apply_mask_plan(&mut fc, MaskMode::Forecast(f), seed, 5).unwrap();
        prop_assert_eq!(fc.masked_pairs(), vec![(4, f)]);
    }
}

#[test]
fn fourier_examples() {
    let g = FourierGrid::default();
    let zero = fourier_encode(0.0, &g).unwrap();
    assert!(zero.chunks(2).all(|p| p == [1.0, 0.0]));
    let lambdas = g.lambdas();
    assert_eq!(lambdas.len(), 32);
    assert!((lambdas[0] - 1e-3).abs() < 1e-18 && (lambdas[31] - 1e3).abs() < 1e-9);
    let at = fourier_encode(lambdas[0], &g).unwrap();
    assert!((at[0] - 1.0).abs() < 1e-12 && at[1].abs() < 1e-12);
    let odd = FourierGrid { dim: 63, ..g };
    assert!(fourier_encode(1.0, &odd).is_err());
}

#[test]
fn patch_examples() {
    assert_eq!(choose_patch_size(100, 100), (16, 16));
    assert_eq!(choose_patch_size(4, 4), (8, 8));
    assert_eq!(choose_patch_size(8, 8), (8, 8));
    let m = CMat::from_fn(16, 16, |r, c| Complex64::new((r * 16 + c) as f64, 0.0));
    let patches = patchify(&m, (16, 16), 8, 8).unwrap();
    assert_eq!(patches.iter().map(|p| (p.row, p.col)).collect::<Vec<_>>(), vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
    assert_eq!(patches[1].payload[0], 8.0);
    assert_eq!(patches[2].payload[0], 128.0);
    let zero = patchify(&CMat::zeros(8, 8), (3, 5), 8, 8).unwrap();
    assert!(zero[0].payload.iter().all(|&x| x == 0.0));
    assert_eq!(zero[0].pad_mask.iter().filter(|&&b| !b).count(), 2 * 15);
    assert!(patchify(&CMat::zeros(10, 8), (10, 8), 8, 8).is_err());
}

#[test]
fn schema_layout() {
    let s = FeatureSchema::default();
    let counts: Vec<(String, usize)> = s.features.iter().map(|f| (f.name.clone(), f.n_tokens())).collect();
    let expected = [
        ("channel_type", 1),
        ("K", 1),
        ("C_n", 1),
        ("R_f", 49),
        ("C_time", 1),
        ("R_time", 1),
        ("mu_hat", 1),
        ("len_hat", 1),
        ("w_hat", 1),
        ("W_hat", 1),
        ("R_hat", 1),
        ("G_hat", 1),
    ];
    assert_eq!(counts, expected.iter().map(|(n, c)| (n.to_string(), *c)).collect::<Vec<_>>());
    assert_eq!(s.feature(FeatureId::FreqCorrelation).padded_dims(), (112, 112));
    assert_eq!(s.feature(FeatureId::Precoder).padded_dims(), (8, 8));
    let mut targets = s.target_features();
    targets.sort();
    assert_eq!(targets, {
        let mut t = FeatureId::TARGETS.to_vec();
        t.sort();
        t
    });
    assert!(FeatureId::parse("w_hat").unwrap() == FeatureId::DopplerWidth);
    assert!(FeatureId::parse("nope").is_err());
    assert_eq!(s.digest(), FeatureSchema::default().digest());
}

fn fixed_sequence(b: usize, scale: f32) -> SequenceRecord {
    use csi_forge::dataset::ComplexMatrix;
    use num_complex::Complex32;
    let eye = |n: usize, c: f32| {
        let mut m = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            m.data_mut()[i * n + i] = Complex32::new(c, 0.0);
        }
        m
    };
    let recs = (0..5)
        .map(|k| FeatureRecord {
            channel_type: csi_forge::chansim::ChannelType::UMa,
            n_subcarriers: (12 * b) as u32,
            noise_covariance: eye(4, scale),
            freq_correlation: eye(b, 1.0),
            time_covariance: eye(4, 2.0),
            time_correlation: eye(4, 1.0),
            delay_center: 1e-7 * k as f64,
            delay_length: 3e-7,
            doppler_width: 100.0,
            precoder: ComplexMatrix::new(8, 4, vec![Complex32::new(1.0 / 32f32.sqrt(), 0.0); 32]).unwrap(),
            rank: 4,
            spectral_efficiency: 5.0,
            slot_index: k,
            config_id: 1,
        })
        .collect();
    SequenceRecord::new(0, 0, recs).unwrap()
}

#[test]
fn normalization_examples() {
    let seq = fixed_sequence(100, 7.5);
    let stats = compute_norm_stats(seq.records()).unwrap();
    let (norm, scales) = normalize_sequence(&seq, &stats).unwrap();
    assert_eq!(scales.noise_covariance, 7.5);
    for n in &norm {
        assert!((&n.noise_covariance - CMat::identity(4, 4)).norm() < 1e-12);
        assert_eq!(n.time_correlation, CMat::identity(4, 4));
        // Constant scalars sit at their mean.
        assert_eq!(n.delay_length, 0.0);
        assert_eq!(n.rank, 0.0);
    }
    let mut missing = stats.clone();
    missing.features.remove("w_hat");
    assert!(normalize_sequence(&seq, &missing).is_err());
    assert!(check_stats(&missing).is_err());
}

#[test]
fn small_configs_pad_to_the_same_token_count() {
    let schema = FeatureSchema::default();
    let full = fixed_sequence(100, 1.0);
    let small = fixed_sequence(25, 1.0);
    let stats = compute_norm_stats(full.records().iter().chain(small.records())).unwrap();
    let a = build_token_sequence(&full, 0, &schema, &stats).unwrap();
    let b = build_token_sequence(&small, 1, &schema, &stats).unwrap();
    assert_eq!(a.tokens.len(), 300);
    assert_eq!(b.tokens.len(), 300);
    let again = build_token_sequence(&full, 0, &schema, &stats).unwrap();
    assert_eq!(a, again);
    // Oversized features are rejected.
    let big = fixed_sequence(120, 1.0);
    assert!(build_token_sequence(&big, 2, &schema, &stats).is_err());
}

#[test]
fn non_target_features_cannot_be_masked() {
    let schema = FeatureSchema::default();
    let seq = fixed_sequence(50, 1.0);
    let stats = compute_norm_stats(seq.records()).unwrap();
    let mut ts = build_token_sequence(&seq, 0, &schema, &stats).unwrap();
    assert!(apply_mask_plan(&mut ts, MaskMode::Forecast(FeatureId::SpectralEfficiency), 0, 5).is_err());
    assert!(apply_mask_plan(&mut ts, MaskMode::Interpolation(FeatureId::FreqCorrelation), 0, 5).is_err());
    apply_mask_plan(&mut ts, MaskMode::Forecast(FeatureId::Precoder), 0, 5).unwrap();
    assert_eq!(ts.masked_pairs(), vec![(4, FeatureId::Precoder)]);
    assert!(apply_mask_plan(&mut ts, MaskMode::Pretrain, 0, 5).is_err());
}

#[test]
fn export_round_trip() {
    let schema = FeatureSchema::default();
    let seqs = [fixed_sequence(100, 2.0), fixed_sequence(25, 3.0)];
    let stats = compute_norm_stats(seqs.iter().flat_map(|s| s.records())).unwrap();
    let refs: Vec<&SequenceRecord> = seqs.iter().collect();
    let mut ts = build_token_sequences(&refs, &[10, 11], &schema, &stats).unwrap();
    for t in &mut ts {
        apply_mask_plan(t, MaskMode::Pretrain, 42, 5).unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    let meta = ExportMeta { split: Some("train".into()), dataset_manifest_digest: None, norm_stats_digest: stats.digest() };
    let index = write_export(dir.path(), &schema, &ts, meta.clone()).unwrap();
    assert_eq!(index.n_tokens, 600);
    assert_eq!(index.schema_digest, schema.digest());
    let (back_index, back) = read_export(dir.path()).unwrap();
    assert_eq!(back_index, index);
    assert_eq!(back, ts);

    // The index is plain JSON with the documented column names.
    let raw: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join(INDEX_FILE)).unwrap()).unwrap();
    for col in ["feature_id", "slot", "patch_row", "patch_col", "kind", "payload_offset", "payload_len", "masked", "target_offset"] {
        assert_eq!(raw["tokens"][col].as_array().unwrap().len(), 600, "{col}");
    }
    assert_eq!(raw["sequences"]["token_offset"], serde_json::json!([0, 300]));

    // Tampering with the schema is detected.
    let mut bad: serde_json::Value = raw.clone();
    bad["schema"]["fourier"]["dim"] = serde_json::json!(32);
    std::fs::write(dir.path().join(INDEX_FILE), serde_json::to_vec(&bad).unwrap()).unwrap();
    assert!(read_export(dir.path()).is_err());
}
