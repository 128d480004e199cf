//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.
//!
//! Tolerances are pinned here and nowhere else.

mod common;

use std::time::{Duration, Instant};

use common::oracle;
use csi_forge::chansim::{generate_channel, transmit_pilots, ChannelType, SimConfig};
use csi_forge::dataset::{
    compute_norm_stats, decode_shard, encode_shard, run_campaign, write_dataset, CampaignSettings, Dataset,
    WriteSettings,
};
use csi_forge::estimators::*;
use csi_forge::linalg::CMat;
use csi_forge::seed;
use csi_forge::tokenstream::*;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

// Genie recovery.
const GENIE_SLOTS: usize = 50;
const GENIE_SPEED_KMH: f64 = 90.0;
const MU_TOL_BINS: f64 = 2.0;
const LEN_TOL_BINS: f64 = 4.0;
const W_HIT_RATE: f64 = 0.90;
const GENIE_BUDGET: Duration = Duration::from_secs(60);
// Noise covariance.
const NOISE_RHO: f64 = 0.2;
const NOISE_MIN_SAMPLES: usize = 100_000;
const NOISE_REL_TOL: f64 = 0.02;
// Denoising.
const DENOISE_TRIALS: usize = 100;
const DENOISE_MIN_WINS: usize = 95;
// Kronecker fast path.
const KRON_INSTANCES: usize = 50;
const KRON_REL_TOL: f64 = 1e-6;
// Selection oracle.
const SELECTION_INSTANCES: usize = 100;
const ANTENNA_PAIRS: [(usize, usize); 6] = [(4, 1), (4, 2), (4, 4), (8, 1), (8, 2), (8, 4)];
// Tokenizer.
const ROUND_TRIP_REL_TOL: f64 = 1e-6;
const PRETRAIN_MASKS: usize = 5;

type Outcome = Result<String, String>;

fn check(cond: bool, ok: String, fail: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(fail)
    }
}

fn rel(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

fn genie_recovery() -> Outcome {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| e.to_string())?;
    pool.install(|| {
        let start = Instant::now();
        let settings = PipelineSettings::default();
        let grid = &settings.doppler_grid;
        let (mut mu_err, mut len_err, mut mu_star_err, mut len_star_gap) = (0.0, 0.0, 0.0, 0.0);
        let (mut w_hits, mut w_star_hits, mut n_w) = (0usize, 0usize, 0usize);
        for t in 0..GENIE_SLOTS {
            let cfg = SimConfig {
                channel_type: ChannelType::ALL[t % ChannelType::ALL.len()],
                speed_kmh: GENIE_SPEED_KMH,
                snr_db: 30.0,
                seed: t as u64,
                ..SimConfig::reference()
            };
            let chan = generate_channel(&cfg, 1, seed::derive(1, &[t as u64])).map_err(|e| e.to_string())?;
            let obs = transmit_pilots(&cfg, &chan, 0, seed::derive(2, &[t as u64])).map_err(|e| e.to_string())?;
            let est = estimate_slot(&obs, &settings).map_err(|e| e.to_string())?;
            let g = genie_values(&cfg, &chan, 0, &settings).map_err(|e| e.to_string())?;
            let bin = g.bin_seconds;
            let n_rx = cfg.n_rx as f64;
            let nearest = grid
                .iter()
                .copied()
                .min_by(|a, b| (a - g.w_star).abs().total_cmp(&(b - g.w_star).abs()))
                .unwrap();
            for i in 0..cfg.n_rx {
                mu_err += (est.delay.mu[i] - g.mu[i]).abs() / bin / n_rx;
                len_err += (est.delay.len[i] - g.len[i]).abs() / bin / n_rx;
                mu_star_err += (est.delay.mu[i] - g.mu_star).abs() / bin / n_rx;
                len_star_gap += (est.delay.len[i] - g.len_star) / bin / n_rx;
                w_hits += (est.doppler.width[i] == g.w[i]) as usize;
                w_star_hits += (est.doppler.width[i] == nearest) as usize;
                n_w += 1;
            }
        }
        let n = GENIE_SLOTS as f64;
        let (mu_err, len_err, mu_star_err, len_star_gap) = (mu_err / n, len_err / n, mu_star_err / n, len_star_gap / n);
        let hit = w_hits as f64 / n_w as f64;
        let elapsed = start.elapsed();
        let detail = format!(
            "mu {mu_err:.2} bins (vs construction {mu_star_err:.2}), len {len_err:.2} bins, w hit {:.0}%, \
             {:.1}s; info: len - len* {len_star_gap:+.1} bins, w nearest-to-w* hit {:.0}%",
            hit * 100.0,
            elapsed.as_secs_f64(),
            w_star_hits as f64 / n_w as f64 * 100.0
        );
        check(
            mu_err <= MU_TOL_BINS
                && mu_star_err <= MU_TOL_BINS
                && len_err <= LEN_TOL_BINS
                && hit >= W_HIT_RATE
                && elapsed < GENIE_BUDGET,
            detail.clone(),
            detail,
        )
    })
}

fn noise_covariance() -> Outcome {
    let cfg = SimConfig { group_size: 48, noise_rho: NOISE_RHO, snr_db: 10.0, ..SimConfig::reference() };
    let slots = 6;
    let chan = generate_channel(&cfg, slots, 5).map_err(|e| e.to_string())?;
    let parts: Vec<_> = (0..slots)
        .map(|s| transmit_pilots(&cfg, &chan, s, 6).map(|o| o.z_tilde))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let views: Vec<_> = parts.iter().map(|z| z.view()).collect();
    let z = ndarray::concatenate(ndarray::Axis(0), &views).map_err(|e| e.to_string())?;
    let samples = z.shape()[0] * z.shape()[1];
    let est = estimate_noise_covariance(&z).map_err(|e| e.to_string())?;
    let err = rel(&est.covariance, &cfg.noise_covariance());
    let detail = format!("{samples} samples, relative error {err:.4}");
    check(samples >= NOISE_MIN_SAMPLES && err < NOISE_REL_TOL, detail.clone(), detail)
}

fn denoising_gain() -> Outcome {
    let settings = PipelineSettings::default();
    let (mut wins, mut raw_sum, mut robust_sum) = (0usize, 0.0, 0.0);
    for t in 0..DENOISE_TRIALS {
        let cfg = SimConfig {
            channel_type: ChannelType::ALL[t % ChannelType::ALL.len()],
            snr_db: 0.0,
            ..SimConfig::reference()
        };
        let chan = generate_channel(&cfg, 1, seed::derive(3, &[t as u64])).map_err(|e| e.to_string())?;
        let obs = transmit_pilots(&cfg, &chan, 0, seed::derive(4, &[t as u64])).map_err(|e| e.to_string())?;
        let est = estimate_slot(&obs, &settings).map_err(|e| e.to_string())?;
        let truth = chan.pilot_channel(&cfg, 0).map_err(|e| e.to_string())?;
        let (raw, robust) = est.denoising_errors(&obs, &truth);
        wins += (robust < raw) as usize;
        raw_sum += raw;
        robust_sum += robust;
    }
    let n = DENOISE_TRIALS as f64;
    let detail = format!(
        "robust better in {wins}/{DENOISE_TRIALS}, mean MSE raw {:.3} robust {:.3}",
        raw_sum / n,
        robust_sum / n
    );
    check(wins >= DENOISE_MIN_WINS, detail.clone(), detail)
}

fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> CMat {
    DMatrix::from_fn(rows, cols, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

fn kronecker_fast_path() -> Outcome {
    let mut rng = seed::rng(0x4b52);
    let mut worst = 0.0f64;
    for _ in 0..KRON_INSTANCES {
        let s = rng.random_range(1..=4);
        let b = rng.random_range(1..=8);
        let a_t = random_matrix(&mut rng, s, s);
        let a_f = random_matrix(&mut rng, b, b);
        let r_t = correlation_from_covariance(&(&a_t * a_t.adjoint()));
        let r_f = correlation_from_covariance(&(&a_f * a_f.adjoint()));
        let x = random_matrix(&mut rng, s, b);
        let ratio = 10f64.powf(rng.random_range(-3.0..1.0));
        let fast = KroneckerMmse::new(&r_t, &r_f).apply(ratio, &x);
        worst = worst.max(rel(&fast, &oracle::dense_mmse(&r_t, &r_f, ratio, &x)));
    }
    let detail = format!("{KRON_INSTANCES} instances, worst relative error {worst:.2e}");
    check(worst < KRON_REL_TOL, detail.clone(), detail)
}

fn selection_oracle() -> Outcome {
    let mut rng = seed::rng(0x5e1);
    let (mut checked, mut ties, mut mismatches) = (0usize, 0usize, Vec::new());
    for &(n_tx, n_rx) in &ANTENNA_PAIRS {
        let books: Vec<_> = (1..=n_rx).map(|r| build_dft_codebook(n_tx, r).unwrap()).collect();
        let mut instances: Vec<CMat> = (0..SELECTION_INSTANCES)
            .map(|_| {
                let k = rng.random_range(1..=n_tx);
                let a = random_matrix(&mut rng, n_tx, k);
                (&a * a.adjoint()).scale(10f64.powf(rng.random_range(-2.0..3.0)))
            })
            .collect();
        // Exact ties: every candidate of a rank scores the same.
        for c in [0.0, 0.5, 1.0, 30.0, 1e3] {
            instances.push(CMat::identity(n_tx, n_tx).scale(c));
            ties += 1;
        }
        for c in &instances {
            let report = select_rank(c, &books).map_err(|e| e.to_string())?;
            let (rank, idx, _) = oracle::select(c, n_rx, SCORE_TIE_TOLERANCE);
            let reference = &oracle::codebook(n_tx, rank)[idx];
            let same = report.rank == rank && report.precoder_index == idx && (&report.precoder - reference).norm() < 1e-12;
            if !same {
                mismatches.push(format!("({n_tx},{n_rx}) lib r{}#{} oracle r{rank}#{idx}", report.rank, report.precoder_index));
            }
            checked += 1;
        }
    }
    let detail = format!("{checked} instances ({ties} exact ties), {} mismatches", mismatches.len());
    check(mismatches.is_empty(), detail.clone(), format!("{detail}: {}", mismatches.join(", ")))
}

/// The one-configuration campaign shared by the dataset and tokenizer checks.
fn reference_campaign() -> Result<csi_forge::dataset::Campaign, String> {
    run_campaign(&CampaignSettings::new(2024, 1)).map_err(|e| e.to_string())
}

fn dataset_arithmetic(campaign: &csi_forge::dataset::Campaign) -> Outcome {
    let runs = campaign.runs.len();
    let total = campaign.n_sequences();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let m = write_dataset(dir.path(), campaign, &WriteSettings::default()).map_err(|e| e.to_string())?;
    let counts = (m.counts.train, m.counts.val, m.counts.test);
    let ds = Dataset::load(dir.path()).map_err(|e| e.to_string())?;
    let original: Vec<_> = campaign.sequences().cloned().collect();
    let bit_exact = ds.sequences == original
        && encode_shard(&ds.sequences).map_err(|e| e.to_string())? == encode_shard(&original).map_err(|e| e.to_string())?;

    // Corruption: random byte flips in an encoded shard, and a flip on disk.
    let bytes = encode_shard(&original[..4]).map_err(|e| e.to_string())?;
    let mut rng = seed::rng(0xc0);
    let mut undetected = 0;
    for _ in 0..200 {
        let mut bad = bytes.clone();
        let i = rng.random_range(0..bad.len());
        bad[i] ^= rng.random_range(1..=255u8);
        undetected += decode_shard(&bad).is_ok() as usize;
    }
    let shard = dir.path().join(&m.shards[0].file);
    let mut on_disk = std::fs::read(&shard).map_err(|e| e.to_string())?;
    let mid = on_disk.len() / 2;
    on_disk[mid] ^= 0x01;
    std::fs::write(&shard, on_disk).map_err(|e| e.to_string())?;
    let disk_detected = Dataset::load(dir.path()).is_err();

    let detail = format!(
        "{runs} runs, {total} sequences, split {}/{}/{}, round trip {}, undetected flips {undetected}/200, tampered shard {}",
        counts.0,
        counts.1,
        counts.2,
        if bit_exact { "bit-exact" } else { "DIFFERS" },
        if disk_detected { "rejected" } else { "ACCEPTED" }
    );
    check(
        runs == 8 && total == 160 && counts == (128, 16, 16) && bit_exact && undetected == 0 && disk_detected,
        detail.clone(),
        detail,
    )
}

fn tokenizer_conformance(campaign: &csi_forge::dataset::Campaign) -> Outcome {
    let mut problems = Vec::new();
    let schema = FeatureSchema::default();

    let (p, _) = choose_patch_size(100, 100);
    let n_100 = 100usize.div_ceil(p).pow(2);
    if (p, n_100) != (16, 49) {
        problems.push(format!("100x100 -> patch {p}, {n_100} tokens"));
    }
    // Independent count: one token per non-matrix feature and per small matrix, plus the patches of R_f.
    let rf = schema.feature(FeatureId::FreqCorrelation);
    let (r, c) = rf.max_dims;
    let q = (3..).map(|k| 1usize << k).find(|&q| r.div_ceil(q) * c.div_ceil(q) <= 64).unwrap();
    let expected_slot = (schema.features.len() - 1) + r.div_ceil(q) * c.div_ceil(q);
    if schema.tokens_per_slot() != expected_slot {
        problems.push(format!("slot has {} tokens, expected {expected_slot}", schema.tokens_per_slot()));
    }

    let seqs: Vec<_> = campaign.sequences().take(16).collect();
    let stats = compute_norm_stats(campaign.sequences().flat_map(|s| s.records())).map_err(|e| e.to_string())?;
    let ids: Vec<u64> = (0..seqs.len() as u64).collect();
    let mut tokens = build_token_sequences(&seqs, &ids, &schema, &stats).map_err(|e| e.to_string())?;
    let (mut worst_patch, mut worst_norm, mut fourier_out, mut mask_counts) = (0.0f64, 0.0f64, 0usize, Vec::new());
    for (seq, ts) in seqs.iter().zip(tokens.iter_mut()) {
        if ts.tokens.len() != schema.tokens_per_sequence() {
            problems.push(format!("sequence has {} tokens", ts.tokens.len()));
        }
        let (norm, scales) = normalize_sequence(seq, &stats).map_err(|e| e.to_string())?;
        for (slot, (n, orig)) in norm.iter().zip(seq.records()).enumerate() {
            // Patchify/depatchify through the token payloads.
            if let FeatureValue::Matrix(m) = decode_feature(ts, &schema, FeatureId::FreqCorrelation, slot).map_err(|e| e.to_string())? {
                worst_patch = worst_patch.max(rel(&m, &n.freq_correlation));
            } else {
                problems.push("R_f did not decode to a matrix".into());
            }
            let back = denormalize_record(n, &stats, &scales).map_err(|e| e.to_string())?;
            let pairs = [
                (back.noise_covariance.to_cmat(), orig.noise_covariance.to_cmat()),
                (back.time_covariance.to_cmat(), orig.time_covariance.to_cmat()),
                (back.precoder.to_cmat(), orig.precoder.to_cmat()),
            ];
            for (a, b) in &pairs {
                worst_norm = worst_norm.max(rel(a, b));
            }
            for (a, b) in [
                (back.delay_center, orig.delay_center),
                (back.delay_length, orig.delay_length),
                (back.doppler_width, orig.doppler_width),
                (back.spectral_efficiency, orig.spectral_efficiency),
            ] {
                worst_norm = worst_norm.max((a - b).abs() / b.abs().max(1e-300));
            }
            if back.rank != orig.rank || back.n_subcarriers != orig.n_subcarriers {
                problems.push("rank or K changed in a round trip".into());
            }
        }
        fourier_out += ts
            .tokens
            .iter()
            .filter(|t| t.kind == FeatureKind::Scalar)
            .flat_map(|t| &t.payload)
            .filter(|v| !(-1.0..=1.0).contains(*v))
            .count();
        apply_mask_plan(ts, MaskMode::Pretrain, 99, 5).map_err(|e| e.to_string())?;
        mask_counts.push(ts.masked_pairs().len());
    }
    if worst_patch >= ROUND_TRIP_REL_TOL {
        problems.push(format!("patch round trip error {worst_patch:.2e}"));
    }
    if worst_norm >= ROUND_TRIP_REL_TOL {
        problems.push(format!("normalisation round trip error {worst_norm:.2e}"));
    }
    if fourier_out > 0 {
        problems.push(format!("{fourier_out} Fourier values outside [-1, 1]"));
    }
    if mask_counts.iter().any(|&m| m != PRETRAIN_MASKS) {
        problems.push(format!("pretrain mask counts {mask_counts:?}"));
    }
    let detail = format!(
        "100x100 -> {n_100} tokens at patch {p}; {} tokens/slot, {} /sequence; patch err {worst_patch:.1e}, \
         norm err {worst_norm:.1e}; {PRETRAIN_MASKS} masks/sequence",
        schema.tokens_per_slot(),
        schema.tokens_per_sequence()
    );
    check(problems.is_empty(), detail, problems.join("; "))
}

fn end_to_end_determinism() -> Outcome {
    let mut settings = CampaignSettings::new(77, 2);
    settings.snr_draws = 2;
    settings.slots_per_run = 10;
    let mut digests = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let campaign = run_campaign(&settings).map_err(|e| e.to_string())?;
        let m = write_dataset(dir.path(), &campaign, &WriteSettings::default()).map_err(|e| e.to_string())?;
        let on_disk = Dataset::load(dir.path()).map_err(|e| e.to_string())?.manifest.digest();
        digests.push((m.digest(), on_disk));
    }
    let detail = format!("manifest digests {} / {}", &digests[0].0[..16], &digests[1].0[..16]);
    check(
        digests[0] == digests[1] && digests[0].0 == digests[0].1,
        detail.clone(),
        detail,
    )
}

fn main() {
    let mut failed = 0;
    let mut report = |name: &str, outcome: Outcome| {
        match &outcome {
            Ok(d) => println!("PASS  {name:<28} {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL  {name:<28} {d}");
            }
        }
    };
    report("genie recovery", genie_recovery());
    report("noise covariance", noise_covariance());
    report("denoising gain", denoising_gain());
    report("kronecker fast path", kronecker_fast_path());
    report("selection oracle", selection_oracle());
    match reference_campaign() {
        Ok(campaign) => {
            report("dataset arithmetic", dataset_arithmetic(&campaign));
            report("tokenizer conformance", tokenizer_conformance(&campaign));
        }
        Err(e) => {
            report("dataset arithmetic", Err(e.clone()));
            report("tokenizer conformance", Err(e));
        }
    }
    report("end-to-end determinism", end_to_end_determinism());
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
