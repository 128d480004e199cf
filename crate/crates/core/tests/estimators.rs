mod common;

use common::oracle;
use csi_forge::chansim::{generate_channel, transmit_pilots, SimConfig};
use csi_forge::estimators::*;
use csi_forge::linalg::CMat;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn complex_matrix(rows: usize, cols: usize) -> impl Strategy<Value = CMat> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), rows * cols)
        .prop_map(move |v| DMatrix::from_iterator(rows, cols, v.into_iter().map(|(a, b)| Complex64::new(a, b))))
}

/// Random Hermitian PSD matrix with unit trace per dimension, times `scale`.
fn psd(n: usize) -> impl Strategy<Value = CMat> {
    (complex_matrix(n, n), -2.0f64..3.0).prop_map(move |(a, e)| {
        let c = &a * a.adjoint();
        let tr = c.trace().re.max(1e-12);
        c.scale(n as f64 / tr * 10f64.powf(e))
    })
}

fn correlation(n: usize) -> impl Strategy<Value = CMat> {
    psd(n).prop_map(|c| correlation_from_covariance(&c))
}

proptest! {
    #[test]
    fn kronecker_path_matches_dense_solve(
        (rt, rf, x) in (1usize..=4, 1usize..=8).prop_flat_map(|(s, b)| (correlation(s), correlation(b), complex_matrix(s, b))),
        ratio in 1e-3f64..10.0,
    ) {
        let fast = KroneckerMmse::new(&rt, &rf).apply(ratio, &x);
        let dense = oracle::dense_mmse(&rt, &rf, ratio, &x);
        prop_assert!((&fast - &dense).norm() <= 1e-8 * dense.norm().max(1e-12), "{}", (&fast - &dense).norm());
        let lib_dense = dense_mmse_apply(&rt, &rf, ratio, &x).unwrap();
        prop_assert!((&lib_dense - &dense).norm() <= 1e-8 * dense.norm().max(1e-12));
    }

    #[test]
    fn precoder_selection_matches_exhaustive_oracle(
        (n_tx, n_rx) in prop::sample::select(vec![(4usize, 1usize), (4, 2), (4, 4), (8, 1), (8, 2), (8, 4)]),
        seed in any::<u64>(),
    ) {
        let c = {
            let mut rng = csi_forge::seed::rng(seed);
            use rand::Rng;
            let k = rng.random_range(1..=n_tx);
            let a = DMatrix::from_fn(n_tx, k, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            (&a * a.adjoint()).scale(10f64.powf(rng.random_range(-2.0..3.0)))
        };
        let books: Vec<_> = (1..=n_rx).map(|r| build_dft_codebook(n_tx, r).unwrap()).collect();
        for (r, book) in books.iter().enumerate() {
            let reference = oracle::codebook(n_tx, r + 1);
            prop_assert_eq!(book.len(), reference.len());
            for (a, b) in book.iter().zip(&reference) {
                prop_assert!((a - b).norm() < 1e-12);
            }
        }
        let report = select_rank(&c, &books).unwrap();
        let (rank, idx, score) = oracle::select(&c, n_rx, SCORE_TIE_TOLERANCE);
        prop_assert_eq!((report.rank, report.precoder_index), (rank, idx));
        prop_assert!((report.scores[rank - 1] - score).abs() <= 1e-9 * score.abs().max(1.0));
    }

    #[test]
    fn correlation_has_unit_diagonal_and_is_hermitian(c in psd(5)) {
        let r = correlation_from_covariance(&c);
        for i in 0..5 {
            prop_assert_eq!(r[(i, i)], Complex64::new(1.0, 0.0));
        }
        prop_assert!((&r - r.adjoint()).norm() < 1e-12);
    }

    #[test]
    fn exact_sinc_correlation_is_recovered(k in 0usize..64, set in prop::sample::select(vec![vec![2usize, 8], vec![2, 6, 10], vec![4, 8, 12], vec![2, 5, 8, 11]])) {
        let grid = doppler_grid(64, 1.0, 1200.0);
        let t = SimConfig::reference().symbol_duration();
        let r = robust_time_correlation(grid[k], &set, t);
        let w = fit_doppler_width(&r, &grid, &set, t);
        // Several widths can give numerically identical matrices at tiny w T; the smallest wins.
        let rw = robust_time_correlation(w, &set, t);
        prop_assert!((rw - &r).norm() <= 1e-12);
        prop_assert!(w <= grid[k]);
    }

    #[test]
    fn robust_frequency_correlation_is_hermitian_toeplitz(mu in -1e-6f64..1e-6, len in 0.0f64..1e-6, b in 1usize..30) {
        let r = robust_frequency_correlation(mu, len, b, 180e3);
        for i in 0..b {
            prop_assert!((r[(i, i)] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
            for j in 0..b {
                prop_assert!((r[(i, j)] - r[(j, i)].conj()).norm() < 1e-15);
                if i + 1 < b && j + 1 < b {
                    prop_assert!((r[(i, j)] - r[(i + 1, j + 1)]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn robust_frequency_correlation_is_a_uniform_delay_average(mu in 0.0f64..5e-6, len in 1e-8f64..5e-6, b in 2usize..12) {
        // Midpoint rule over a uniform delay density on [mu - len/2, mu + len/2].
        let spacing = 180e3;
        let r = robust_frequency_correlation(mu, len, b, spacing);
        let n = 4000;
        for m in 0..b {
            let df = m as f64 * spacing;
            let avg: Complex64 = (0..n)
                .map(|k| {
                    let tau = mu - len / 2.0 + len * (k as f64 + 0.5) / n as f64;
                    Complex64::cis(-2.0 * std::f64::consts::PI * tau * df)
                })
                .sum::<Complex64>()
                / n as f64;
            prop_assert!((r[(m, 0)] - avg).norm() < 1e-4, "{} vs {}", r[(m, 0)], avg);
        }
    }

    #[test]
    fn circular_cover_contains_the_support(n in 1usize..64, raw in prop::collection::btree_set(0usize..64, 1..10)) {
        let d: Vec<usize> = raw.into_iter().filter(|&x| x < n).collect();
        prop_assume!(!d.is_empty());
        let (start, end) = min_circular_cover(&d, n).unwrap();
        let len = (end + n - start) % n + 1;
        for &x in &d {
            prop_assert!((x + n - start) % n < len);
        }
        // Brute force: no shorter arc covers every point.
        let best = (0..n)
            .map(|s| d.iter().map(|&x| (x + n - s) % n).max().unwrap() + 1)
            .min()
            .unwrap();
        prop_assert_eq!(len, best);
    }
}

#[test]
fn pipeline_record_is_consistent() {
    let mut cfg = SimConfig::reference();
    cfg.n_tx = 8;
    cfg.n_rx = 4;
    cfg.snr_db = 20.0;
    let chan = generate_channel(&cfg, 1, 3).unwrap();
    let obs = transmit_pilots(&cfg, &chan, 0, 4).unwrap();
    let est = estimate_slot(&obs, &PipelineSettings::default()).unwrap();
    let rec = est.to_record(&cfg, 0);
    rec.validate().unwrap();
    assert_eq!(rec.n_rx(), 4);
    assert_eq!(rec.n_tx(), 8);
    assert_eq!(rec.n_groups(), cfg.n_groups);
    assert!(rec.spectral_efficiency.is_finite());
    assert!((rec.precoder.to_cmat().norm() - 1.0).abs() < 1e-6);
    assert!(est.power.value >= POWER_FLOOR);
    // The recorded scalars are the antenna averages.
    let mean_mu = est.delay.mu.iter().sum::<f64>() / 4.0;
    assert!((rec.delay_center - mean_mu).abs() < 1e-18);
    assert_eq!(run_pipeline(&obs, &PipelineSettings::default()).unwrap(), rec);
}

#[test]
fn genie_values_from_a_noiseless_slot() {
    let mut cfg = SimConfig::reference();
    cfg.speed_kmh = 90.0;
    let chan = generate_channel(&cfg, 1, 12).unwrap();
    let g = genie_values(&cfg, &chan, 0, &PipelineSettings::default()).unwrap();
    assert_eq!(g.mu.len(), cfg.n_rx);
    assert_eq!(g.mu_star, chan.genie_mu);
    // The genie window contains the construction window up to the taper's main lobe.
    let slack = DelayTaper::Blackman.main_lobe_half_width() * g.bin_seconds;
    for i in 0..cfg.n_rx {
        assert!(g.len[i] + 2.0 * slack >= g.len_star, "{} vs {}", g.len[i], g.len_star);
    }
}
