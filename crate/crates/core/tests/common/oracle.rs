//! Independent reference implementations used to check the library.

use std::f64::consts::PI;

use csi_forge::linalg::CMat;
use nalgebra::SymmetricEigen;
use num_complex::Complex64;

/// Rank-`r` DFT codebook: subsets of DFT columns in lexicographic order, unit Frobenius norm.
pub fn codebook(n_tx: usize, r: usize) -> Vec<CMat> {
    let mut subsets: Vec<Vec<usize>> = (0u32..1 << n_tx)
        .filter(|m| m.count_ones() as usize == r)
        .map(|m| (0..n_tx).filter(|&i| m >> i & 1 == 1).collect())
        .collect();
    subsets.sort();
    let norm = ((n_tx * r) as f64).sqrt();
    subsets
        .into_iter()
        .map(|cols| {
            let mut w = CMat::zeros(n_tx, r);
            for (c, &k) in cols.iter().enumerate() {
                for row in 0..n_tx {
                    let angle = -2.0 * PI * ((row * k) % n_tx) as f64 / n_tx as f64;
                    w[(row, c)] = Complex64::new(angle.cos(), angle.sin()) / norm;
                }
            }
            w
        })
        .collect()
}

/// `sum ln(1 + eig(W^H C W))`.
pub fn score(c: &CMat, w: &CMat) -> f64 {
    let a = w.adjoint() * c * w;
    let a = (&a + a.adjoint()).scale(0.5);
    SymmetricEigen::new(a).eigenvalues.iter().map(|l| (1.0 + l).ln()).sum()
}

/// Index of the first score within the tie tolerance of the maximum.
pub fn argmax_first(scores: &[f64], rel_tol: f64) -> usize {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tol = rel_tol * max.abs().max(1.0);
    scores.iter().position(|&s| s >= max - tol).unwrap()
}

/// Exhaustive rank and precoder choice: `(rank, index, score)`.
pub fn select(c: &CMat, max_rank: usize, rel_tol: f64) -> (usize, usize, f64) {
    let n_tx = c.nrows();
    let per_rank: Vec<(usize, f64)> = (1..=max_rank)
        .map(|r| {
            let scores: Vec<f64> = codebook(n_tx, r).iter().map(|w| score(c, w)).collect();
            let i = argmax_first(&scores, rel_tol);
            (i, scores[i])
        })
        .collect();
    let best = argmax_first(&per_rank.iter().map(|p| p.1).collect::<Vec<_>>(), rel_tol);
    (best + 1, per_rank[best].0, per_rank[best].1)
}

/// Dense Kronecker-MMSE: `vec(Y) = R (R + a I)^{-1} vec(X)` with `R = R_t (x) R_f`
/// and column-major `vec` of `X` (`|S| x B`, so `vec` stacks time within frequency).
pub fn dense_mmse(r_time: &CMat, r_freq: &CMat, ratio: f64, x: &CMat) -> CMat {
    let (s, b) = (r_time.nrows(), r_freq.nrows());
    let n = s * b;
    // Column-major vec(X): index = m * s + l.
    let r = CMat::from_fn(n, n, |p, q| {
        let (m1, l1) = (p / s, p % s);
        let (m2, l2) = (q / s, q % s);
        r_freq[(m1, m2)] * r_time[(l1, l2)]
    });
    let mut a = r.clone();
    for i in 0..n {
        a[(i, i)] += Complex64::new(ratio, 0.0);
    }
    let v = nalgebra::DVector::from_fn(n, |p, _| x[(p % s, p / s)]);
    let y = &r * a.full_piv_lu().solve(&v).expect("regularised system is solvable");
    CMat::from_fn(s, b, |l, m| y[m * s + l])
}
