use std::f64::consts::PI;

use num_complex::Complex64;

use crate::linalg::{condition_number, hermitian_eigen, hermitian_part, log_det_hpd, CMat};
use crate::{Error, Result};

/// Two scores closer than this (relative) count as tied; the earlier candidate wins.
pub const SCORE_TIE_TOLERANCE: f64 = 1e-12;

const MAX_CONDITION: f64 = 1e12;

/// Rank and precoder chosen for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderReport {
    /// Whitened spatial covariance the choice was made on.
    pub covariance: CMat,
    pub rank: usize,
    /// `N_T x rank`, unit Frobenius norm.
    pub precoder: CMat,
    /// Index of the precoder in the rank's codebook.
    pub precoder_index: usize,
    /// Best score per rank, `scores[r - 1]`.
    pub scores: Vec<f64>,
    pub codebook_id: String,
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Every `rank`-subset of the columns of the unitary `N_T`-point DFT matrix,
/// scaled to unit Frobenius norm, in lexicographic order of the column indices.
pub fn build_dft_codebook(n_tx: usize, rank: usize) -> Result<Vec<CMat>> {
    if rank == 0 || rank > n_tx {
        return Err(Error::InvalidArgument(format!("rank {rank} not in 1..={n_tx}")));
    }
    let scale = 1.0 / ((n_tx * rank) as f64).sqrt();
    Ok(combinations(n_tx, rank)
        .into_iter()
        .map(|cols| {
            CMat::from_fn(n_tx, rank, |r, c| {
                Complex64::cis(-2.0 * PI * (r * cols[c]) as f64 / n_tx as f64) * scale
            })
        })
        .collect())
}

/// Hermitian part of `C_n`, diagonally loaded with `1e-9 tr(C_n)/N_R` (or
/// `1e-9` when the trace is zero) if it is ill-conditioned.
pub fn loaded_noise_covariance(noise_covariance: &CMat) -> CMat {
    let n_rx = noise_covariance.nrows();
    let mut c_n = hermitian_part(noise_covariance);
    if condition_number(&c_n) > MAX_CONDITION {
        let trace = c_n.trace().re;
        let eps = if trace > 0.0 { 1e-9 * trace / n_rx as f64 } else { 1e-9 };
        for i in 0..n_rx {
            c_n[(i, i)] += Complex64::new(eps, 0.0);
        }
    }
    c_n
}

/// `1/(B|S|) sum H^H C_n^{-1} H` over the given channel matrices.
///
/// `C_n` goes through [`loaded_noise_covariance`] before inversion.
pub fn whitened_spatial_covariance(channels: &[CMat], noise_covariance: &CMat) -> Result<CMat> {
    let first = channels.first().ok_or(Error::Empty("channel matrices"))?;
    let (n_rx, n_tx) = first.shape();
    if noise_covariance.shape() != (n_rx, n_rx) {
        return Err(Error::Shape("noise covariance must be N_R x N_R".into()));
    }
    let inverse = loaded_noise_covariance(noise_covariance)
        .cholesky()
        .ok_or(Error::Singular("noise covariance"))?
        .inverse();
    let mut acc = CMat::zeros(n_tx, n_tx);
    for h in channels {
        if h.shape() != (n_rx, n_tx) {
            return Err(Error::Shape("channel matrices differ in shape".into()));
        }
        acc += h.adjoint() * &inverse * h;
    }
    Ok(hermitian_part(&acc.unscale(channels.len() as f64)))
}

/// `log det(I + W^H C W)`.
pub fn log_det_gain(c_s: &CMat, w: &CMat) -> f64 {
    let r = w.ncols();
    let m = CMat::identity(r, r) + w.adjoint() * c_s * w;
    log_det_hpd(&m).unwrap_or_else(|_| {
        let (vals, _) = hermitian_eigen(&m);
        vals.iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).sum()
    })
}

fn improves(score: f64, best: f64) -> bool {
    score > best + SCORE_TIE_TOLERANCE * best.abs().max(1.0)
}

/// Index and score of the best codebook entry; the first of tied entries wins.
pub fn select_precoder(c_s: &CMat, codebook: &[CMat]) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (idx, w) in codebook.iter().enumerate() {
        let score = log_det_gain(c_s, w);
        match best {
            Some((_, b)) if !improves(score, b) => {}
            _ => best = Some((idx, score)),
        }
    }
    best.ok_or(Error::Empty("codebook"))
}

/// Best precoder per rank, then the rank with the highest score (smallest rank on ties).
///
/// `codebooks[r - 1]` is the codebook of rank `r`.
pub fn select_rank(c_s: &CMat, codebooks: &[Vec<CMat>]) -> Result<PrecoderReport> {
    if codebooks.is_empty() {
        return Err(Error::Empty("rank codebooks"));
    }
    let mut scores = Vec::with_capacity(codebooks.len());
    let mut best: Option<(usize, usize, f64)> = None;
    for (r, book) in codebooks.iter().enumerate() {
        let (idx, score) = select_precoder(c_s, book)?;
        scores.push(score);
        match best {
            Some((_, _, b)) if !improves(score, b) => {}
            _ => best = Some((r + 1, idx, score)),
        }
    }
    let (rank, precoder_index, _) = best.expect("non-empty");
    let precoder = codebooks[rank - 1][precoder_index].clone();
    Ok(PrecoderReport {
        covariance: c_s.clone(),
        rank,
        codebook_id: format!("dft{}-r{}-{}", precoder.nrows(), rank, precoder_index),
        precoder,
        precoder_index,
        scores,
    })
}
