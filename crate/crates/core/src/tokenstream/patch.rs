use num_complex::Complex64;

use crate::linalg::CMat;
use crate::{Error, Result};

/// One flattened patch: real parts then imaginary parts, row-major within the patch.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub row: usize,
    pub col: usize,
    pub payload: Vec<f64>,
    /// `true` where the element is zero padding.
    pub pad_mask: Vec<bool>,
}

/// Zero-pads `m` to `rows x cols`.
pub fn pad_matrix(m: &CMat, rows: usize, cols: usize) -> Result<CMat> {
    if m.nrows() > rows || m.ncols() > cols {
        return Err(Error::Shape(format!(
            "{}x{} matrix exceeds pad target {rows}x{cols}",
            m.nrows(),
            m.ncols()
        )));
    }
    let mut out = CMat::zeros(rows, cols);
    out.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
    Ok(out)
}

/// Raster-order patches of a padded matrix whose top-left `valid` block is data.
pub fn patchify(padded: &CMat, valid: (usize, usize), p1: usize, p2: usize) -> Result<Vec<Patch>> {
    let (rows, cols) = padded.shape();
    if p1 == 0 || p2 == 0 || rows % p1 != 0 || cols % p2 != 0 {
        return Err(Error::Shape(format!("{rows}x{cols} is not a multiple of the {p1}x{p2} patch")));
    }
    if valid.0 > rows || valid.1 > cols {
        return Err(Error::Shape("valid region exceeds the padded matrix".into()));
    }
    let n = p1 * p2;
    let mut out = Vec::with_capacity((rows / p1) * (cols / p2));
    for pr in 0..rows / p1 {
        for pc in 0..cols / p2 {
            let mut payload = vec![0.0; 2 * n];
            let mut pad_mask = vec![false; 2 * n];
            for a in 0..p1 {
                for b in 0..p2 {
                    let (r, c) = (pr * p1 + a, pc * p2 + b);
                    let k = a * p2 + b;
                    let z = padded[(r, c)];
                    payload[k] = z.re;
                    payload[n + k] = z.im;
                    let pad = r >= valid.0 || c >= valid.1;
                    pad_mask[k] = pad;
                    pad_mask[n + k] = pad;
                }
            }
            out.push(Patch { row: pr, col: pc, payload, pad_mask });
        }
    }
    Ok(out)
}

/// Reassembles the top-left `rows x cols` block from raster-order patch payloads.
pub fn depatchify(payloads: &[&[f64]], grid: (usize, usize), p1: usize, p2: usize, rows: usize, cols: usize) -> Result<CMat> {
    if payloads.len() != grid.0 * grid.1 {
        return Err(Error::Shape(format!("{} patches for a {}x{} grid", payloads.len(), grid.0, grid.1)));
    }
    if rows > grid.0 * p1 || cols > grid.1 * p2 {
        return Err(Error::Shape("requested block exceeds the patch grid".into()));
    }
    let n = p1 * p2;
    if payloads.iter().any(|p| p.len() != 2 * n) {
        return Err(Error::Shape("patch payload length mismatch".into()));
    }
    Ok(CMat::from_fn(rows, cols, |r, c| {
        let p = payloads[(r / p1) * grid.1 + c / p2];
        let k = (r % p1) * p2 + c % p2;
        Complex64::new(p[k], p[n + k])
    }))
}
