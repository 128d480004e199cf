//! Small dense complex linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Normalised sinc, `sin(pi x) / (pi x)` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// `(A + A^H) / 2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// Largest entry of `|A - A^H|`.
pub fn max_asymmetry(a: &CMat) -> f64 {
    (a - a.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigendecomposition of a Hermitian matrix. Eigenvalues are real.
pub fn hermitian_eigen(a: &CMat) -> (DVector<f64>, CMat) {
    let eig = SymmetricEigen::new(hermitian_part(a));
    (eig.eigenvalues, eig.eigenvectors)
}

/// `log det(A)` for a Hermitian positive definite matrix, via Cholesky.
pub fn log_det_hpd(a: &CMat) -> Result<f64> {
    let chol = a
        .clone()
        .cholesky()
        .ok_or(Error::Singular("log-det argument is not positive definite"))?;
    Ok(chol.l_dirty().diagonal().iter().map(|d| 2.0 * d.re.ln()).sum())
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Ratio of extreme eigenvalues of a Hermitian PSD matrix (`inf` when singular).
pub fn condition_number(a: &CMat) -> f64 {
    let (vals, _) = hermitian_eigen(a);
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn real_identity(n: usize) -> CMat {
    CMat::identity(n, n)
}
