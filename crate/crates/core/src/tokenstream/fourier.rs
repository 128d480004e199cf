use std::f64::consts::PI;

use super::schema::FourierGrid;
use crate::{Error, Result};

/// `[cos(2 pi x / l_0), sin(2 pi x / l_0), cos(2 pi x / l_1), ...]`.
pub fn fourier_encode(x: f64, grid: &FourierGrid) -> Result<Vec<f64>> {
    grid.validate()?;
    Ok(grid
        .lambdas()
        .iter()
        .flat_map(|l| {
            let a = 2.0 * PI * x / l;
            [a.cos(), a.sin()]
        })
        .collect())
}

/// Inverse of [`fourier_encode`] for `|x| < lambda_max / 2`.
///
/// The coarsest wavelength fixes the period; each finer one refines the
/// estimate by choosing the phase wrap closest to the running estimate.
pub fn fourier_decode(payload: &[f64], grid: &FourierGrid) -> Result<f64> {
    grid.validate()?;
    if payload.len() != grid.dim {
        return Err(Error::Shape(format!("Fourier payload of {} values, expected {}", payload.len(), grid.dim)));
    }
    let lambdas = grid.lambdas();
    let phase = |i: usize| payload[2 * i + 1].atan2(payload[2 * i]);
    let last = lambdas.len() - 1;
    let mut x = phase(last) * lambdas[last] / (2.0 * PI);
    for i in (0..last).rev() {
        let l = lambdas[i];
        let frac = phase(i) * l / (2.0 * PI);
        let wraps = ((x - frac) / l).round();
        let refined = frac + wraps * l;
        // Stop once the wavelength is too short for the payload precision.
        if (refined - x).abs() > 0.25 * l {
            break;
        }
        x = refined;
    }
    Ok(x)
}
