//! Spatial signs, scaled radii and the inverse-radius moment estimate.
//!
//! For a location `theta` and positive diagonal scales `d`, each observation
//! is standardized as `eps_i = D^{-1/2} (x_i - theta)`; its spatial sign is
//! `eps_i / |eps_i|` (or zero when `eps_i = 0`) and its radius is `|eps_i|`.

use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// Euclidean norms below this are treated as exactly zero.
pub const NORM_FLOOR: f64 = 1e-300;

/// Row-wise spatial signs and radii of a standardized sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SignDecomposition {
    pub signs: DataMatrix,
    pub radii: Vec<f64>,
}

/// `x / |x|` for nonzero `x`, the zero vector otherwise.
pub fn spatial_sign(x: &[f64]) -> Result<Vec<f64>> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("spatial sign of a non-finite vector".into()));
    }
    let mut out = x.to_vec();
    normalize_in_place(&mut out);
    Ok(out)
}

/// Sum of squares with independent partial sums, which lets the compiler vectorize.
#[inline]
pub(crate) fn sum_sq(v: &[f64]) -> f64 {
    dot(v, v)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[4]) + (acc[1] + acc[5]) + (acc[2] + acc[6]) + (acc[3] + acc[7]) + tail
}

/// Normalizes `v` to unit length in place and returns its original norm.
/// Vectors with norm below [`NORM_FLOOR`] are set to zero and report norm 0.
#[inline]
pub(crate) fn normalize_in_place(v: &mut [f64]) -> f64 {
    let norm = sum_sq(v).sqrt();
    if norm < NORM_FLOOR {
        v.iter_mut().for_each(|a| *a = 0.0);
        return 0.0;
    }
    v.iter_mut().for_each(|a| *a /= norm);
    norm
}

/// Writes `D^{-1/2}(x - theta)` into `out` given `inv_sqrt_d = d^{-1/2}`.
#[inline]
pub(crate) fn standardize_into(x: &[f64], theta: &[f64], inv_sqrt_d: &[f64], out: &mut [f64]) {
    for (((o, xv), t), s) in out.iter_mut().zip(x).zip(theta).zip(inv_sqrt_d) {
        *o = (xv - t) * s;
    }
}

pub(crate) fn check_scales(d: &[f64]) -> Result<()> {
    match d.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
        Some(index) => Err(Error::InvalidScale {
            index,
            value: d[index],
        }),
        None => Ok(()),
    }
}

/// Spatial signs `U(D^{-1/2}(X_i - theta))` and radii `|D^{-1/2}(X_i - theta)|`.
pub fn decompose(x: &DataMatrix, theta: &[f64], d: &[f64]) -> Result<SignDecomposition> {
    let p = x.ncols();
    for len in [theta.len(), d.len()] {
        if len != p {
            return Err(Error::DimensionMismatch { expected: p, got: len });
        }
    }
    check_scales(d)?;
    let inv_sqrt_d: Vec<f64> = d.iter().map(|v| 1.0 / v.sqrt()).collect();
    let mut signs = DataMatrix::zeros(x.nrows(), p);
    let mut radii = Vec::with_capacity(x.nrows());
    for i in 0..x.nrows() {
        let out = signs.row_mut(i);
        standardize_into(x.row(i), theta, &inv_sqrt_d, out);
        radii.push(normalize_in_place(out));
    }
    Ok(SignDecomposition { signs, radii })
}

/// Mean reciprocal radius, the plug-in estimate of `E(R^{-1})`.
pub fn zeta1_hat(radii: &[f64]) -> Result<f64> {
    if radii.is_empty() {
        return Err(Error::SampleTooSmall { needed: 1, got: 0 });
    }
    let mut acc = 0.0;
    for (row, &r) in radii.iter().enumerate() {
        if !(r >= NORM_FLOOR) {
            return Err(Error::DegenerateSample { row });
        }
        acc += 1.0 / r;
    }
    Ok(acc / radii.len() as f64)
}
