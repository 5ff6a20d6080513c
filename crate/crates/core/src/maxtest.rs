//! Scalar-invariant max-type test and its Gumbel calibration.

use std::f64::consts::PI;

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::hr::{hr_estimate, HREstimate, SolverConfig};
use crate::sign::{decompose, zeta1_hat};

#[derive(Debug, Clone, PartialEq)]
pub struct MaxTestOutcome {
    pub t_max: f64,
    /// `t_max - 2 log p + log log p`.
    pub normalized: f64,
    pub p_value: f64,
    pub zeta1: f64,
    pub argmax_coord: usize,
    pub hr: HREstimate,
}

impl MaxTestOutcome {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Limiting null cdf `F(x) = exp(-pi^{-1/2} exp(-x/2))`.
pub fn gumbel_cdf(x: f64) -> f64 {
    (-(-x / 2.0).exp() / PI.sqrt()).exp()
}

/// Upper tail `1 - F(x)`, accurate when `F(x)` is close to one.
pub fn gumbel_sf(x: f64) -> f64 {
    -(-(-x / 2.0).exp() / PI.sqrt()).exp_m1()
}

/// Inverse of [`gumbel_cdf`]: `-log(pi) - 2 log log(1/level)`.
pub fn gumbel_quantile(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidLevel(level));
    }
    Ok(-PI.ln() - 2.0 * (-level.ln()).ln())
}

/// Centering used by both max-type statistics: `2 log p - log log p`.
pub(crate) fn max_centering(p: usize) -> f64 {
    let lp = (p as f64).ln();
    2.0 * lp - lp.ln()
}

/// Max-type test statistic
/// `T_MAX = n |D^{-1/2} theta|_inf^2 zeta1^2 p (1 - n^{-1/2})`
/// computed from the joint location/scatter estimate.
pub fn t_max(x: &DataMatrix, cfg: &SolverConfig) -> Result<MaxTestOutcome> {
    let hr = hr_estimate(x, cfg)?;
    t_max_from_estimate(x, hr)
}

/// [`t_max`] with an already computed full-sample estimate.
pub fn t_max_from_estimate(x: &DataMatrix, hr: HREstimate) -> Result<MaxTestOutcome> {
    let (n, p) = (x.nrows(), x.ncols());
    if p < 3 {
        return Err(Error::DimensionTooSmall { needed: 3, got: p });
    }
    if n < 2 {
        return Err(Error::SampleTooSmall { needed: 2, got: n });
    }
    let dec = decompose(x, &hr.theta, &hr.d)?;
    let zeta1 = zeta1_hat(&dec.radii)?;

    let (argmax_coord, max_sq) = hr
        .theta
        .iter()
        .zip(&hr.d)
        .map(|(t, d)| t * t / d)
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (j, v)| if v > best.1 { (j, v) } else { best });

    let nf = n as f64;
    let t_max = nf * max_sq * zeta1 * zeta1 * p as f64 * (1.0 - nf.powf(-0.5));
    let normalized = t_max - max_centering(p);
    Ok(MaxTestOutcome {
        t_max,
        normalized,
        p_value: gumbel_sf(normalized),
        zeta1,
        argmax_coord,
        hr,
    })
}
