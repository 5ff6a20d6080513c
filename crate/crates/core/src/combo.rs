//! Cauchy combination of the max-type and sum-type p-values.

use std::f64::consts::PI;

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::hr::{hr_estimate, SolverConfig};
use crate::maxtest::{t_max_from_estimate, MaxTestOutcome};
use crate::sumtest::{t_sum_from_estimate, LeaveOutMode, SumTestOutcome};

/// p-values are clamped into `[CLAMP_EPS, 1 - CLAMP_EPS]` before the tangent transform.
pub const CLAMP_EPS: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComboOutcome {
    pub p_max: f64,
    pub p_sum: f64,
    pub cauchy_stat: f64,
    pub p_cc: f64,
    /// Set when either input p-value had to be clamped.
    pub clamped: bool,
}

impl ComboOutcome {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_cc < alpha
    }
}

/// Standard Cauchy cdf.
pub fn cauchy_cdf(t: f64) -> f64 {
    0.5 + t.atan() / PI
}

/// `1 - G(t)`; uses `atan(1/t)/pi` in the upper tail to keep precision.
fn cauchy_sf(t: f64) -> f64 {
    if t > 1.0 {
        (1.0 / t).atan() / PI
    } else {
        0.5 - t.atan() / PI
    }
}

/// Equal-weight Cauchy combination
/// `p_cc = 1 - G(0.5 tan((0.5 - p_max) pi) + 0.5 tan((0.5 - p_sum) pi))`.
pub fn cauchy_combine(p_max: f64, p_sum: f64) -> Result<ComboOutcome> {
    let mut clamped = false;
    let mut prep = |p: f64| -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidInput(format!("p-value {p} is outside [0, 1]")));
        }
        let c = p.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS);
        clamped |= c != p;
        Ok(c)
    };
    let a = prep(p_max)?;
    let b = prep(p_sum)?;
    let cauchy_stat = 0.5 * ((0.5 - a) * PI).tan() + 0.5 * ((0.5 - b) * PI).tan();
    Ok(ComboOutcome {
        p_max,
        p_sum,
        cauchy_stat,
        p_cc: cauchy_sf(cauchy_stat).clamp(0.0, 1.0),
        clamped,
    })
}

/// All three spatial-sign tests on one sample, sharing the full-sample estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialSignOutcome {
    pub max: MaxTestOutcome,
    pub sum: SumTestOutcome,
    pub combo: ComboOutcome,
}

pub fn spatial_sign_tests(
    x: &DataMatrix,
    cfg: &SolverConfig,
    mode: LeaveOutMode,
) -> Result<SpatialSignOutcome> {
    if x.nrows() < 4 {
        return Err(Error::SampleTooSmall {
            needed: 4,
            got: x.nrows(),
        });
    }
    if x.ncols() < 3 {
        return Err(Error::DimensionTooSmall {
            needed: 3,
            got: x.ncols(),
        });
    }
    let full = hr_estimate(x, cfg)?;
    let sum = t_sum_from_estimate(x, cfg, mode, &full)?;
    let max = t_max_from_estimate(x, full)?;
    let combo = cauchy_combine(max.p_value, sum.p_value)?;
    Ok(SpatialSignOutcome { max, sum, combo })
}

/// Max-sum test: Cauchy combination of the max-type and sum-type p-values.
pub fn ss_cc_test(x: &DataMatrix, cfg: &SolverConfig, mode: LeaveOutMode) -> Result<ComboOutcome> {
    spatial_sign_tests(x, cfg, mode).map(|o| o.combo)
}
