//! Mean-based comparison tests: studentized max, Srivastava's scalar-invariant
//! sum test, and their Cauchy combination.

use serde::{Deserialize, Serialize};

use crate::combo::cauchy_combine;
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::maxtest::{gumbel_sf, max_centering};
use crate::sumtest::normal_sf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaselineMethod {
    ClxMax,
    SrivastavaSum,
    NormalCombo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineOutcome {
    pub statistic: f64,
    pub p_value: f64,
    pub method: BaselineMethod,
}

impl BaselineOutcome {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

struct Moments {
    mean: Vec<f64>,
    var: Vec<f64>,
}

fn moments(x: &DataMatrix) -> Result<Moments> {
    let mean = x.column_means();
    let var = x.column_variances(&mean);
    if let Some(column) = var.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::DegenerateColumn { column });
    }
    Ok(Moments { mean, var })
}

/// `max_j n xbar_j^2 / s_j^2`, calibrated by the same Gumbel limit as the
/// spatial-sign max test.
pub fn clx_max_test(x: &DataMatrix) -> Result<BaselineOutcome> {
    let (n, p) = (x.nrows(), x.ncols());
    if n < 2 {
        return Err(Error::SampleTooSmall { needed: 2, got: n });
    }
    if p < 3 {
        return Err(Error::DimensionTooSmall { needed: 3, got: p });
    }
    let m = moments(x)?;
    let statistic = m
        .mean
        .iter()
        .zip(&m.var)
        .map(|(mu, v)| n as f64 * mu * mu / v)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(BaselineOutcome {
        statistic,
        p_value: gumbel_sf(statistic - max_centering(p)),
        method: BaselineMethod::ClxMax,
    })
}

/// Srivastava's test with `m = n - 1` degrees of freedom:
///
/// ```text
///   T = (n xbar' D_S^{-1} xbar - m p / (m - 2)) / sqrt(2 (tr R^2 - p^2/m) c),
///   c = 1 + tr R^2 / p^{3/2},
/// ```
///
/// where `R` is the sample correlation matrix. One-sided normal p-value.
pub fn srivastava_sum_test(x: &DataMatrix) -> Result<BaselineOutcome> {
    let (n, p) = (x.nrows(), x.ncols());
    if n < 4 {
        return Err(Error::SampleTooSmall { needed: 4, got: n });
    }
    if p < 2 {
        return Err(Error::DimensionTooSmall { needed: 2, got: p });
    }
    let mo = moments(x)?;
    let nf = n as f64;
    let pf = p as f64;
    let dof = nf - 1.0;

    let quad: f64 = mo.mean.iter().zip(&mo.var).map(|(mu, v)| mu * mu / v).sum::<f64>() * nf;

    // tr(R^2) = |Y Y'|_F^2 / m^2 with Y the standardized centered rows.
    let inv_sd: Vec<f64> = mo.var.iter().map(|v| 1.0 / v.sqrt()).collect();
    let mut y = DataMatrix::zeros(n, p);
    for i in 0..n {
        for (((o, xv), mu), s) in y.row_mut(i).iter_mut().zip(x.row(i)).zip(&mo.mean).zip(&inv_sd) {
            *o = (xv - mu) * s;
        }
    }
    let mut frob = 0.0;
    for a in 0..n {
        let ya = y.row(a);
        let diag: f64 = ya.iter().map(|v| v * v).sum();
        frob += diag * diag;
        for b in a + 1..n {
            let g: f64 = ya.iter().zip(y.row(b)).map(|(u, v)| u * v).sum();
            frob += 2.0 * g * g;
        }
    }
    let tr_r2 = frob / (dof * dof);
    let spread = tr_r2 - pf * pf / dof;
    if !(spread > 0.0) {
        return Err(Error::InvalidInput(format!(
            "variance estimate of the sum statistic is not positive ({spread})"
        )));
    }
    let c = 1.0 + tr_r2 / pf.powf(1.5);
    let statistic = (quad - dof * pf / (dof - 2.0)) / (2.0 * spread * c).sqrt();
    Ok(BaselineOutcome {
        statistic,
        p_value: normal_sf(statistic),
        method: BaselineMethod::SrivastavaSum,
    })
}

/// Cauchy combination of [`clx_max_test`] and [`srivastava_sum_test`].
pub fn normal_combo_test(x: &DataMatrix) -> Result<BaselineOutcome> {
    let max = clx_max_test(x)?;
    let sum = srivastava_sum_test(x)?;
    combine_baselines(&max, &sum)
}

pub(crate) fn combine_baselines(max: &BaselineOutcome, sum: &BaselineOutcome) -> Result<BaselineOutcome> {
    let combo = cauchy_combine(max.p_value, sum.p_value)?;
    Ok(BaselineOutcome {
        statistic: combo.cauchy_stat,
        p_value: combo.p_cc,
        method: BaselineMethod::NormalCombo,
    })
}
