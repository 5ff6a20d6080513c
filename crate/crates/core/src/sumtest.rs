//! Sum-type spatial-sign test with leave-two-out diagonal scaling.
//!
//! `T_SUM = 2/(n(n-1)) sum_{i<j} U(D_ij^{-1/2} X_i)^T U(D_ij^{-1/2} X_j)`, where
//! `D_ij` is the diagonal scatter estimated without rows `i` and `j`. The
//! statistic is standardized by `sigma_n^2 = 2 tr(R^2) / (n(n-1)p^2)` with
//! `tr(R^2)` estimated from the squared inner products of the leave-two-out
//! centered signs.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::hr::{hr_estimate, leave_two_out_sweep, HREstimate, SolverConfig};
use crate::sign::{dot, normalize_in_place, standardize_into};

/// How the pairwise nuisance estimates `(theta_ij, D_ij)` are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeaveOutMode {
    /// Re-solve the estimating equations without rows `i, j` for every pair.
    #[default]
    #[serde(alias = "exact-leave-two-out")]
    Exact,
    /// Reuse the full-sample estimate for every pair. Approximate, O(1) solves.
    SharedDhat,
}

impl LeaveOutMode {
    pub fn is_approximate(self) -> bool {
        matches!(self, LeaveOutMode::SharedDhat)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SumTestOutcome {
    pub t_sum: f64,
    pub sigma_hat: f64,
    /// `t_sum / sigma_hat`.
    pub normalized: f64,
    /// One-sided, `1 - Phi(normalized)`.
    pub p_value: f64,
    pub tr_r2_hat: f64,
    pub mode: LeaveOutMode,
    /// Leave-two-out solves that hit `max_iter` (always 0 for `SharedDhat`).
    pub nonconverged_pairs: usize,
}

impl SumTestOutcome {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Standard normal cdf.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Standard normal upper tail `1 - Phi(x)`.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

pub fn t_sum(x: &DataMatrix, cfg: &SolverConfig, mode: LeaveOutMode) -> Result<SumTestOutcome> {
    check_shape(x)?;
    let full = hr_estimate(x, cfg)?;
    t_sum_from_estimate(x, cfg, mode, &full)
}

/// [`t_sum`] given the full-sample estimate, which seeds every leave-two-out solve.
pub fn t_sum_from_estimate(
    x: &DataMatrix,
    cfg: &SolverConfig,
    mode: LeaveOutMode,
    full: &HREstimate,
) -> Result<SumTestOutcome> {
    check_shape(x)?;
    let sums = pair_sums(x, cfg, mode, full)?;
    let n = x.nrows() as f64;
    let p = x.ncols() as f64;
    let pairs = n * (n - 1.0);
    let t_sum = 2.0 * sums.cross / pairs;
    let tr_r2_hat = tr_from_sum(sums.centered_sq, n, p);
    if !(tr_r2_hat > 0.0) {
        return Err(Error::InvalidInput(
            "trace estimate is zero; all centered signs are orthogonal".into(),
        ));
    }
    let sigma_hat = (2.0 * tr_r2_hat / (pairs * p * p)).sqrt();
    let normalized = t_sum / sigma_hat;
    Ok(SumTestOutcome {
        t_sum,
        sigma_hat,
        normalized,
        p_value: normal_sf(normalized),
        tr_r2_hat,
        mode,
        nonconverged_pairs: sums.nonconverged,
    })
}

/// Leave-two-out estimate of `tr(R^2)`.
pub fn tr_r2_hat(x: &DataMatrix, cfg: &SolverConfig, mode: LeaveOutMode) -> Result<f64> {
    check_shape(x)?;
    let full = hr_estimate(x, cfg)?;
    let sums = pair_sums(x, cfg, mode, &full)?;
    Ok(tr_from_sum(
        sums.centered_sq,
        x.nrows() as f64,
        x.ncols() as f64,
    ))
}

// The ordered double sum over j != i is twice the unordered one.
fn tr_from_sum(centered_sq: f64, n: f64, p: f64) -> f64 {
    p * p / (n * (n - 1.0)) * 2.0 * centered_sq
}

fn check_shape(x: &DataMatrix) -> Result<()> {
    if x.nrows() < 4 {
        return Err(Error::SampleTooSmall {
            needed: 4,
            got: x.nrows(),
        });
    }
    if x.ncols() < 2 {
        return Err(Error::DimensionTooSmall {
            needed: 2,
            got: x.ncols(),
        });
    }
    Ok(())
}

struct PairSums {
    /// `sum_{i<j} U(D^{-1/2} X_i)^T U(D^{-1/2} X_j)`
    cross: f64,
    /// `sum_{i<j} (U(D^{-1/2}(X_i - theta))^T U(D^{-1/2}(X_j - theta)))^2`
    centered_sq: f64,
    nonconverged: usize,
}

/// Sign inner products of rows `i` and `j`, raw and centered at `theta`.
pub(crate) fn pair_terms(x: &DataMatrix, i: usize, j: usize, theta: &[f64], d: &[f64]) -> (f64, f64) {
    let p = x.ncols();
    let inv_sqrt_d: Vec<f64> = d.iter().map(|v| 1.0 / v.sqrt()).collect();
    let zero = vec![0.0; p];
    let mut buf = vec![0.0; 4 * p];
    let (ui, rest) = buf.split_at_mut(p);
    let (uj, rest) = rest.split_at_mut(p);
    let (ci, cj) = rest.split_at_mut(p);
    standardize_into(x.row(i), &zero, &inv_sqrt_d, ui);
    standardize_into(x.row(j), &zero, &inv_sqrt_d, uj);
    standardize_into(x.row(i), theta, &inv_sqrt_d, ci);
    standardize_into(x.row(j), theta, &inv_sqrt_d, cj);
    for v in [&mut *ui, &mut *uj, &mut *ci, &mut *cj] {
        normalize_in_place(v);
    }
    (dot(ui, uj), dot(ci, cj))
}

fn pair_sums(
    x: &DataMatrix,
    cfg: &SolverConfig,
    mode: LeaveOutMode,
    full: &HREstimate,
) -> Result<PairSums> {
    let terms: Vec<(f64, f64, bool)> = match mode {
        LeaveOutMode::Exact => leave_two_out_sweep(x, &cfg.warm_started(full), |i, j, est| {
            let (a, b) = pair_terms(x, i, j, &est.theta, &est.d);
            (a, b, est.converged)
        })?,
        LeaveOutMode::SharedDhat => shared_terms(x, full),
    };
    // Fixed lexicographic reduction order, independent of the thread count.
    let mut sums = PairSums {
        cross: 0.0,
        centered_sq: 0.0,
        nonconverged: 0,
    };
    for (a, b, converged) in terms {
        sums.cross += a;
        sums.centered_sq += b * b;
        sums.nonconverged += usize::from(!converged);
    }
    Ok(sums)
}

fn shared_terms(x: &DataMatrix, full: &HREstimate) -> Vec<(f64, f64, bool)> {
    let (n, p) = (x.nrows(), x.ncols());
    let inv_sqrt_d: Vec<f64> = full.d.iter().map(|v| 1.0 / v.sqrt()).collect();
    let zero = vec![0.0; p];
    let mut raw = DataMatrix::zeros(n, p);
    let mut centered = DataMatrix::zeros(n, p);
    for i in 0..n {
        standardize_into(x.row(i), &zero, &inv_sqrt_d, raw.row_mut(i));
        normalize_in_place(raw.row_mut(i));
        standardize_into(x.row(i), &full.theta, &inv_sqrt_d, centered.row_mut(i));
        normalize_in_place(centered.row_mut(i));
    }
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push((
                dot(raw.row(i), raw.row(j)),
                dot(centered.row(i), centered.row(j)),
                true,
            ));
        }
    }
    out
}
