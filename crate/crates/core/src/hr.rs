//! Joint spatial median and diagonal scatter estimation.
//!
//! The estimator solves the two estimating equations
//!
//! ```text
//!   (1/n) sum_i U(eps_i) = 0,     (p/n) diag{ sum_i U(eps_i) U(eps_i)^T } = I_p,
//! ```
//!
//! with `eps_i = D^{-1/2}(X_i - theta)`, by the fixed-point recursion
//!
//! 1. `eps_i <- D^{-1/2}(X_i - theta)`
//! 2. `theta <- theta + D^{1/2} sum_i U(eps_i) / sum_i |eps_i|^{-1}`
//! 3. `D <- p D^{1/2} diag{ n^{-1} sum_i U(eps_i) U(eps_i)^T } D^{1/2}`
//!
//! Both updates use the residuals from step 1 of the same sweep.

use rayon::prelude::*;

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::sign::{check_scales, standardize_into, sum_sq, NORM_FLOOR};

/// Location/diagonal-scatter estimate with convergence metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct HREstimate {
    pub theta: Vec<f64>,
    /// Diagonal of `D`, i.e. squared scales.
    pub d: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `| n^{-1} sum_i U(eps_i) |` at the returned iterate.
    pub residual_location: f64,
    /// `max_j | (p/n) sum_i U(eps_i)_j^2 - 1 |` at the returned iterate.
    pub residual_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum Init {
    /// Column means and column variances (denominator `n - 1`).
    #[default]
    MomentInit,
    WarmStart(HREstimate),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub tol_loc: f64,
    pub tol_scale: f64,
    pub max_iter: usize,
    pub init: Init,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_loc: 1e-6,
            tol_scale: 1e-6,
            max_iter: 100,
            init: Init::MomentInit,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_loc > 0.0 && self.tol_scale > 0.0) {
            return Err(Error::InvalidInput(format!(
                "solver tolerances must be positive (got {}, {})",
                self.tol_loc, self.tol_scale
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be at least 1".into()));
        }
        Ok(())
    }

    /// Same tolerances, warm-started from `start`.
    pub fn warm_started(&self, start: &HREstimate) -> Self {
        Self {
            init: Init::WarmStart(start.clone()),
            ..self.clone()
        }
    }
}

/// Solves the estimating equations on the full sample.
pub fn hr_estimate(x: &DataMatrix, cfg: &SolverConfig) -> Result<HREstimate> {
    solve(x, &[], cfg)
}

/// Solves the estimating equations on the sample with rows `exclude.0` and
/// `exclude.1` removed.
pub fn hr_estimate_leave_out(
    x: &DataMatrix,
    exclude: (usize, usize),
    cfg: &SolverConfig,
) -> Result<HREstimate> {
    let (i, j) = exclude;
    if i >= x.nrows() || j >= x.nrows() || i == j {
        return Err(Error::InvalidInput(format!(
            "leave-two-out pair ({i}, {j}) must be two distinct rows of {}",
            x.nrows()
        )));
    }
    solve(x, &[i, j], cfg)
}

/// Runs `f(i, j, estimate_ij)` for every pair `i < j` with the leave-two-out
/// estimate started from `cfg.init`. Results come back in lexicographic pair order.
///
/// With a warm start, the first sweep of every pair is obtained by removing rows
/// `i` and `j` from the full-sample sign sums at the starting point.
pub fn leave_two_out_sweep<T, F>(x: &DataMatrix, cfg: &SolverConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, usize, &HREstimate) -> T + Sync,
{
    let n = x.nrows();
    if n < 4 {
        return Err(Error::SampleTooSmall { needed: 4, got: n });
    }
    cfg.validate()?;
    let rows = match &cfg.init {
        Init::WarmStart(start) => RowSigns::at(x, &start.theta, &start.d).ok(),
        Init::MomentInit => None,
    };
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    pairs
        .into_par_iter()
        .map(|(i, j)| {
            let first = rows.as_ref().map(|r| r.without(i, j));
            solve_from(x, &[i, j], cfg, first).map(|est| f(i, j, &est))
        })
        .collect()
}

/// Column sums of `U(eps_i)` and `U(eps_i)^2`, and the sum of `|eps_i|^{-1}`.
#[derive(Debug, Clone)]
struct SignSums {
    u: Vec<f64>,
    u2: Vec<f64>,
    inv_r: f64,
}

impl SignSums {
    fn zeros(p: usize) -> Self {
        Self {
            u: vec![0.0; p],
            u2: vec![0.0; p],
            inv_r: 0.0,
        }
    }

    /// Recomputes the sums over the included rows at `(theta, d)`.
    fn evaluate(
        &mut self,
        x: &DataMatrix,
        exclude: &[usize],
        theta: &[f64],
        inv_sqrt_d: &[f64],
        eps: &mut [f64],
    ) -> Result<()> {
        self.u.iter_mut().for_each(|v| *v = 0.0);
        self.u2.iter_mut().for_each(|v| *v = 0.0);
        self.inv_r = 0.0;
        for i in (0..x.nrows()).filter(|i| !exclude.contains(i)) {
            standardize_into(x.row(i), theta, inv_sqrt_d, eps);
            let r = sum_sq(eps).sqrt();
            if r < NORM_FLOOR {
                return Err(Error::DegenerateSample { row: i });
            }
            let inv_r = 1.0 / r;
            self.inv_r += inv_r;
            for ((su, su2), e) in self.u.iter_mut().zip(self.u2.iter_mut()).zip(eps.iter()) {
                let u = e * inv_r;
                *su += u;
                *su2 += u * u;
            }
        }
        Ok(())
    }
}

/// Per-row signs at a fixed `(theta, d)` together with their full-sample sums.
struct RowSigns {
    signs: DataMatrix,
    inv_r: Vec<f64>,
    total: SignSums,
}

impl RowSigns {
    fn at(x: &DataMatrix, theta: &[f64], d: &[f64]) -> Result<Self> {
        check_scales(d)?;
        let (n, p) = (x.nrows(), x.ncols());
        let inv_sqrt_d: Vec<f64> = d.iter().map(|v| 1.0 / v.sqrt()).collect();
        let mut signs = DataMatrix::zeros(n, p);
        let mut inv_r = Vec::with_capacity(n);
        let mut total = SignSums::zeros(p);
        for i in 0..n {
            let u = signs.row_mut(i);
            standardize_into(x.row(i), theta, &inv_sqrt_d, u);
            let r = sum_sq(u).sqrt();
            if r < NORM_FLOOR {
                return Err(Error::DegenerateSample { row: i });
            }
            let w = 1.0 / r;
            inv_r.push(w);
            total.inv_r += w;
            for ((su, su2), v) in total.u.iter_mut().zip(total.u2.iter_mut()).zip(u.iter_mut()) {
                *v *= w;
                *su += *v;
                *su2 += *v * *v;
            }
        }
        Ok(Self { signs, inv_r, total })
    }

    fn without(&self, i: usize, j: usize) -> SignSums {
        let (ui, uj) = (self.signs.row(i), self.signs.row(j));
        SignSums {
            u: (0..ui.len()).map(|k| self.total.u[k] - ui[k] - uj[k]).collect(),
            u2: (0..ui.len())
                .map(|k| self.total.u2[k] - ui[k] * ui[k] - uj[k] * uj[k])
                .collect(),
            inv_r: self.total.inv_r - self.inv_r[i] - self.inv_r[j],
        }
    }
}

fn solve(x: &DataMatrix, exclude: &[usize], cfg: &SolverConfig) -> Result<HREstimate> {
    solve_from(x, exclude, cfg, None)
}

/// Fixed-point recursion. `first`, when given, holds the sign sums at the
/// starting point and replaces the first evaluation sweep.
fn solve_from(
    x: &DataMatrix,
    exclude: &[usize],
    cfg: &SolverConfig,
    first: Option<SignSums>,
) -> Result<HREstimate> {
    cfg.validate()?;
    let n_total = x.nrows();
    let p = x.ncols();
    let m = n_total - exclude.len().min(n_total);
    if m < 2 {
        return Err(Error::SampleTooSmall {
            needed: exclude.len() + 2,
            got: n_total,
        });
    }
    if p < 2 {
        return Err(Error::DimensionTooSmall { needed: 2, got: p });
    }

    let (mut theta, mut d) = match &cfg.init {
        Init::MomentInit => moment_init(x, exclude)?,
        Init::WarmStart(start) => {
            for len in [start.theta.len(), start.d.len()] {
                if len != p {
                    return Err(Error::DimensionMismatch { expected: p, got: len });
                }
            }
            check_scales(&start.d)?;
            (start.theta.clone(), start.d.clone())
        }
    };

    let pf = p as f64;
    let mf = m as f64;
    let mut eps = vec![0.0; p];
    let mut inv_sqrt_d = vec![0.0; p];
    let mut sums = SignSums::zeros(p);
    let mut pending = first;

    let mut iterations = 0;
    loop {
        for (s, dv) in inv_sqrt_d.iter_mut().zip(&d) {
            *s = 1.0 / dv.sqrt();
        }
        match pending.take() {
            Some(given) => sums = given,
            None => sums.evaluate(x, exclude, &theta, &inv_sqrt_d, &mut eps)?,
        }

        let residual_location = sum_sq(&sums.u).sqrt() / mf;
        let residual_scale = sums
            .u2
            .iter()
            .map(|v| (pf * v / mf - 1.0).abs())
            .fold(0.0, f64::max);
        // Standardized length of the pending location step, max_j |dtheta_j| / sqrt(d_j).
        let step = sums.u.iter().map(|v| v.abs()).fold(0.0, f64::max) / sums.inv_r;

        let converged = residual_location <= cfg.tol_loc
            && residual_scale <= cfg.tol_scale
            && step < cfg.tol_loc;
        if converged || iterations == cfg.max_iter {
            return Ok(HREstimate {
                theta,
                d,
                iterations,
                converged,
                residual_location,
                residual_scale,
            });
        }

        for j in 0..p {
            let sqrt_d = d[j].sqrt();
            theta[j] += sqrt_d * sums.u[j] / sums.inv_r;
            d[j] *= pf * sums.u2[j] / mf;
            if !(d[j] > 0.0 && d[j].is_finite()) {
                return Err(Error::DegenerateColumn { column: j });
            }
        }
        iterations += 1;
    }
}

fn moment_init(x: &DataMatrix, exclude: &[usize]) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = x.ncols();
    let mut mean = vec![0.0; p];
    let mut m = 0usize;
    for i in (0..x.nrows()).filter(|i| !exclude.contains(i)) {
        for (acc, v) in mean.iter_mut().zip(x.row(i)) {
            *acc += v;
        }
        m += 1;
    }
    mean.iter_mut().for_each(|v| *v /= m as f64);
    let mut var = vec![0.0; p];
    for i in (0..x.nrows()).filter(|i| !exclude.contains(i)) {
        for ((acc, v), mu) in var.iter_mut().zip(x.row(i)).zip(&mean) {
            *acc += (v - mu) * (v - mu);
        }
    }
    for (column, v) in var.iter_mut().enumerate() {
        *v /= (m - 1) as f64;
        if !(*v > 0.0) {
            return Err(Error::Initialization { column });
        }
    }
    Ok((mean, var))
}
