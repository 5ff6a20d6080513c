//! Monte Carlo size and power experiments.
//!
//! Replication `r` of a scenario always draws from random stream `r` of the
//! scenario seed, and results are reduced in replication order, so reports do
//! not depend on the number of worker threads.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::baselines::{clx_max_test, combine_baselines, srivastava_sum_test, BaselineOutcome};
use crate::combo::{spatial_sign_tests, SpatialSignOutcome};
use crate::datagen::{Sampler, Scenario, SignalSpec};
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::format::{round6, sig6};
use crate::hr::SolverConfig;
use crate::stats::pearson_correlation;
use crate::sumtest::LeaveOutMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "SS-MAX")]
    SsMax,
    #[serde(rename = "SS-SUM")]
    SsSum,
    #[serde(rename = "SS-CC")]
    SsCc,
    #[serde(rename = "MAX")]
    Max,
    #[serde(rename = "SUM")]
    Sum,
    #[serde(rename = "COM")]
    Com,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::SsMax,
        Method::SsSum,
        Method::SsCc,
        Method::Max,
        Method::Sum,
        Method::Com,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::SsMax => "SS-MAX",
            Method::SsSum => "SS-SUM",
            Method::SsCc => "SS-CC",
            Method::Max => "MAX",
            Method::Sum => "SUM",
            Method::Com => "COM",
        }
    }

    pub fn is_spatial_sign(self) -> bool {
        matches!(self, Method::SsMax | Method::SsSum | Method::SsCc)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_uppercase().replace('_', "-");
        Method::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| Error::InvalidInput(format!("unknown method `{s}`")))
    }
}

fn all_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub tol_loc: f64,
    pub tol_scale: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let cfg = SolverConfig::default();
        Self {
            tol_loc: cfg.tol_loc,
            tol_scale: cfg.tol_scale,
            max_iter: cfg.max_iter,
        }
    }
}

impl SolverSettings {
    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            tol_loc: self.tol_loc,
            tol_scale: self.tol_scale,
            max_iter: self.max_iter,
            ..SolverConfig::default()
        }
    }
}

/// Sparsity levels `s` and signal strengths `delta`, giving `kappa = sqrt(delta / s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerGrid {
    pub sparsity: Vec<usize>,
    pub strength: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub scenarios: Vec<Scenario>,
    #[serde(default = "all_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default)]
    pub mode: LeaveOutMode,
    #[serde(default)]
    pub solver: SolverSettings,
    /// When present the plan describes a power experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<PowerGrid>,
}

fn default_alpha() -> f64 {
    0.05
}
fn default_replications() -> usize {
    1000
}
fn default_parallelism() -> usize {
    1
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() {
            return Err(Error::PlanValidation("no scenarios".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::PlanValidation("no methods".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::PlanValidation(format!("alpha must lie in (0,1), got {}", self.alpha)));
        }
        if self.replications == 0 {
            return Err(Error::PlanValidation("replications must be at least 1".into()));
        }
        if self.parallelism == 0 {
            return Err(Error::PlanValidation("parallelism must be at least 1".into()));
        }
        self.solver.config().validate().map_err(|e| Error::PlanValidation(e.to_string()))?;
        for (k, sc) in self.scenarios.iter().enumerate() {
            sc.validate()
                .map_err(|e| Error::PlanValidation(format!("scenario {k}: {e}")))?;
        }
        Ok(())
    }
}

/// One cell of a simulation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub scenario_id: String,
    pub family: String,
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub delta: f64,
    pub method: Method,
    pub alpha: f64,
    pub replications: usize,
    pub rejections: usize,
    pub rate: f64,
    pub mc_se: f64,
    /// Replications with a non-converged solve or a hard error.
    pub failures: usize,
    /// Mean of the method's statistic over replications that produced one.
    pub mean_statistic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub mode: LeaveOutMode,
    pub rows: Vec<ReportRow>,
}

pub const CSV_HEADER: &str = "scenario_id,family,n,p,s,delta,method,alpha,replications,rejections,rate,mc_se,failures,mean_statistic,mode";

fn mode_label(mode: LeaveOutMode) -> &'static str {
    match mode {
        LeaveOutMode::Exact => "exact",
        LeaveOutMode::SharedDhat => "shared-dhat (approximate)",
    }
}

impl SimulationReport {
    pub fn row(&self, scenario_id: &str, s: usize, delta: f64, method: Method) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.scenario_id == scenario_id && r.s == s && r.delta == delta && r.method == method)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.scenario_id,
                r.family,
                r.n,
                r.p,
                r.s,
                sig6(r.delta),
                r.method.name(),
                sig6(r.alpha),
                r.replications,
                r.rejections,
                sig6(r.rate),
                sig6(r.mc_se),
                r.failures,
                sig6(r.mean_statistic),
                mode_label(self.mode),
            )
            .expect("writing to a String");
        }
        out
    }

    /// Nested JSON: one object per (scenario, s, delta) with its method cells.
    pub fn to_json(&self) -> String {
        let mut groups: Vec<Value> = Vec::new();
        let mut last_key: Option<(String, usize, u64)> = None;
        for r in &self.rows {
            let key = (r.scenario_id.clone(), r.s, r.delta.to_bits());
            if last_key.as_ref() != Some(&key) {
                groups.push(json!({
                    "scenario_id": r.scenario_id,
                    "family": r.family,
                    "n": r.n,
                    "p": r.p,
                    "s": r.s,
                    "delta": round6(r.delta),
                    "alpha": round6(r.alpha),
                    "cells": [],
                }));
                last_key = Some(key);
            }
            let cells = groups.last_mut().expect("group pushed")["cells"]
                .as_array_mut()
                .expect("cells array");
            cells.push(json!({
                "method": r.method.name(),
                "replications": r.replications,
                "rejections": r.rejections,
                "rate": round6(r.rate),
                "mc_se": round6(r.mc_se),
                "failures": r.failures,
                "mean_statistic": round6(r.mean_statistic),
            }));
        }
        let doc = json!({
            "mode": mode_label(self.mode),
            "approximate": self.mode.is_approximate(),
            "scenarios": groups,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Solver and leave-two-out settings plus a worker count.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub solver: SolverConfig,
    pub mode: LeaveOutMode,
    pub parallelism: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            mode: LeaveOutMode::Exact,
            parallelism: 1,
        }
    }
}

impl From<&ExperimentPlan> for RunOptions {
    fn from(plan: &ExperimentPlan) -> Self {
        Self {
            solver: plan.solver.config(),
            mode: plan.mode,
            parallelism: plan.parallelism,
        }
    }
}

/// Evaluates `f(r)` for `r in 0..replications` on `parallelism` workers, in order.
pub fn map_replications<T, F>(replications: usize, parallelism: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| {
        (0..replications as u64)
            .into_par_iter()
            .map(&f)
            .collect()
    }))
}

/// Per-method result of one replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodDraw {
    pub p_value: Option<f64>,
    pub statistic: Option<f64>,
    pub failed: bool,
}

impl MethodDraw {
    fn error() -> Self {
        Self {
            p_value: None,
            statistic: None,
            failed: true,
        }
    }
}

/// Runs the requested methods on one data set. Errors are recorded as failed draws.
pub fn evaluate_methods(x: &DataMatrix, methods: &[Method], opts: &RunOptions) -> Vec<MethodDraw> {
    let ss = if methods.iter().any(|m| m.is_spatial_sign()) {
        Some(spatial_sign_tests(x, &opts.solver, opts.mode))
    } else {
        None
    };
    let needs_max = methods.iter().any(|m| matches!(m, Method::Max | Method::Com));
    let needs_sum = methods.iter().any(|m| matches!(m, Method::Sum | Method::Com));
    let max = needs_max.then(|| clx_max_test(x));
    let sum = needs_sum.then(|| srivastava_sum_test(x));

    let baseline = |out: &crate::error::Result<BaselineOutcome>| match out {
        Ok(o) => MethodDraw {
            p_value: Some(o.p_value),
            statistic: Some(o.statistic),
            failed: false,
        },
        Err(_) => MethodDraw::error(),
    };

    methods
        .iter()
        .map(|m| match m {
            Method::SsMax | Method::SsSum | Method::SsCc => match ss.as_ref().expect("computed") {
                Ok(o) => spatial_sign_draw(*m, o),
                Err(_) => MethodDraw::error(),
            },
            Method::Max => baseline(max.as_ref().expect("computed")),
            Method::Sum => baseline(sum.as_ref().expect("computed")),
            Method::Com => match (max.as_ref().expect("computed"), sum.as_ref().expect("computed")) {
                (Ok(a), Ok(b)) => baseline(&combine_baselines(a, b)),
                _ => MethodDraw::error(),
            },
        })
        .collect()
}

fn spatial_sign_draw(method: Method, o: &SpatialSignOutcome) -> MethodDraw {
    let max_failed = !o.max.hr.converged;
    let sum_failed = max_failed || o.sum.nonconverged_pairs > 0;
    let (p, stat, failed) = match method {
        Method::SsMax => (o.max.p_value, o.max.normalized, max_failed),
        Method::SsSum => (o.sum.p_value, o.sum.normalized, sum_failed),
        _ => (o.combo.p_cc, o.combo.cauchy_stat, sum_failed),
    };
    MethodDraw {
        p_value: Some(p),
        statistic: Some(stat),
        failed,
    }
}

fn run_cells(
    scenario: &Scenario,
    scenario_id: &str,
    s: usize,
    delta: f64,
    plan: &ExperimentPlan,
    opts: &RunOptions,
) -> Result<Vec<ReportRow>> {
    let sampler = Sampler::new(scenario)?;
    let draws = map_replications(plan.replications, opts.parallelism, |rep| {
        evaluate_methods(&sampler.draw(rep), &plan.methods, opts)
    })?;
    let reps = plan.replications;
    Ok(plan
        .methods
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let mut rejections = 0;
            let mut failures = 0;
            let mut stat_sum = 0.0;
            let mut stat_count = 0usize;
            for d in draws.iter().map(|row| row[k]) {
                rejections += usize::from(d.p_value.is_some_and(|p| p < plan.alpha));
                failures += usize::from(d.failed);
                if let Some(t) = d.statistic.filter(|t| t.is_finite()) {
                    stat_sum += t;
                    stat_count += 1;
                }
            }
            let rate = rejections as f64 / reps as f64;
            ReportRow {
                scenario_id: scenario_id.to_string(),
                family: scenario.family.label(),
                n: scenario.n,
                p: scenario.p,
                s,
                delta,
                method,
                alpha: plan.alpha,
                replications: reps,
                rejections,
                rate,
                mc_se: (rate * (1.0 - rate) / reps as f64).sqrt(),
                failures,
                mean_statistic: if stat_count > 0 {
                    stat_sum / stat_count as f64
                } else {
                    f64::NAN
                },
            }
        })
        .collect())
}

fn scenario_id(k: usize) -> String {
    format!("S{k}")
}

/// Empirical size of each method under every (null) scenario of the plan.
pub fn run_size_experiment(plan: &ExperimentPlan) -> Result<SimulationReport> {
    plan.validate()?;
    if let Some(k) = plan.scenarios.iter().position(|s| !s.signal.is_null()) {
        return Err(Error::PlanValidation(format!(
            "scenario {k} carries a non-null signal; size experiments need theta = 0"
        )));
    }
    let opts = RunOptions::from(plan);
    let mut rows = Vec::new();
    for (k, sc) in plan.scenarios.iter().enumerate() {
        rows.extend(run_cells(sc, &scenario_id(k), 0, 0.0, plan, &opts)?);
    }
    Ok(SimulationReport { mode: plan.mode, rows })
}

/// Power over a grid of sparsity levels and signal strengths. Every grid cell of a
/// scenario reuses the scenario seed, so cells differ only in `theta`.
pub fn run_power_experiment(
    plan: &ExperimentPlan,
    sparsity_grid: &[usize],
    strength_grid: &[f64],
) -> Result<SimulationReport> {
    plan.validate()?;
    if sparsity_grid.is_empty() || strength_grid.is_empty() {
        return Err(Error::PlanValidation("power grids must be nonempty".into()));
    }
    if let Some(d) = strength_grid.iter().find(|d| !(**d >= 0.0 && d.is_finite())) {
        return Err(Error::PlanValidation(format!("signal strength must be nonnegative, got {d}")));
    }
    for sc in &plan.scenarios {
        if let Some(s) = sparsity_grid.iter().find(|s| **s > sc.p || **s == 0) {
            return Err(Error::PlanValidation(format!(
                "sparsity {s} must lie in 1..={} for this scenario",
                sc.p
            )));
        }
    }
    let opts = RunOptions::from(plan);
    let mut rows = Vec::new();
    for (k, base) in plan.scenarios.iter().enumerate() {
        for &s in sparsity_grid {
            for &delta in strength_grid {
                let sc = Scenario {
                    signal: SignalSpec::with_strength(s, delta),
                    ..base.clone()
                };
                rows.extend(run_cells(&sc, &scenario_id(k), s, delta, plan, &opts)?);
            }
        }
    }
    Ok(SimulationReport { mode: plan.mode, rows })
}

/// Runs the three spatial-sign tests on `replications` draws of `scenario`.
pub fn spatial_sign_draws(
    scenario: &Scenario,
    replications: usize,
    opts: &RunOptions,
) -> Result<Vec<SpatialSignOutcome>> {
    let sampler = Sampler::new(scenario)?;
    map_replications(replications, opts.parallelism, |rep| {
        spatial_sign_tests(&sampler.draw(rep), &opts.solver, opts.mode)
    })?
    .into_iter()
    .collect()
}

/// Correlation between the normalized max-type and sum-type statistics under the null.
pub fn run_independence_diagnostic(
    scenario: &Scenario,
    replications: usize,
    opts: &RunOptions,
) -> Result<f64> {
    if replications < 30 {
        return Err(Error::InsufficientReplications {
            needed: 30,
            got: replications,
        });
    }
    if !scenario.signal.is_null() {
        return Err(Error::PlanValidation(
            "independence diagnostic needs a null scenario".into(),
        ));
    }
    let draws = spatial_sign_draws(scenario, replications, opts)?;
    let max: Vec<f64> = draws.iter().map(|d| d.max.normalized).collect();
    let sum: Vec<f64> = draws.iter().map(|d| d.sum.normalized).collect();
    pearson_correlation(&max, &sum)
}
